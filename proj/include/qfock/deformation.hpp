#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "qfock/fock_space.hpp"
#include "qfock/operators.hpp"

namespace qfock {

/// Element sum_{u,v} T[u,v] psi_u (x) psi_v of L^2(M) (x) L^2(M^op), M = Gamma_q(R^N).
///
/// Equivalently the vector sum T[u,v] u (x) v of F (x) F. Under the
/// identification a (x) b <-> (x -> a tau(b x)) it is the operator T Rev G on F.
struct HSElement {
    FockContext ctx;
    Eigen::MatrixXcd coeffs;

    HSElement(FockContext c, Eigen::MatrixXcd m);
    static HSElement zero(const FockContext& ctx);
    /// 1 (x) 1 = Omega (x) Omega.
    static HSElement unit(const FockContext& ctx);
    /// a (x) b for graded vectors a, b.
    static HSElement tensor(const FockContext& ctx, const GradedVector& a, const GradedVector& b);

    HSElement operator+(const HSElement& o) const;
    HSElement operator-(const HSElement& o) const;
    HSElement operator*(cplx s) const;

    /// Matrix of the Hilbert-Schmidt operator x -> sum a tau(b x) on F.
    Eigen::MatrixXcd as_operator() const;
    GradedVector apply(const GradedVector& x) const;
    /// Real structure J(a (x) b) = b* (x) a*.
    HSElement real_structure() const;
    /// (1 (x) tau): keeps the Omega column of the right leg.
    GradedVector partial_trace_right() const;
    /// Restriction to leg levels <= level (re-expressed in the smaller context).
    HSElement truncated(int level) const;
    /// Re-expression at a larger or smaller context level (zero padding / dropping).
    HSElement regraded(const FockContext& target) const;

    bool is_real(double tol = 0.0) const;
};

/// <S, T> = tr(S^H G T G).
cplx hs_inner(const HSElement& s, const HSElement& t);
double hs_norm(const HSElement& t);

/// Xi_q^Q as the graded-diagonal operator q^n on levels n <= Q (Q < 0 means Q = L).
FockOperator xi_multiplier(const FockContext& ctx, int Q = -1);

/// Xi_q^Q as an element of L^2(M) (x) L^2(M^op): coefficients q^n Gamma_n^{-1}[u, rev v].
HSElement xi_as_hs(const FockContext& ctx, int Q = -1);
/// Same element assembled as sum_n q^n sum_i p_i (x) p_i* from the orthonormal vectors.
HSElement xi_as_hs_orthonormal(const FockContext& ctx, int Q = -1);

/// A linear map Y -> sum_k A_k Y B_k^T on coefficient matrices of F_{<=L} (x) F_{<=L}.
class DoubledAction {
public:
    /// x (x) y -> sum a_k x (x) y b_k for T = sum a_k (x) b_k (left multiplication in M (x) M^op).
    static DoubledAction left(const HSElement& t);
    /// S -> S . T (right multiplication in M (x) M^op): x (x) y -> sum x a_k (x) b_k y.
    static DoubledAction right(const HSElement& t);

    const FockContext& ctx() const noexcept { return ctx_; }
    std::int64_t dimension() const noexcept;  // (dim F_{<=L})^2

    Eigen::MatrixXcd apply(const Eigen::MatrixXcd& y) const;
    HSElement apply(const HSElement& y) const;
    /// Matrix on vec(Y) (column-major) in word coordinates; capped by max_doubled_dense.
    Eigen::MatrixXcd dense() const;
    /// Operator norm for the metric G (x) G, by Lanczos on A^H A (deterministic start).
    double op_norm(double rel_tol = 1e-12, int max_iter = 300) const;

private:
    DoubledAction(FockContext ctx, bool real);
    FockContext ctx_;
    bool real_;
    std::vector<Eigen::MatrixXd> a_;
    std::vector<Eigen::MatrixXcd> b_;
    std::vector<Eigen::MatrixXd> b_real_;
};

/// Checks the doubled dimension against the caps.
void check_doubled(const FockContext& ctx);

/// Product S . T in the truncated algebra, realized as lr_action(S) applied to T.
HSElement hs_product(const HSElement& s, const HSElement& t);

struct ConstantsReport {
    double q = 0.0;
    int N = 1;
    double c_q = 1.0;  // C_{|q|}
    double nu = 0.0;   // +inf when |q| N >= 1
    double rho = 0.0;  // +inf when |q| sqrt(N) >= 1
    bool nu_lt_1 = true;
    bool rho_lt_1 = true;
};

/// The closed forms C_{|q|}^3 [4x/(1-x) + 5x^2/(1-x)^2 + 2x^3/(1-x)^3] with x = |q|N (nu)
/// and x = |q| sqrt(N) (rho).
ConstantsReport constants(double q, int N);

struct NeumannResult {
    HSElement u;
    /// residuals[k] = doubled-space norm of Xi . U_k - 1 (x) 1, k = 0..n_terms.
    std::vector<double> residuals;
    /// Residual increased over 3 consecutive terms.
    bool nonconvergence_warning = false;
    /// rho(q, N) >= 1 at the working parameters.
    bool rho_warning = false;
};

/// U_n = sum_{i<=n} (-1)^i (Xi - 1 (x) 1)^i with products in the truncated algebra.
/// Residuals use the identity Xi U_n - 1 = (-1)^n (Xi - 1)^{n+1}, which holds
/// exactly in the truncated algebra and avoids cancellation.
NeumannResult xi_inverse_neumann(const FockContext& ctx, int n_terms, bool with_residuals = true);

/// Direct residual lr(Xi) U_n - 1 (x) 1, for cross-checking the identity above.
HSElement neumann_defect_direct(const FockContext& ctx, const HSElement& u);

/// Exact compression of right multiplication by Xi^Q to legs of level <= leg_level.
struct RightXiCompression {
    explicit RightXiCompression(FockContext l) : legs(std::move(l)) {}
    FockContext legs;              // context at leg_level
    int Q = 0;
    Eigen::MatrixXd gram_form;     // <u' (x) v', rho(Xi^Q) (u (x) v)>, vec index u + D v
    Eigen::MatrixXd action;        // coordinates of the compression
    Eigen::MatrixXd frame;         // symmetric matrix of the compression in an orthonormal frame
    Eigen::VectorXd spectrum;      // eigenvalues of frame
    bool psd = false;              // min eigenvalue >= -1e-10 max
    Eigen::MatrixXd sqrt_action;   // coordinates of the PSD square root (empty unless psd)
    Eigen::MatrixXd inv_sqrt_action;  // coordinates of its inverse (empty unless psd and invertible)
};

/// Q < 0 means the untruncated Xi (all levels up to 2 * leg_level contribute).
RightXiCompression right_xi_compression(const FockContext& ctx, int leg_level, int Q = -1);
/// Same for the multiplier sum_n weights[n] P_n.
RightXiCompression right_level_multiplier_compression(const FockContext& ctx, int leg_level,
                                                      const std::vector<double>& weights);

/// Lanczos estimate of the largest eigenvalue of a Hermitian positive semi-definite map.
double lanczos_max_eig(const std::function<Eigen::VectorXcd(const Eigen::VectorXcd&)>& apply,
                       Eigen::Index dim, double rel_tol = 1e-12, int max_iter = 300);
double lanczos_max_eig_real(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& apply,
                            Eigen::Index dim, double rel_tol = 1e-12, int max_iter = 300);

}  // namespace qfock
