#pragma once

#include <optional>

#include <Eigen/Dense>

#include "qfock/fock_space.hpp"
#include "qfock/ncpoly.hpp"

namespace qfock {

/// Matrix of an operator on F_{<=L} in word coordinates.
///
/// Operators built here are compressions P_{<=L} A P_{<=L} of the true
/// operators on the full Fock space. Moments of words of length <= L are
/// therefore exact, operator norms are lower bounds.
struct FockOperator {
    FockContext ctx;
    Eigen::MatrixXcd matrix;
    /// +1 raises the level by one, -1 lowers it by one, 0 is unconstrained.
    std::optional<int> grading_shift;

    FockOperator(FockContext c, Eigen::MatrixXcd m, std::optional<int> shift = std::nullopt);

    static FockOperator identity(const FockContext& ctx);
    static FockOperator zero(const FockContext& ctx);

    GradedVector apply(const GradedVector& v) const;

    FockOperator operator+(const FockOperator& o) const;
    FockOperator operator-(const FockOperator& o) const;
    FockOperator operator*(const FockOperator& o) const;
    FockOperator operator*(cplx s) const;

    /// Verifies the grading tag against the matrix (max off-tag entry <= tol).
    bool grading_consistent(double tol = 0.0) const;
};

/// l(h_i) and l(h_i)*.
FockOperator creation(int i, const FockContext& ctx);
FockOperator annihilation(int i, const FockContext& ctx);

/// r(h_i) and its q-adjoint (computed through `adjoint`).
FockOperator right_creation(int i, const FockContext& ctx);
FockOperator right_annihilation(int i, const FockContext& ctx);
/// Mirror formula sum_k q^{n-k} <h_k, h_i> (delete position k), for cross-checks.
FockOperator right_annihilation_formula(int i, const FockContext& ctx);

/// X_i = l(h_i) + l(h_i)*.
FockOperator gaussian(int i, const FockContext& ctx);
/// Right multiplication by X_i on L^2(M), i.e. r(h_i) + r(h_i)*.
FockOperator right_gaussian(int i, const FockContext& ctx);

/// G^{-1} A^H G with G the block-diagonal Gram metric.
FockOperator adjoint(const FockOperator& a);

/// Compression of the Wick word psi_w.
FockOperator wick_word(const Word& w, const FockContext& ctx);
/// Compression of psi(xi) = sum_w xi_w psi_w.
FockOperator wick_operator(const GradedVector& xi, const FockContext& ctx);
/// Exact compression of P(X_1, ..., X_N) (not the product of compressions).
FockOperator poly_operator(const NCPoly& p, const FockContext& ctx);

/// tau_q(A) = <Omega, A Omega>_q.
cplx trace_state(const FockOperator& a);

/// Largest singular value with respect to the q-metric.
double op_norm(const FockOperator& a);

/// Same, restricted to input vectors supported on levels <= max_level.
double op_norm_on_levels(const FockOperator& a, int max_level);

/// C_q = prod_{m>=1} (1 - q^m)^{-1}; product stopped once |1 - factor| < 1e-15
/// (at most 10^6 factors).
double c_q(double q);

struct BozejkoReport {
    int level = 0;
    double lhs = 0.0;    // compressed ||psi(xi)||
    double bound = 0.0;  // C_{|q|}^{3/2} (n+1) ||xi||_2
    double l2 = 0.0;     // ||xi||_2
    bool pass = false;        // lhs <= bound + 1e-9
    bool lower_pass = false;  // lhs >= ||xi||_2 - 1e-9
};

/// Haagerup-Bozejko inequality for a homogeneous xi.
BozejkoReport bozejko_check(const GradedVector& xi, const FockContext& ctx);

}  // namespace qfock
