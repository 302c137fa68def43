#pragma once

#include <memory>
#include <string>
#include <vector>

#include "qfock/deformation.hpp"
#include "qfock/ncpoly.hpp"

namespace qfock {

enum class DerivationKind { FDQ, Q_COMMUTATOR, Q_SQRT, Q_TRUNCATED, DOUBLING };

struct DerivationTag {
    DerivationKind kind = DerivationKind::FDQ;
    int Q = 0;  // used by Q_TRUNCATED only

    static DerivationTag fdq() { return {DerivationKind::FDQ, 0}; }
    static DerivationTag commutator() { return {DerivationKind::Q_COMMUTATOR, 0}; }
    static DerivationTag sqrt() { return {DerivationKind::Q_SQRT, 0}; }
    static DerivationTag truncated(int Q) { return {DerivationKind::Q_TRUNCATED, Q}; }
    static DerivationTag doubling() { return {DerivationKind::DOUBLING, 0}; }
    std::string name() const;
};

/// The derivation with generator values
///   FDQ:          d_j(X_i) = [i = j] 1 (x) 1
///   Q_COMMUTATOR: d_j(X_i) = [i = j] Xi
///   Q_TRUNCATED:  d_j(X_i) = [i = j] Xi^Q
///   Q_SQRT:       the square root of right multiplication by Xi applied to the FDQ value
/// extended by the Leibniz rule, P . (a (x) b) . R = P a (x) b R.
///
/// Results are the exact truncations to legs of level <= L (deg P <= L is required).
/// Q_SQRT uses the positive square root of the exact compression of right multiplication
/// by Xi to legs of level <= L - 1, where all FDQ values of degree <= L live.
/// DOUBLING is not an HS-valued derivation; use derive_doubling.
HSElement derive(const NCPoly& p, int j, const DerivationTag& tag, const FockContext& ctx);

/// d^_k(P) # X_{k'} Omega in the doubled context (letters 1..2N, k' = k + N): every monomial
/// contributes the sum over its occurrences of k with that occurrence replaced by k'.
GradedVector derive_doubling(const NCPoly& p, int k, const FockContext& ctx);

/// The same quantity from the Wick coordinates of xi: sum_w xi_w sum_{j: w_j = k} e_{w with w_j -> k'}.
GradedVector doubling_vector(const GradedVector& xi, int k, const FockContext& ctx);

/// Cached compression of right multiplication by Xi (Q < 0) or Xi^Q to legs <= leg_level.
std::shared_ptr<const RightXiCompression> cached_right_xi(const FockContext& ctx, int leg_level, int Q = -1);

/// Norm of the difference between the HS operator of d^(q)_j(P) and [psi(P), r(h_j)],
/// restricted to inputs of level <= L - deg P - 1 (where both sides are exact).
double commutator_check(const NCPoly& p, int j, const FockContext& ctx);

/// (1 (x) tau) d^(q)_j(P).
GradedVector partial_tau(const NCPoly& p, int j, const FockContext& ctx);

struct NumberReport {
    cplx lhs = 0.0;
    cplx rhs = 0.0;
    double residual = 0.0;
    /// Agreement of the coordinate formula with derive_doubling on the Wick polynomial.
    double crosscheck = 0.0;
};

/// sum_k <d^_k psi(xi), d^_k psi(eta)>_q against n [n = m] <xi, eta>_q, for homogeneous xi, eta.
NumberReport number_check(const GradedVector& xi, const GradedVector& eta, const FockContext& ctx);

/// Adjoint of d^(q)_j: (a (x) b) -> a X_j b - r(h_j)*(a) b - a l(h_j)*(b), truncated to level L.
GradedVector dq_star(const HSElement& t, int j);

struct ConjugateResult {
    GradedVector xi;
    /// ||xi_j(n)||_q for n = 0..n_terms.
    std::vector<double> norms;
    bool nonconvergence_warning = false;
    bool rho_warning = false;
};

/// dq_star(U_n, j) with U_n the Neumann approximant of Xi^{-1}.
ConjugateResult conjugate_variable(int j, int n_terms, const FockContext& ctx);
double fisher_estimate(int n_terms, const FockContext& ctx);

struct LipschitzReport {
    double l2_norm = 0.0;
    double lr_op_norm = 0.0;
};

/// d_k applied to the polynomial psi(xi); reports its HS norm and the norm of its left action.
LipschitzReport lipschitz_of(const GradedVector& xi, int k, const FockContext& ctx);
LipschitzReport lipschitz_diagnostic(int j, int k, int n_terms, const FockContext& ctx);

/// One row of the conjugate-variable convergence series.
struct ConjugateRow {
    int n = 0;
    double residual = 0.0;            // doubled-space norm of Xi U_n - 1 (x) 1
    std::vector<double> xi_norms;     // ||xi_j(n)||_q, j = 1..N
    double fisher = 0.0;
    std::vector<double> lipschitz;    // lr norms of d_k xi_j(n), index (j - 1) * N + (k - 1)
};

struct ConjugateSeries {
    std::vector<ConjugateRow> rows;
    bool nonconvergence_warning = false;
    bool rho_warning = false;
};

/// The whole series n = 0..n_terms, sharing the Neumann terms between all j.
ConjugateSeries conjugate_series(int n_terms, const FockContext& ctx, bool with_lipschitz = true);

struct EquivalenceReport {
    int k = 1;
    int Q = 0;
    int leg_level = 0;
    bool available = false;  // false when the compression of Xi is not positive

    double fdq = 0.0;        // ||d_k P||
    double sqrt = 0.0;       // ||d~_k P|| = <d P, Xi-compression d P>^{1/2}
    double commutator = 0.0; // ||d^(q)_k P|| (compressed to the legs)
    double truncated = 0.0;  // ||d^(q,Q)_k P|| (compressed to the legs)

    double xi_half = 0.0;        // ||Xi^{1/2}||
    double xi_minus_half = 0.0;  // ||Xi^{-1/2}||
    double xi_q = 0.0;           // ||Xi^Q||
    double xi_q_minus_xi = 0.0;  // ||Xi^Q - Xi||

    bool first = false;   // d^(q) <= |Xi^{1/2}| d~ <= |Xi^{1/2}|^2 d
    bool second = false;  // d <= |Xi^{-1/2}| d~ <= |Xi^{-1/2}|^2 d^(q)
    bool third = false;   // d^(q)(1 - |Xi^Q - Xi||Xi^{-1/2}|^2) <= d^(q,Q) <= |Xi^Q| d

    /// ||S dP|| against sqrt, and the Q_COMMUTATOR derivation against the compression.
    double sqrt_crosscheck = 0.0;
    double commutator_crosscheck = 0.0;
    /// ||d^_k P # X_{k'}||^2 against ||d~_k P||^2.
    double doubling_crosscheck = 0.0;
};

EquivalenceReport equivalence_check(const NCPoly& p, int k, const FockContext& ctx, int Q = -1);

}  // namespace qfock
