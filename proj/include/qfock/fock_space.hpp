#pragma once

#include <complex>
#include <cstdint>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "qfock/caps.hpp"
#include "qfock/symgroup.hpp"
#include "qfock/word.hpp"

namespace qfock {

using cplx = std::complex<double>;

/// Gram data of one level: Gamma_n together with its spectral functions.
struct GramBlock {
    int n = 0;
    WordMatrix gamma;       // Gamma_n = P_q^(n) in the word basis
    WordMatrix b;           // Gamma_n^{-1/2}
    WordMatrix sqrt_gamma;  // Gamma_n^{1/2}
    WordMatrix inverse;     // Gamma_n^{-1}
    double min_eig = 0.0;
    double max_eig = 0.0;
};

class WickTable;

/// The truncated q-Fock space F_{<=L} over R^N.
///
/// Contexts are cheap handles. Gram blocks depend only on (N, q) and are
/// shared between every context with the same alphabet and deformation, so
/// `with_level` can move up and down in truncation without recomputation.
class FockContext {
public:
    /// Validates the parameters; see make_context.
    FockContext(int alphabet, double q, int level, SizeCaps caps = SizeCaps::from_environment());

    int alphabet() const noexcept;
    double q() const noexcept;
    int level() const noexcept;
    const SizeCaps& caps() const noexcept;
    const WordIndexer& indexer() const noexcept;
    std::int64_t dimension() const noexcept;

    /// Gram block of level n. Levels above `level()` are allowed (extended computations)
    /// as long as N^n respects the caps.
    const GramBlock& gram(int n) const;

    /// Block-diagonal metric G = sum_n Gamma_n over levels 0..level(), and its spectral functions.
    const Eigen::MatrixXd& metric() const;
    const Eigen::MatrixXd& metric_sqrt() const;
    const Eigen::MatrixXd& metric_inv_sqrt() const;
    const Eigen::MatrixXd& metric_inverse() const;

    /// Word-reversal permutation matrix (an involution preserving levels).
    const Eigen::MatrixXd& reversal() const;

    /// Compressions of the Wick words psi_u, |u| <= level(), to F_{<=level()}.
    const WickTable& wick_table() const;

    /// Same (N, q, caps) at another truncation level, sharing the Gram cache.
    FockContext with_level(int level) const;

    /// Context over the doubled alphabet {1..2N} (letter k' = k + N), same q and level.
    FockContext doubled() const;

    bool same_space(const FockContext& other) const noexcept;

private:
    struct Impl;
    explicit FockContext(std::shared_ptr<const Impl> impl);
    std::shared_ptr<const Impl> impl_;
};

/// make_context(N, q, L) with distinct errors for bad q, bad N, negative L and capacity.
FockContext make_context(int alphabet, double q, int level,
                         SizeCaps caps = SizeCaps::from_environment());

/// Element of the truncated Fock space in word coordinates (levels 0..top concatenated).
struct GradedVector {
    int alphabet = 1;
    int top = 0;
    Eigen::VectorXcd coeffs;

    static GradedVector zero(const FockContext& ctx);
    static GradedVector vacuum(const FockContext& ctx);
    static GradedVector basis(const FockContext& ctx, const Word& w);

    /// Coefficients of level n (length N^n).
    Eigen::VectorXcd level(int n) const;
    /// Levels carrying a coefficient of modulus above tol.
    std::vector<int> support_levels(double tol = 0.0) const;

    GradedVector& operator+=(const GradedVector& o);
    GradedVector& operator-=(const GradedVector& o);
    GradedVector operator+(const GradedVector& o) const;
    GradedVector operator-(const GradedVector& o) const;
    GradedVector operator*(cplx s) const;
};

/// Throws ContextMismatch unless v lives in ctx.
void require_same(const FockContext& ctx, const GradedVector& v);

/// sum_n <v_n, Gamma_n w_n>_0, conjugate-linear in v.
cplx q_inner(const FockContext& ctx, const GradedVector& v, const GradedVector& w);
/// sqrt(q_inner(v, v)).
double q_norm(const FockContext& ctx, const GradedVector& v);

/// Gram block of level n <= L.
const GramBlock& gram(int n, const FockContext& ctx);

/// The N^n vectors whose level-n coordinates are the columns of B_n = Gamma_n^{-1/2}.
std::vector<GradedVector> orthonormal_vectors(int n, const FockContext& ctx);

/// Re-expresses v at another top level (padding with zeros or dropping levels).
GradedVector regrade(const GradedVector& v, int top);

}  // namespace qfock
