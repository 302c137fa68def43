#pragma once

#include <complex>
#include <map>
#include <string>

#include "qfock/fock_space.hpp"
#include "qfock/word.hpp"

namespace qfock {

/// Non-commutative polynomial in X_1, ..., X_N: monomial X_{i1} ... X_{ik} keyed by its word.
class NCPoly {
public:
    NCPoly() = default;
    static NCPoly constant(cplx c);
    static NCPoly variable(int i);
    static NCPoly monomial(const Word& w, cplx c = 1.0);
    /// The Wick polynomial psi_w expanded in monomials (q-dependent).
    static NCPoly wick(const Word& w, double q);
    /// psi(xi) = sum_w xi_w psi_w for a graded vector.
    static NCPoly wick(const GradedVector& xi, double q);

    const std::map<Word, cplx>& terms() const noexcept { return terms_; }
    int degree() const;  // -1 for the zero polynomial
    /// Largest letter appearing (0 for constants).
    int max_letter() const;
    bool is_zero() const { return terms_.empty(); }

    void add(const Word& w, cplx c);
    NCPoly& operator+=(const NCPoly& o);
    NCPoly& operator-=(const NCPoly& o);
    NCPoly operator+(const NCPoly& o) const;
    NCPoly operator-(const NCPoly& o) const;
    NCPoly operator*(const NCPoly& o) const;
    NCPoly operator*(cplx s) const;

    /// P*: reverse every monomial and conjugate its coefficient.
    NCPoly star() const;

    std::string to_string() const;

private:
    std::map<Word, cplx> terms_;
};

/// P(X) Omega in the context's coordinates; exact when deg P <= L.
GradedVector apply_to_vacuum(const NCPoly& p, const FockContext& ctx);

}  // namespace qfock
