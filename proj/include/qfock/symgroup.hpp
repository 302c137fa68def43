#pragma once

#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qfock/caps.hpp"
#include "qfock/word.hpp"

namespace qfock {

/// A bijection of {1..n}, stored by its images p(1), ..., p(n).
class Permutation {
public:
    explicit Permutation(std::vector<int> images);
    static Permutation identity(int n);

    int size() const noexcept { return static_cast<int>(images_.size()); }
    /// Image of position i (1-based).
    int operator()(int i) const { return images_.at(static_cast<std::size_t>(i - 1)); }
    const std::vector<int>& images() const noexcept { return images_; }

    Permutation inverse() const;
    bool operator==(const Permutation&) const = default;
    auto operator<=>(const Permutation&) const = default;

private:
    std::vector<int> images_;
};

/// (a o b)(i) = a(b(i)).
Permutation compose(const Permutation& a, const Permutation& b);

/// Number of pairs i < j with p(i) > p(j).
int inversions(const Permutation& p);

/// The cycle (k -> l): k+i -> k+i+1 for 0 <= i < l-k, and l -> k.
Permutation cycle_perm(int k, int l, int n);

/// Image of p in S_{n+1} fixing 1 and acting on positions 2..n+1.
Permutation embed_fixing_first(const Permutation& p);

/// All n! permutations in lexicographic order of their image tuples.
std::vector<Permutation> all_permutations(int n);

/// Dense real matrix indexed by pairs of length-n words in lexicographic order.
struct WordMatrix {
    int length = 0;
    int alphabet = 1;
    Eigen::MatrixXd entries;
};

/// Finitely supported element of the real group algebra of S_n.
/// Multiplication follows composition: (a . b) = a o b.
class GroupAlgebraElement {
public:
    explicit GroupAlgebraElement(int n) : n_(n) {}
    static GroupAlgebraElement unit(int n);
    static GroupAlgebraElement basis(const Permutation& p, double coeff = 1.0);

    int degree() const noexcept { return n_; }
    const std::map<Permutation, double>& terms() const noexcept { return terms_; }

    void add(const Permutation& p, double coeff);
    GroupAlgebraElement& operator+=(const GroupAlgebraElement& other);
    GroupAlgebraElement operator*(const GroupAlgebraElement& other) const;
    GroupAlgebraElement scaled(double s) const;

private:
    int n_;
    std::map<Permutation, double> terms_;
};

/// 0/1 matrix sending the basis word w to (w_{p(1)}, ..., w_{p(n)}).
///
/// This is the action of p^{-1} under the convention
/// pi^{-1}(z_1 (x) ... (x) z_n) = z_{pi(1)} (x) ... (x) z_{pi(n)}, so the map
/// p -> perm_action(p) is an anti-homomorphism:
/// perm_action(a) * perm_action(b) = perm_action(b o a).
WordMatrix perm_action(const Permutation& p, int alphabet, const SizeCaps& caps = {});

/// Image of a group-algebra element under perm_action (linear extension).
WordMatrix represent(const GroupAlgebraElement& x, int alphabet, const SizeCaps& caps = {});

/// P_q^(n): sum over S_n of q^{inversions} times perm_action.
WordMatrix pq_direct(int n, int alphabet, double q, const SizeCaps& caps = {});

/// M_n = sum_k q^{k-1} (1 -> k), as a word matrix.
WordMatrix mn_matrix(int n, int alphabet, double q, const SizeCaps& caps = {});

/// M_n as a group-algebra element.
GroupAlgebraElement mn_element(int n, double q);

/// P_q^(n) through P^(n) = embed(P^(n-1)) . M_n, evaluated on word space.
WordMatrix pq_recursive(int n, int alphabet, double q, const SizeCaps& caps = {});

/// Result of inverting M_n.
struct MnInverse {
    WordMatrix inverse;
    /// max-abs entry of M_n * inverse - I.
    double residual = 0.0;
    /// Residual of the product formula before any fallback.
    double formula_residual = 0.0;
    /// True when the product formula passed the 1e-8 residual check.
    bool product_formula_used = true;
    std::string reading;
};

/// Inverse of M_n through the product formula
///   M_n^{-1} = prod_{j=n-1..1} (1 - q^j (1 -> j+1)) . prod_{j=n-2..0} (1 - q^{n-j} (2 -> n-j))^{-1},
/// where every factor of the second product is inverted individually and both
/// products run in the printed order. The result is validated against M_n; falls back to a direct LU inverse when the residual exceeds 1e-8.
MnInverse mn_inverse(int n, int alphabet, double q, const SizeCaps& caps = {});

/// The product formula alone, as a group-algebra element.
GroupAlgebraElement mn_inverse_element(int n, double q);

}  // namespace qfock
