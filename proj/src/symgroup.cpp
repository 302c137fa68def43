#include "qfock/symgroup.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>

#include "qfock/errors.hpp"

namespace qfock {

SizeCaps SizeCaps::from_environment() {
    SizeCaps caps;
    if (const char* env = std::getenv("QFOCK_SIZE_CAP")) {
        char* end = nullptr;
        const long long v = std::strtoll(env, &end, 10);
        if (end == env || *end != '\0' || v <= 0) {
            throw RangeError(std::string("QFOCK_SIZE_CAP must be a positive integer, got '") + env +
                             "'");
        }
        caps.max_dimension = v;
    }
    return caps;
}

Permutation::Permutation(std::vector<int> images) : images_(std::move(images)) {
    const int n = size();
    std::vector<bool> seen(static_cast<std::size_t>(n), false);
    for (int v : images_) {
        if (v < 1 || v > n || seen[static_cast<std::size_t>(v - 1)]) {
            throw RangeError("images do not form a bijection of {1.." + std::to_string(n) + "}");
        }
        seen[static_cast<std::size_t>(v - 1)] = true;
    }
}

Permutation Permutation::identity(int n) {
    std::vector<int> im(static_cast<std::size_t>(n));
    std::iota(im.begin(), im.end(), 1);
    return Permutation(std::move(im));
}

Permutation Permutation::inverse() const {
    std::vector<int> im(images_.size());
    for (std::size_t i = 0; i < images_.size(); ++i) {
        im[static_cast<std::size_t>(images_[i] - 1)] = static_cast<int>(i) + 1;
    }
    return Permutation(std::move(im));
}

Permutation compose(const Permutation& a, const Permutation& b) {
    if (a.size() != b.size()) throw RangeError("composing permutations of different sizes");
    std::vector<int> im(static_cast<std::size_t>(a.size()));
    for (int i = 1; i <= a.size(); ++i) im[static_cast<std::size_t>(i - 1)] = a(b(i));
    return Permutation(std::move(im));
}

int inversions(const Permutation& p) {
    int count = 0;
    const auto& im = p.images();
    for (std::size_t i = 0; i < im.size(); ++i)
        for (std::size_t j = i + 1; j < im.size(); ++j)
            if (im[i] > im[j]) ++count;
    return count;
}

Permutation cycle_perm(int k, int l, int n) {
    if (k < 1 || k > l || l > n) {
        throw RangeError("cycle (" + std::to_string(k) + "->" + std::to_string(l) +
                         ") needs 1 <= k <= l <= n=" + std::to_string(n));
    }
    std::vector<int> im(static_cast<std::size_t>(n));
    std::iota(im.begin(), im.end(), 1);
    for (int i = k; i < l; ++i) im[static_cast<std::size_t>(i - 1)] = i + 1;
    im[static_cast<std::size_t>(l - 1)] = k;
    return Permutation(std::move(im));
}

Permutation embed_fixing_first(const Permutation& p) {
    std::vector<int> im{1};
    for (int v : p.images()) im.push_back(v + 1);
    return Permutation(std::move(im));
}

std::vector<Permutation> all_permutations(int n) {
    std::vector<int> im(static_cast<std::size_t>(n));
    std::iota(im.begin(), im.end(), 1);
    std::vector<Permutation> out;
    do {
        out.emplace_back(im);
    } while (std::next_permutation(im.begin(), im.end()));
    return out;
}

GroupAlgebraElement GroupAlgebraElement::unit(int n) { return basis(Permutation::identity(n)); }

GroupAlgebraElement GroupAlgebraElement::basis(const Permutation& p, double coeff) {
    GroupAlgebraElement x(p.size());
    x.add(p, coeff);
    return x;
}

void GroupAlgebraElement::add(const Permutation& p, double coeff) {
    if (p.size() != n_) throw RangeError("permutation degree mismatch in group algebra");
    terms_[p] += coeff;
}

GroupAlgebraElement& GroupAlgebraElement::operator+=(const GroupAlgebraElement& other) {
    for (const auto& [p, c] : other.terms_) add(p, c);
    return *this;
}

GroupAlgebraElement GroupAlgebraElement::operator*(const GroupAlgebraElement& other) const {
    GroupAlgebraElement out(n_);
    for (const auto& [a, x] : terms_)
        for (const auto& [b, y] : other.terms_) out.add(compose(a, b), x * y);
    return out;
}

GroupAlgebraElement GroupAlgebraElement::scaled(double s) const {
    GroupAlgebraElement out(n_);
    for (const auto& [p, c] : terms_) out.add(p, c * s);
    return out;
}

namespace {

void check_word_space(int n, int alphabet, const SizeCaps& caps) {
    if (n < 0) throw RangeError("word length must be >= 0");
    if (alphabet < 1) throw RangeError("alphabet size must be >= 1");
    const std::int64_t dim = ipow(alphabet, n);
    if (dim > caps.max_dimension) {
        throw CapacityError("word matrix dimension N^n (n=" + std::to_string(n) + ")", dim,
                            caps.max_dimension);
    }
}

void check_perm_sum(int n, int alphabet, const SizeCaps& caps) {
    check_word_space(n, alphabet, caps);
    if (n > caps.max_perm_length) {
        throw CapacityError("symmetric-group sum length n", n, caps.max_perm_length);
    }
}

void check_q(double q) {
    if (!(q > -1.0 && q < 1.0)) throw RangeError("q must lie in (-1, 1)");
}

// Adds coeff * perm_action(p) into m.
void accumulate_action(Eigen::MatrixXd& m, const Permutation& p, int alphabet, double coeff) {
    const int n = p.size();
    WordIndexer idx(alphabet, n);
    const std::int64_t dim = idx.level_size(n);
    Word w(static_cast<std::size_t>(n)), image(static_cast<std::size_t>(n));
    for (std::int64_t col = 0; col < dim; ++col) {
        w = idx.word_at_local(n, col);
        for (int k = 1; k <= n; ++k)
            image[static_cast<std::size_t>(k - 1)] = w[static_cast<std::size_t>(p(k) - 1)];
        m(idx.local_index(image), col) += coeff;
    }
}

}  // namespace

WordMatrix perm_action(const Permutation& p, int alphabet, const SizeCaps& caps) {
    check_word_space(p.size(), alphabet, caps);
    const auto dim = ipow(alphabet, p.size());
    WordMatrix out{p.size(), alphabet, Eigen::MatrixXd::Zero(dim, dim)};
    accumulate_action(out.entries, p, alphabet, 1.0);
    return out;
}

WordMatrix represent(const GroupAlgebraElement& x, int alphabet, const SizeCaps& caps) {
    const int n = x.degree();
    check_word_space(n, alphabet, caps);
    const auto dim = ipow(alphabet, n);
    WordMatrix out{n, alphabet, Eigen::MatrixXd::Zero(dim, dim)};
    for (const auto& [p, c] : x.terms()) accumulate_action(out.entries, p, alphabet, c);
    return out;
}

WordMatrix pq_direct(int n, int alphabet, double q, const SizeCaps& caps) {
    check_q(q);
    check_perm_sum(n, alphabet, caps);
    const auto dim = ipow(alphabet, n);
    WordMatrix out{n, alphabet, Eigen::MatrixXd::Zero(dim, dim)};
    for (const auto& p : all_permutations(n))
        accumulate_action(out.entries, p, alphabet, std::pow(q, inversions(p)));
    return out;
}

GroupAlgebraElement mn_element(int n, double q) {
    if (n < 1) throw RangeError("M_n needs n >= 1");
    GroupAlgebraElement m(n);
    for (int k = 1; k <= n; ++k) m.add(cycle_perm(1, k, n), std::pow(q, k - 1));
    return m;
}

WordMatrix mn_matrix(int n, int alphabet, double q, const SizeCaps& caps) {
    check_q(q);
    if (n < 1) throw RangeError("M_n needs n >= 1");
    check_word_space(n, alphabet, caps);
    return represent(mn_element(n, q), alphabet, caps);
}

WordMatrix pq_recursive(int n, int alphabet, double q, const SizeCaps& caps) {
    check_q(q);
    check_word_space(n, alphabet, caps);
    WordMatrix p{0, alphabet, Eigen::MatrixXd::Identity(1, 1)};
    for (int m = 1; m <= n; ++m) {
        // embed(P^(m-1)) acts on positions 2..m, i.e. I_N (x) P^(m-1) in lexicographic order.
        const auto inner = ipow(alphabet, m - 1);
        Eigen::MatrixXd embedded = Eigen::MatrixXd::Zero(inner * alphabet, inner * alphabet);
        for (int a = 0; a < alphabet; ++a)
            embedded.block(a * inner, a * inner, inner, inner) = p.entries;
        // perm_action reverses products, so embed(P) . M_n is represented by M_n * embed(P).
        const WordMatrix mn = mn_matrix(m, alphabet, q, caps);
        p = WordMatrix{m, alphabet, mn.entries * embedded};
    }
    return p;
}

GroupAlgebraElement mn_inverse_element(int n, double q) {
    if (n < 1) throw RangeError("M_n needs n >= 1");
    auto factor = [n](double c, const Permutation& s) {
        GroupAlgebraElement f = GroupAlgebraElement::unit(n);
        f.add(s, -c);
        return f;
    };
    // (1 - c s)^{-1} = (1 - c^m)^{-1} sum_{k<m} c^k s^k, m the order of s.
    auto inverse_factor = [n](double c, const Permutation& s) {
        const Permutation id = Permutation::identity(n);
        int order = 1;
        for (Permutation x = s; !(x == id); x = compose(x, s)) ++order;
        GroupAlgebraElement f(n);
        Permutation power = id;
        for (int k = 0; k < order; ++k) {
            f.add(power, std::pow(c, k));
            power = compose(power, s);
        }
        return f.scaled(1.0 / (1.0 - std::pow(c, order)));
    };

    GroupAlgebraElement first = GroupAlgebraElement::unit(n);
    for (int j = n - 1; j >= 1; --j) first = first * factor(std::pow(q, j), cycle_perm(1, j + 1, n));

    // Each factor of the second product is inverted in place, order j = n-2..0 kept.
    GroupAlgebraElement second_inv = GroupAlgebraElement::unit(n);
    for (int j = n - 2; j >= 0; --j)
        second_inv = second_inv * inverse_factor(std::pow(q, n - j), cycle_perm(2, n - j, n));
    return first * second_inv;
}

MnInverse mn_inverse(int n, int alphabet, double q, const SizeCaps& caps) {
    check_q(q);
    check_perm_sum(n, alphabet, caps);
    const WordMatrix m = mn_matrix(n, alphabet, q, caps);
    const auto dim = m.entries.rows();
    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(dim, dim);

    MnInverse out;
    out.reading =
        "prod_{j=n-1..1}(1 - q^j (1->j+1)) . prod_{j=n-2..0}(1 - q^{n-j} (2->n-j))^{-1}";
    out.inverse = represent(mn_inverse_element(n, q), alphabet, caps);
    out.formula_residual = (m.entries * out.inverse.entries - id).cwiseAbs().maxCoeff();
    out.residual = out.formula_residual;
    if (out.formula_residual > 1e-8) {
        out.product_formula_used = false;
        out.inverse.entries = m.entries.partialPivLu().inverse();
        out.residual = (m.entries * out.inverse.entries - id).cwiseAbs().maxCoeff();
    }
    return out;
}

}  // namespace qfock
