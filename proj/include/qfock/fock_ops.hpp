#pragma once

// Raw actions of l(h_i), l(h_i)*, r(h_i), r(h_i)* on graded word coordinates.
//
// Every function takes a matrix whose rows are indexed by the graded basis of
// `from` (columns are independent vectors) and returns rows indexed by the
// graded basis of `to`. Components landing above to.top_level() are dropped,
// so with a large enough `to` the result is exact.

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "qfock/errors.hpp"
#include "qfock/word.hpp"

namespace qfock::ops {

inline void check_letter(const WordIndexer& idx, int letter) {
    if (letter < 1 || letter > idx.alphabet()) {
        throw RangeError("letter " + std::to_string(letter) + " outside 1.." +
                         std::to_string(idx.alphabet()));
    }
}

inline void check_pair(const WordIndexer& from, const WordIndexer& to, Eigen::Index rows) {
    if (from.alphabet() != to.alphabet()) throw ContextMismatch("alphabet mismatch");
    if (rows != from.dimension()) throw ContextMismatch("row count does not match the graded basis");
}

/// Copies the common levels of x into the graded basis of `to`.
template <class M>
typename M::PlainObject regrade(const WordIndexer& from, const WordIndexer& to, const M& x) {
    check_pair(from, to, x.rows());
    typename M::PlainObject out = M::PlainObject::Zero(to.dimension(), x.cols());
    const int top = std::min(from.top_level(), to.top_level());
    const auto rows = from.offset(top + 1);
    out.topRows(rows) = x.topRows(rows);
    return out;
}

/// l(h_i): prepend the letter.
template <class M>
typename M::PlainObject left_create(const WordIndexer& from, const WordIndexer& to, const M& x, int letter) {
    check_pair(from, to, x.rows());
    check_letter(from, letter);
    typename M::PlainObject out = M::PlainObject::Zero(to.dimension(), x.cols());
    for (int n = 0; n <= from.top_level() && n + 1 <= to.top_level(); ++n) {
        const auto size = from.level_size(n);
        out.middleRows(to.offset(n + 1) + (letter - 1) * size, size) +=
            x.middleRows(from.offset(n), size);
    }
    return out;
}

/// r(h_i): append the letter.
template <class M>
typename M::PlainObject right_create(const WordIndexer& from, const WordIndexer& to, const M& x, int letter) {
    check_pair(from, to, x.rows());
    check_letter(from, letter);
    const int N = from.alphabet();
    typename M::PlainObject out = M::PlainObject::Zero(to.dimension(), x.cols());
    for (int n = 0; n <= from.top_level() && n + 1 <= to.top_level(); ++n) {
        const auto size = from.level_size(n);
        const auto src = from.offset(n);
        const auto dst = to.offset(n + 1);
        for (std::int64_t w = 0; w < size; ++w) out.row(dst + w * N + (letter - 1)) += x.row(src + w);
    }
    return out;
}

namespace detail {

// Deletes position k (1-based, most significant first) of every level-n word
// whose k-th letter equals `letter`, weighting by weight(k, n).
template <class M, class Weight>
typename M::PlainObject delete_letter(const WordIndexer& from, const WordIndexer& to, const M& x, int letter,
                Weight weight) {
    check_pair(from, to, x.rows());
    check_letter(from, letter);
    const std::int64_t N = from.alphabet();
    typename M::PlainObject out = M::PlainObject::Zero(to.dimension(), x.cols());
    for (int n = 1; n <= from.top_level() && n - 1 <= to.top_level(); ++n) {
        const auto size = from.level_size(n);
        const auto src = from.offset(n);
        const auto dst = to.offset(n - 1);
        for (int k = 1; k <= n; ++k) {
            const double c = weight(k, n);
            if (c == 0.0) continue;
            const std::int64_t low = ipow(N, n - k);  // weight of position k
            for (std::int64_t w = 0; w < size; ++w) {
                if ((w / low) % N != letter - 1) continue;
                const std::int64_t target = (w / (low * N)) * low + w % low;
                out.row(dst + target) += c * x.row(src + w);
            }
        }
    }
    return out;
}

}  // namespace detail

/// l(h_i)*: sum_k q^{k-1} <h_k, h_i> (delete position k).
template <class M>
typename M::PlainObject left_annihilate(const WordIndexer& from, const WordIndexer& to, const M& x, int letter,
                  double q) {
    return detail::delete_letter(from, to, x, letter,
                                 [q](int k, int) { return std::pow(q, k - 1); });
}

/// r(h_i)*: sum_k q^{n-k} <h_k, h_i> (delete position k).
template <class M>
typename M::PlainObject right_annihilate(const WordIndexer& from, const WordIndexer& to, const M& x, int letter,
                   double q) {
    return detail::delete_letter(from, to, x, letter,
                                 [q](int k, int n) { return std::pow(q, n - k); });
}

/// X_i = l(h_i) + l(h_i)*.
template <class M>
typename M::PlainObject left_gaussian(const WordIndexer& from, const WordIndexer& to, const M& x, int letter,
                double q) {
    return left_create(from, to, x, letter) + left_annihilate(from, to, x, letter, q);
}

/// Right multiplication by X_i, i.e. r(h_i) + r(h_i)*.
template <class M>
typename M::PlainObject right_gaussian(const WordIndexer& from, const WordIndexer& to, const M& x, int letter,
                 double q) {
    return right_create(from, to, x, letter) + right_annihilate(from, to, x, letter, q);
}

/// Applies the monomial X_{w_1} ... X_{w_k} (rightmost letter first) exactly and
/// returns the result truncated to `to`. Works internally at the level needed for exactness.
template <class M>
typename M::PlainObject left_monomial(const WordIndexer& from, const WordIndexer& to, const M& x, const Word& w,
                double q) {
    const int deg = static_cast<int>(w.size());
    const int N = from.alphabet();
    WordIndexer cur(N, from.top_level());
    typename M::PlainObject y = x;
    for (int r = deg - 1; r >= 0; --r) {
        // r letters remain after this one; levels above to.top + r can no longer come back.
        WordIndexer next(N, std::max(0, to.top_level() + r));
        y = left_gaussian(cur, next, y, w[static_cast<std::size_t>(r)], q);
        cur = next;
    }
    return regrade(cur, to, y);
}

/// Right multiplication by the monomial X_{w_1} ... X_{w_k}: x -> x X_{w_1} ... X_{w_k}.
template <class M>
typename M::PlainObject right_monomial(const WordIndexer& from, const WordIndexer& to, const M& x, const Word& w,
                 double q) {
    const int deg = static_cast<int>(w.size());
    const int N = from.alphabet();
    WordIndexer cur(N, from.top_level());
    typename M::PlainObject y = x;
    for (int r = 0; r < deg; ++r) {
        WordIndexer next(N, std::max(0, to.top_level() + (deg - 1 - r)));
        y = right_gaussian(cur, next, y, w[static_cast<std::size_t>(r)], q);
        cur = next;
    }
    return regrade(cur, to, y);
}

/// Permutation sending each word to its reversal (rows and columns over idx).
inline std::vector<std::int64_t> reversal_map(const WordIndexer& idx) {
    std::vector<std::int64_t> map(static_cast<std::size_t>(idx.dimension()));
    for (std::int64_t g = 0; g < idx.dimension(); ++g)
        map[static_cast<std::size_t>(g)] = idx.global_index(reversed(idx.word_at_global(g)));
    return map;
}

}  // namespace qfock::ops
