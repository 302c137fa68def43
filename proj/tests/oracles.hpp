#pragma once

// Independent reference implementations used by the tests. They share no code
// with the library beyond the Word alias: plain maps, explicit loops.

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <numeric>
#include <random>
#include <vector>

#include "qfock/word.hpp"

namespace oracle {

using Word = qfock::Word;
using Vec = std::map<Word, double>;

inline int count_inversions(const std::vector<int>& p) {
    int c = 0;
    for (std::size_t i = 0; i < p.size(); ++i)
        for (std::size_t j = i + 1; j < p.size(); ++j) c += p[i] > p[j];
    return c;
}

/// <u, v>_q = sum_pi q^{i(pi)} prod_k <u_k, v_{pi(k)}>.
inline double q_inner_words(const Word& u, const Word& v, double q) {
    if (u.size() != v.size()) return 0.0;
    std::vector<int> p(u.size());
    std::iota(p.begin(), p.end(), 0);
    double total = 0.0;
    do {
        bool ok = true;
        for (std::size_t k = 0; k < u.size() && ok; ++k) ok = u[k] == v[static_cast<std::size_t>(p[k])];
        if (ok) total += std::pow(q, count_inversions(p));
    } while (std::next_permutation(p.begin(), p.end()));
    return total;
}

inline double q_inner(const Vec& a, const Vec& b, double q) {
    double s = 0.0;
    for (const auto& [u, x] : a)
        for (const auto& [v, y] : b) s += x * y * q_inner_words(u, v, q);
    return s;
}

inline Vec create(const Vec& a, int i) {
    Vec out;
    for (const auto& [w, c] : a) {
        Word n{i};
        n.insert(n.end(), w.begin(), w.end());
        out[n] += c;
    }
    return out;
}

inline Vec annihilate(const Vec& a, int i, double q) {
    Vec out;
    for (const auto& [w, c] : a) {
        for (std::size_t k = 0; k < w.size(); ++k) {
            if (w[k] != i) continue;
            Word n = w;
            n.erase(n.begin() + static_cast<long>(k));
            out[n] += c * std::pow(q, static_cast<double>(k));
        }
    }
    return out;
}

inline Vec add(Vec a, const Vec& b, double s = 1.0) {
    for (const auto& [w, c] : b) a[w] += s * c;
    return a;
}

inline Vec gaussian(const Vec& a, int i, double q) { return add(create(a, i), annihilate(a, i, q)); }

/// tau(X_{w1} ... X_{wk}) on the untruncated Fock space.
inline double moment(const Word& w, double q) {
    Vec v{{Word{}, 1.0}};
    for (auto it = w.rbegin(); it != w.rend(); ++it) v = gaussian(v, *it, q);
    auto f = v.find(Word{});
    return f == v.end() ? 0.0 : f->second;
}

/// All words of length n over 1..N in lexicographic order.
inline std::vector<Word> words(int N, int n) {
    std::vector<Word> out{Word{}};
    for (int k = 0; k < n; ++k) {
        std::vector<Word> next;
        for (const auto& w : out)
            for (int l = 1; l <= N; ++l) {
                Word x = w;
                x.push_back(l);
                next.push_back(x);
            }
        out = std::move(next);
    }
    return out;
}

}  // namespace oracle
