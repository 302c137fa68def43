#include "qfock/ncpoly.hpp"

#include <cmath>
#include <sstream>

#include "qfock/errors.hpp"
#include "qfock/fock_ops.hpp"

namespace qfock {

NCPoly NCPoly::constant(cplx c) { return monomial({}, c); }

NCPoly NCPoly::variable(int i) {
    if (i < 1) throw RangeError("variable index must be >= 1");
    return monomial({i});
}

NCPoly NCPoly::monomial(const Word& w, cplx c) {
    NCPoly p;
    p.add(w, c);
    return p;
}

NCPoly NCPoly::wick(const Word& w, double q) {
    if (w.empty()) return constant(1.0);
    // Memoized over the sub-words produced by the recursion.
    std::map<Word, NCPoly> memo;
    auto rec = [&](auto&& self, const Word& u) -> NCPoly {
        if (u.empty()) return constant(1.0);
        if (auto it = memo.find(u); it != memo.end()) return it->second;
        const Word tail(u.begin() + 1, u.end());
        NCPoly out = variable(u[0]) * self(self, tail);
        for (std::size_t j = 1; j < u.size(); ++j) {
            if (u[j] != u[0]) continue;
            out -= self(self, erase_at(tail, j - 1)) * std::pow(q, static_cast<double>(j - 1));
        }
        memo.emplace(u, out);
        return out;
    };
    return rec(rec, w);
}

NCPoly NCPoly::wick(const GradedVector& xi, double q) {
    WordIndexer idx(xi.alphabet, xi.top);
    NCPoly out;
    for (std::int64_t g = 0; g < idx.dimension(); ++g) {
        const cplx c = xi.coeffs(g);
        if (c == 0.0) continue;
        out += wick(idx.word_at_global(g), q) * c;
    }
    return out;
}

int NCPoly::degree() const {
    int d = -1;
    for (const auto& [w, c] : terms_) d = std::max(d, static_cast<int>(w.size()));
    return d;
}

int NCPoly::max_letter() const {
    int m = 0;
    for (const auto& [w, c] : terms_)
        for (int l : w) m = std::max(m, l);
    return m;
}

void NCPoly::add(const Word& w, cplx c) {
    for (int l : w)
        if (l < 1) throw RangeError("monomial letters must be >= 1");
    if (c == 0.0) return;
    auto [it, inserted] = terms_.emplace(w, c);
    if (!inserted) {
        it->second += c;
        if (it->second == 0.0) terms_.erase(it);
    }
}

NCPoly& NCPoly::operator+=(const NCPoly& o) {
    for (const auto& [w, c] : o.terms_) add(w, c);
    return *this;
}

NCPoly& NCPoly::operator-=(const NCPoly& o) {
    for (const auto& [w, c] : o.terms_) add(w, -c);
    return *this;
}

NCPoly NCPoly::operator+(const NCPoly& o) const {
    NCPoly r = *this;
    return r += o;
}

NCPoly NCPoly::operator-(const NCPoly& o) const {
    NCPoly r = *this;
    return r -= o;
}

NCPoly NCPoly::operator*(const NCPoly& o) const {
    NCPoly r;
    for (const auto& [a, x] : terms_) {
        for (const auto& [b, y] : o.terms_) {
            Word w = a;
            w.insert(w.end(), b.begin(), b.end());
            r.add(w, x * y);
        }
    }
    return r;
}

NCPoly NCPoly::operator*(cplx s) const {
    NCPoly r;
    for (const auto& [w, c] : terms_) r.add(w, c * s);
    return r;
}

NCPoly NCPoly::star() const {
    NCPoly r;
    for (const auto& [w, c] : terms_) r.add(reversed(w), std::conj(c));
    return r;
}

std::string NCPoly::to_string() const {
    if (terms_.empty()) return "0";
    std::ostringstream os;
    bool first = true;
    for (const auto& [w, c] : terms_) {
        if (!first) os << " + ";
        first = false;
        os << '(' << c.real();
        if (c.imag() != 0.0) os << (c.imag() < 0 ? "-" : "+") << std::abs(c.imag()) << 'i';
        os << ')';
        for (int l : w) os << "*X" << l;
    }
    return os.str();
}

GradedVector apply_to_vacuum(const NCPoly& p, const FockContext& ctx) {
    if (p.max_letter() > ctx.alphabet()) throw RangeError("polynomial uses letters beyond N");
    const auto& idx = ctx.indexer();
    Eigen::VectorXcd vac = Eigen::VectorXcd::Zero(idx.dimension());
    vac(0) = 1.0;
    GradedVector out = GradedVector::zero(ctx);
    for (const auto& [w, c] : p.terms()) {
        out.coeffs += c * ops::left_monomial(idx, idx, vac, w, ctx.q());
    }
    return out;
}

}  // namespace qfock
