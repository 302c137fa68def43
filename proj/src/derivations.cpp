#include "qfock/derivations.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <tuple>

#include "qfock/errors.hpp"
#include "qfock/fock_ops.hpp"
#include "qfock/operators.hpp"
#include "qfock/wick.hpp"

namespace qfock {

std::string DerivationTag::name() const {
    switch (kind) {
        case DerivationKind::FDQ: return "FDQ";
        case DerivationKind::Q_COMMUTATOR: return "Q_COMMUTATOR";
        case DerivationKind::Q_SQRT: return "Q_SQRT";
        case DerivationKind::Q_TRUNCATED: return "Q_TRUNCATED(" + std::to_string(Q) + ")";
        case DerivationKind::DOUBLING: return "DOUBLING";
    }
    return "?";
}

namespace {

void check_poly(const NCPoly& p, const FockContext& ctx) {
    if (p.max_letter() > ctx.alphabet()) throw RangeError("polynomial uses letters beyond N");
    if (p.degree() > ctx.level()) {
        throw RangeError("degree overflow: deg P = " + std::to_string(p.degree()) + " exceeds level " +
                         std::to_string(ctx.level()));
    }
}

void check_index(int j, const FockContext& ctx) {
    if (j < 1 || j > ctx.alphabet()) {
        throw RangeError("derivation index " + std::to_string(j) + " outside 1.." + std::to_string(ctx.alphabet()));
    }
}

Eigen::VectorXcd vacuum_image(const Word& w, const WordIndexer& idx, double q) {
    Eigen::VectorXcd vac = Eigen::VectorXcd::Zero(idx.dimension());
    vac(0) = 1.0;
    return ops::left_monomial(idx, idx, vac, w, q);
}

// Sum over monomials and over the occurrences of letter j: f(coefficient, prefix, suffix).
template <class F>
void for_each_split(const NCPoly& p, int j, F&& f) {
    for (const auto& [w, c] : p.terms())
        for (std::size_t m = 0; m < w.size(); ++m) {
            if (w[m] != j) continue;
            f(c, Word(w.begin(), w.begin() + static_cast<long>(m)), Word(w.begin() + static_cast<long>(m) + 1, w.end()));
        }
}

HSElement derive_fdq(const NCPoly& p, int j, const FockContext& ctx) {
    const auto& idx = ctx.indexer();
    std::map<Word, Eigen::VectorXcd> memo;
    auto image = [&](const Word& w) -> const Eigen::VectorXcd& {
        auto it = memo.find(w);
        if (it == memo.end()) it = memo.emplace(w, vacuum_image(w, idx, ctx.q())).first;
        return it->second;
    };
    HSElement t = HSElement::zero(ctx);
    for_each_split(p, j, [&](cplx c, const Word& pre, const Word& suf) {
        t.coeffs += c * image(pre) * image(suf).transpose();
    });
    return t;
}

// sum over splits of  prefix . Xi^{<= cut} . suffix, each split evaluated on an extended
// level so that every component reaching legs <= L is present.
HSElement derive_commutator(const NCPoly& p, int j, const FockContext& ctx, int cut) {
    const int L = ctx.level();
    const double q = ctx.q();
    const auto& out_idx = ctx.indexer();
    HSElement t = HSElement::zero(ctx);
    for_each_split(p, j, [&](cplx c, const Word& pre, const Word& suf) {
        const int ext = L + static_cast<int>(std::min(pre.size(), suf.size()));
        const int top = cut < 0 ? ext : std::min(cut, ext);
        const FockContext ectx = ctx.with_level(ext);
        const WordIndexer& eidx = ectx.indexer();
        const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(eidx.dimension(), eidx.dimension());
        const Eigen::MatrixXd left = ops::left_monomial(eidx, out_idx, id, pre, q);
        const Eigen::MatrixXd right = ops::right_monomial(eidx, out_idx, id, suf, q);
        Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(out_idx.dimension(), out_idx.dimension());
        for (int n = 0; n <= top; ++n) {
            const double w = std::pow(q, n);
            if (w == 0.0) continue;
            const auto off = eidx.offset(n), size = eidx.level_size(n);
            // Xi_n coefficients: q^n Gamma_n^{-1}[a, rev b].
            const Eigen::MatrixXd xr = ectx.gram(n).inverse.entries * ectx.reversal().block(off, off, size, size);
            acc.noalias() += w * left.middleCols(off, size) * xr * right.middleCols(off, size).transpose();
        }
        t.coeffs += c * acc.cast<cplx>();
    });
    return t;
}

// Coefficients of t restricted to legs of level <= d, column-major vec (u + D v).
Eigen::VectorXcd leg_vec(const HSElement& t, int d) {
    const auto D = t.ctx.indexer().offset(d + 1);
    const Eigen::MatrixXcd y = t.coeffs.topLeftCorner(D, D);
    return Eigen::Map<const Eigen::VectorXcd>(y.data(), D * D);
}

HSElement from_leg_vec(const FockContext& ctx, const Eigen::VectorXcd& v, int d) {
    const auto D = ctx.indexer().offset(d + 1);
    HSElement t = HSElement::zero(ctx);
    t.coeffs.topLeftCorner(D, D) = Eigen::Map<const Eigen::MatrixXcd>(v.data(), D, D);
    return t;
}

double leg_norm(const FockContext& legs, const Eigen::VectorXcd& v) {
    const auto D = legs.dimension();
    const Eigen::Map<const Eigen::MatrixXcd> y(v.data(), D, D);
    const Eigen::MatrixXcd g = legs.metric().cast<cplx>();
    return std::sqrt(std::max(0.0, std::real((y.adjoint() * g * y * g).trace())));
}

HSElement derive_sqrt(const NCPoly& p, int j, const FockContext& ctx) {
    const int d = ctx.level() - 1;
    if (d < 0) return HSElement::zero(ctx);
    const auto comp = cached_right_xi(ctx, d);
    if (!comp->psd) {
        throw UnavailableError("compression of right multiplication by Xi is not positive (min eigenvalue " +
                               std::to_string(comp->spectrum.minCoeff()) + ")");
    }
    const Eigen::VectorXcd y = leg_vec(derive_fdq(p, j, ctx), d);
    return from_leg_vec(ctx, comp->sqrt_action.cast<cplx>() * y, d);
}

}  // namespace

std::shared_ptr<const RightXiCompression> cached_right_xi(const FockContext& ctx, int leg_level, int Q) {
    using Key = std::tuple<int, double, int, int, std::int64_t>;
    static std::mutex mu;
    static std::map<Key, std::shared_ptr<const RightXiCompression>> cache;
    const Key key{ctx.alphabet(), ctx.q(), leg_level, Q < 0 ? -1 : Q, ctx.caps().max_doubled_dense};
    {
        std::lock_guard<std::mutex> lock(mu);
        auto it = cache.find(key);
        if (it != cache.end()) return it->second;
    }
    auto value = std::make_shared<const RightXiCompression>(right_xi_compression(ctx, leg_level, Q));
    std::lock_guard<std::mutex> lock(mu);
    return cache.emplace(key, std::move(value)).first->second;
}

HSElement derive(const NCPoly& p, int j, const DerivationTag& tag, const FockContext& ctx) {
    check_index(j, ctx);
    check_poly(p, ctx);
    switch (tag.kind) {
        case DerivationKind::FDQ: return derive_fdq(p, j, ctx);
        case DerivationKind::Q_COMMUTATOR: return derive_commutator(p, j, ctx, -1);
        case DerivationKind::Q_TRUNCATED:
            if (tag.Q < 0 || tag.Q > ctx.level()) throw RangeError("Q_TRUNCATED requires 0 <= Q <= L");
            return derive_commutator(p, j, ctx, tag.Q);
        case DerivationKind::Q_SQRT: return derive_sqrt(p, j, ctx);
        case DerivationKind::DOUBLING:
            throw DomainError("the doubling derivation takes values in the doubled algebra; use derive_doubling");
    }
    throw DomainError("unknown derivation");
}

GradedVector derive_doubling(const NCPoly& p, int k, const FockContext& ctx) {
    check_index(k, ctx);
    check_poly(p, ctx);
    const int N = ctx.alphabet();
    NCPoly out;
    for (const auto& [w, c] : p.terms())
        for (std::size_t m = 0; m < w.size(); ++m) {
            if (w[m] != k) continue;
            Word v = w;
            v[m] = k + N;
            out.add(v, c);
        }
    return apply_to_vacuum(out, ctx.doubled());
}

GradedVector doubling_vector(const GradedVector& xi, int k, const FockContext& ctx) {
    require_same(ctx, xi);
    check_index(k, ctx);
    const int N = ctx.alphabet();
    const FockContext dbl = ctx.doubled();
    GradedVector out = GradedVector::zero(dbl);
    const auto& idx = ctx.indexer();
    const auto& didx = dbl.indexer();
    for (std::int64_t g = 0; g < idx.dimension(); ++g) {
        const cplx c = xi.coeffs(g);
        if (c == cplx(0.0)) continue;
        const Word w = idx.word_at_global(g);
        for (std::size_t m = 0; m < w.size(); ++m) {
            if (w[m] != k) continue;
            Word v = w;
            v[m] = k + N;
            out.coeffs(didx.global_index(v)) += c;
        }
    }
    return out;
}

double commutator_check(const NCPoly& p, int j, const FockContext& ctx) {
    check_index(j, ctx);
    const int deg = std::max(p.degree(), 0);
    if (deg > ctx.level() - 1) throw RangeError("commutator_check needs deg P <= L - 1");
    const HSElement t = derive(p, j, DerivationTag::commutator(), ctx);
    const FockOperator lhs(ctx, t.as_operator());
    const FockOperator a = poly_operator(p, ctx);
    const FockOperator r = right_creation(j, ctx);
    const FockOperator diff = lhs - (a * r - r * a);
    return op_norm_on_levels(diff, ctx.level() - deg - 1);
}

GradedVector partial_tau(const NCPoly& p, int j, const FockContext& ctx) {
    return derive(p, j, DerivationTag::commutator(), ctx).partial_trace_right();
}

NumberReport number_check(const GradedVector& xi, const GradedVector& eta, const FockContext& ctx) {
    require_same(ctx, xi);
    require_same(ctx, eta);
    const auto lx = xi.support_levels(), le = eta.support_levels();
    if (lx.size() > 1 || le.size() > 1) throw DomainError("number_check needs homogeneous vectors");
    const int n = lx.empty() ? 0 : lx.front();
    const int m = le.empty() ? 0 : le.front();

    const FockContext dbl = ctx.doubled();
    NumberReport r;
    for (int k = 1; k <= ctx.alphabet(); ++k) {
        const GradedVector a = doubling_vector(xi, k, ctx);
        const GradedVector b = doubling_vector(eta, k, ctx);
        r.lhs += q_inner(dbl, a, b);
        const GradedVector a2 = derive_doubling(NCPoly::wick(xi, ctx.q()), k, ctx);
        const GradedVector b2 = derive_doubling(NCPoly::wick(eta, ctx.q()), k, ctx);
        r.crosscheck = std::max({r.crosscheck, (a2.coeffs - a.coeffs).cwiseAbs().maxCoeff(),
                                 (b2.coeffs - b.coeffs).cwiseAbs().maxCoeff()});
    }
    r.rhs = (n == m && !lx.empty() && !le.empty()) ? static_cast<double>(n) * q_inner(ctx, xi, eta) : cplx(0.0);
    r.residual = std::abs(r.lhs - r.rhs);
    return r;
}

GradedVector dq_star(const HSElement& t, int j) {
    const FockContext& ctx = t.ctx;
    check_index(j, ctx);
    const int N = ctx.alphabet();
    const int L = ctx.level();
    const double q = ctx.q();
    const auto& idx = ctx.indexer();
    const WordIndexer up(N, L + 1);
    const WickTable ext(N, q, L, L + 1, L, ctx.caps());
    const WickTable& table = ctx.wick_table();
    const Eigen::MatrixXd& rev = ctx.reversal();

    GradedVector out = GradedVector::zero(ctx);
    // a X_j b - a l(h_j)* b = a (h_j b): column u of Z is sum_v T[u, v] e_{j v}.
    const Eigen::MatrixXcd tt = t.coeffs.transpose();
    const Eigen::MatrixXcd z = ops::left_create(idx, up, tt, j);
    for (std::int64_t u = 0; u < idx.dimension(); ++u) {
        if (z.col(u).cwiseAbs().maxCoeff() == 0.0) continue;
        out.coeffs += ext.at(u).cast<cplx>() * z.col(u);
    }
    // r(h_j)*(a) b: column v of Y is sum_u T[u, v] r(h_j)* e_u, then right multiplication by psi_v.
    const Eigen::MatrixXcd y = ops::right_annihilate(idx, idx, t.coeffs, j, q);
    for (std::int64_t v = 0; v < idx.dimension(); ++v) {
        if (y.col(v).cwiseAbs().maxCoeff() == 0.0) continue;
        const Word w = reversed(idx.word_at_global(v));
        out.coeffs -= (rev * table[w] * rev).cast<cplx>() * y.col(v);
    }
    return out;
}

ConjugateResult conjugate_variable(int j, int n_terms, const FockContext& ctx) {
    check_index(j, ctx);
    if (n_terms < 0) throw RangeError("n_terms must be >= 0");
    const HSElement one = HSElement::unit(ctx);
    const DoubledAction step = DoubledAction::left(xi_as_hs(ctx) - one);
    ConjugateResult r{dq_star(one, j), {}, false, !constants(ctx.q(), ctx.alphabet()).rho_lt_1};
    r.norms.push_back(q_norm(ctx, r.xi));
    HSElement e = one;
    for (int i = 1; i <= n_terms; ++i) {
        e = step.apply(e);
        const GradedVector d = dq_star(e, j);
        r.xi = (i % 2) ? r.xi - d : r.xi + d;
        r.norms.push_back(q_norm(ctx, r.xi));
    }
    int rising = 0;
    for (std::size_t k = 1; k < r.norms.size(); ++k) {
        const double prev = k >= 2 ? std::abs(r.norms[k - 1] - r.norms[k - 2]) : 0.0;
        const double cur = std::abs(r.norms[k] - r.norms[k - 1]);
        rising = (k >= 2 && cur > prev) ? rising + 1 : 0;
        if (rising >= 3) r.nonconvergence_warning = true;
    }
    return r;
}

double fisher_estimate(int n_terms, const FockContext& ctx) {
    double s = 0.0;
    for (int j = 1; j <= ctx.alphabet(); ++j) {
        const double n = q_norm(ctx, conjugate_variable(j, n_terms, ctx).xi);
        s += n * n;
    }
    return s;
}

LipschitzReport lipschitz_of(const GradedVector& xi, int k, const FockContext& ctx) {
    const HSElement d = derive(NCPoly::wick(xi, ctx.q()), k, DerivationTag::fdq(), ctx);
    return {hs_norm(d), DoubledAction::left(d).op_norm()};
}

LipschitzReport lipschitz_diagnostic(int j, int k, int n_terms, const FockContext& ctx) {
    check_index(k, ctx);
    return lipschitz_of(conjugate_variable(j, n_terms, ctx).xi, k, ctx);
}

ConjugateSeries conjugate_series(int n_terms, const FockContext& ctx, bool with_lipschitz) {
    if (n_terms < 0) throw RangeError("n_terms must be >= 0");
    const int N = ctx.alphabet();
    const NeumannResult neu = xi_inverse_neumann(ctx, n_terms, true);
    ConjugateSeries s;
    s.nonconvergence_warning = neu.nonconvergence_warning;
    s.rho_warning = neu.rho_warning;

    const HSElement one = HSElement::unit(ctx);
    const DoubledAction step = DoubledAction::left(xi_as_hs(ctx) - one);
    std::vector<GradedVector> xi;
    for (int j = 1; j <= N; ++j) xi.push_back(dq_star(one, j));
    HSElement e = one;
    for (int n = 0; n <= n_terms; ++n) {
        if (n > 0) {
            e = step.apply(e);
            for (int j = 1; j <= N; ++j) {
                const GradedVector d = dq_star(e, j);
                xi[static_cast<std::size_t>(j - 1)] = (n % 2) ? xi[static_cast<std::size_t>(j - 1)] - d
                                                              : xi[static_cast<std::size_t>(j - 1)] + d;
            }
        }
        ConjugateRow row;
        row.n = n;
        row.residual = neu.residuals[static_cast<std::size_t>(n)];
        for (const auto& x : xi) {
            row.xi_norms.push_back(q_norm(ctx, x));
            row.fisher += row.xi_norms.back() * row.xi_norms.back();
        }
        if (with_lipschitz)
            for (int j = 1; j <= N; ++j)
                for (int k = 1; k <= N; ++k)
                    row.lipschitz.push_back(lipschitz_of(xi[static_cast<std::size_t>(j - 1)], k, ctx).lr_op_norm);
        s.rows.push_back(std::move(row));
    }
    return s;
}

EquivalenceReport equivalence_check(const NCPoly& p, int k, const FockContext& ctx, int Q) {
    check_index(k, ctx);
    check_poly(p, ctx);
    EquivalenceReport r;
    r.k = k;
    r.Q = Q < 0 ? ctx.level() : Q;
    if (r.Q > ctx.level()) throw RangeError("Q must not exceed L");
    r.leg_level = std::max(ctx.level() - 1, 0);
    const int d = r.leg_level;

    const auto c = cached_right_xi(ctx, d);
    const auto cq = cached_right_xi(ctx, d, r.Q);
    const FockContext& legs = c->legs;

    const HSElement dp = derive(p, k, DerivationTag::fdq(), ctx);
    const Eigen::VectorXcd y = leg_vec(dp, d);
    const Eigen::VectorXcd cy = c->action.cast<cplx>() * y;
    const Eigen::VectorXcd cqy = cq->action.cast<cplx>() * y;

    r.fdq = leg_norm(legs, y);
    r.commutator = leg_norm(legs, cy);
    r.truncated = leg_norm(legs, cqy);
    // <y, C y> in the metric G (x) G is y^H M y with M the Gram-weighted form.
    const double quad = std::real(y.dot(c->gram_form.cast<cplx>() * y));
    r.sqrt = std::sqrt(std::max(0.0, quad));

    const double hi = c->spectrum.maxCoeff(), lo = c->spectrum.minCoeff();
    r.available = c->psd && lo > 0.0;
    r.xi_half = std::sqrt(std::max(0.0, hi));
    r.xi_minus_half = lo > 0.0 ? 1.0 / std::sqrt(lo) : std::numeric_limits<double>::infinity();
    r.xi_q = cq->spectrum.cwiseAbs().maxCoeff();
    {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cq->frame - c->frame, Eigen::EigenvaluesOnly);
        r.xi_q_minus_xi = es.eigenvalues().cwiseAbs().maxCoeff();
    }

    const double tol = 1e-9;
    r.first = r.commutator <= r.xi_half * r.sqrt + tol && r.xi_half * r.sqrt <= r.xi_half * r.xi_half * r.fdq + tol;
    r.second = r.available && r.fdq <= r.xi_minus_half * r.sqrt + tol &&
               r.xi_minus_half * r.sqrt <= r.xi_minus_half * r.xi_minus_half * r.commutator + tol;
    r.third = r.commutator * (1.0 - r.xi_q_minus_xi * r.xi_minus_half * r.xi_minus_half) <= r.truncated + tol &&
              r.truncated <= r.xi_q * r.fdq + tol;

    // Independent evaluations of the same quantities.
    const HSElement dq = derive(p, k, DerivationTag::commutator(), ctx);
    r.commutator_crosscheck = (leg_vec(dq, d) - cy).cwiseAbs().maxCoeff();
    if (c->psd) {
        const HSElement ds = derive(p, k, DerivationTag::sqrt(), ctx);
        r.sqrt_crosscheck = std::abs(leg_norm(legs, leg_vec(ds, d)) - r.sqrt);
    }
    const FockContext dbl = ctx.doubled();
    const double dn = q_norm(dbl, derive_doubling(p, k, ctx));
    r.doubling_crosscheck = std::abs(dn * dn - r.sqrt * r.sqrt);
    return r;
}

}  // namespace qfock
