#include "qfock/deformation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "qfock/errors.hpp"
#include "qfock/wick.hpp"

namespace qfock {

namespace {

int resolve_q(const FockContext& ctx, int Q) {
    if (Q < 0) return ctx.level();
    if (Q > ctx.level()) {
        throw RangeError("truncation Q = " + std::to_string(Q) + " exceeds level " +
                         std::to_string(ctx.level()));
    }
    return Q;
}

void check_shape(const FockContext& ctx, const Eigen::MatrixXcd& m) {
    const auto d = ctx.dimension();
    if (m.rows() != d || m.cols() != d) throw ContextMismatch("HS coefficient matrix has the wrong shape");
}

void check_same(const HSElement& a, const HSElement& b) {
    if (!a.ctx.same_space(b.ctx)) throw ContextMismatch("HS elements live in different contexts");
}

// Right regular representation: R_v = Rev psi_{rev v} Rev on F_{<=L}.
Eigen::MatrixXd right_wick(const FockContext& ctx, std::int64_t v) {
    const auto& idx = ctx.indexer();
    const Eigen::MatrixXd& rev = ctx.reversal();
    const Word w = reversed(idx.word_at_global(v));
    return rev * ctx.wick_table()[w] * rev;
}

template <class Vec, class Apply>
double lanczos_impl(const Apply& apply, Eigen::Index dim, double rel_tol, int max_iter) {
    using Scalar = typename Vec::Scalar;
    if (dim == 0) return 0.0;
    Vec v(dim);
    for (Eigen::Index i = 0; i < dim; ++i) v(i) = Scalar(1.0 + 0.5 * std::sin(1.0 + static_cast<double>(i)));
    v.normalize();

    const int steps = static_cast<int>(std::min<Eigen::Index>(dim, max_iter));
    std::vector<Vec> basis;
    std::vector<double> alpha, beta;
    double prev = -1.0, theta = 0.0;
    for (int k = 0; k < steps; ++k) {
        basis.push_back(v);
        Vec w = apply(v);
        const double a = std::real(v.dot(w));
        alpha.push_back(a);
        // Full reorthogonalization, applied twice.
        for (int pass = 0; pass < 2; ++pass)
            for (const Vec& b : basis) w -= b * b.dot(w);
        const double bnorm = w.norm();

        const int m = static_cast<int>(alpha.size());
        Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m, m);
        for (int i = 0; i < m; ++i) {
            t(i, i) = alpha[static_cast<std::size_t>(i)];
            if (i + 1 < m) t(i, i + 1) = t(i + 1, i) = beta[static_cast<std::size_t>(i)];
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t, Eigen::EigenvaluesOnly);
        theta = es.eigenvalues().maxCoeff();
        const double scale = std::max(std::abs(theta), std::numeric_limits<double>::min());
        if (bnorm <= 1e-14 * scale) break;
        if (k >= 2 && std::abs(theta - prev) <= rel_tol * scale) break;
        prev = theta;
        beta.push_back(bnorm);
        v = w / bnorm;
    }
    return theta;
}

}  // namespace

double lanczos_max_eig(const std::function<Eigen::VectorXcd(const Eigen::VectorXcd&)>& apply,
                       Eigen::Index dim, double rel_tol, int max_iter) {
    return lanczos_impl<Eigen::VectorXcd>(apply, dim, rel_tol, max_iter);
}

double lanczos_max_eig_real(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& apply,
                            Eigen::Index dim, double rel_tol, int max_iter) {
    return lanczos_impl<Eigen::VectorXd>(apply, dim, rel_tol, max_iter);
}

// ---------------------------------------------------------------------------
// HSElement

HSElement::HSElement(FockContext c, Eigen::MatrixXcd m) : ctx(std::move(c)), coeffs(std::move(m)) {
    check_shape(ctx, coeffs);
}

HSElement HSElement::zero(const FockContext& ctx) {
    return HSElement(ctx, Eigen::MatrixXcd::Zero(ctx.dimension(), ctx.dimension()));
}

HSElement HSElement::unit(const FockContext& ctx) {
    HSElement t = zero(ctx);
    t.coeffs(0, 0) = 1.0;
    return t;
}

HSElement HSElement::tensor(const FockContext& ctx, const GradedVector& a, const GradedVector& b) {
    require_same(ctx, a);
    require_same(ctx, b);
    if (a.alphabet != b.alphabet || a.top != b.top) throw ContextMismatch("tensor legs differ");
    return HSElement(ctx, a.coeffs * b.coeffs.transpose());
}

HSElement HSElement::operator+(const HSElement& o) const {
    check_same(*this, o);
    return HSElement(ctx, coeffs + o.coeffs);
}

HSElement HSElement::operator-(const HSElement& o) const {
    check_same(*this, o);
    return HSElement(ctx, coeffs - o.coeffs);
}

HSElement HSElement::operator*(cplx s) const { return HSElement(ctx, coeffs * s); }

Eigen::MatrixXcd HSElement::as_operator() const {
    return coeffs * (ctx.reversal() * ctx.metric()).cast<cplx>();
}

GradedVector HSElement::apply(const GradedVector& x) const {
    require_same(ctx, x);
    GradedVector out = x;
    out.coeffs = as_operator() * x.coeffs;
    return out;
}

HSElement HSElement::real_structure() const {
    const Eigen::MatrixXcd rev = ctx.reversal().cast<cplx>();
    return HSElement(ctx, (rev * coeffs.transpose() * rev).conjugate());
}

GradedVector HSElement::partial_trace_right() const {
    GradedVector out = GradedVector::zero(ctx);
    out.coeffs = coeffs.col(0);
    return out;
}

HSElement HSElement::truncated(int level) const {
    if (level < 0 || level > ctx.level()) throw RangeError("truncation level out of range");
    return regraded(ctx.with_level(level));
}

HSElement HSElement::regraded(const FockContext& target) const {
    if (target.alphabet() != ctx.alphabet() || target.q() != ctx.q()) {
        throw ContextMismatch("regrading across different (N, q)");
    }
    HSElement out = zero(target);
    const auto k = std::min(ctx.dimension(), target.dimension());
    out.coeffs.topLeftCorner(k, k) = coeffs.topLeftCorner(k, k);
    return out;
}

bool HSElement::is_real(double tol) const { return coeffs.imag().cwiseAbs().maxCoeff() <= tol; }

cplx hs_inner(const HSElement& s, const HSElement& t) {
    check_same(s, t);
    const Eigen::MatrixXcd g = s.ctx.metric().cast<cplx>();
    return (s.coeffs.adjoint() * g * t.coeffs * g).trace();
}

double hs_norm(const HSElement& t) { return std::sqrt(std::max(0.0, std::real(hs_inner(t, t)))); }

// ---------------------------------------------------------------------------
// Xi

FockOperator xi_multiplier(const FockContext& ctx, int Q) {
    const int top = resolve_q(ctx, Q);
    const auto& idx = ctx.indexer();
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(ctx.dimension(), ctx.dimension());
    for (int n = 0; n <= top; ++n) {
        const double w = std::pow(ctx.q(), n);
        for (std::int64_t i = 0; i < idx.level_size(n); ++i) m(idx.offset(n) + i, idx.offset(n) + i) = w;
    }
    return FockOperator(ctx, std::move(m), 0);
}

HSElement xi_as_hs(const FockContext& ctx, int Q) {
    const int top = resolve_q(ctx, Q);
    const auto& idx = ctx.indexer();
    const Eigen::MatrixXd& rev = ctx.reversal();
    HSElement t = HSElement::zero(ctx);
    for (int n = 0; n <= top; ++n) {
        const auto off = idx.offset(n), size = idx.level_size(n);
        const Eigen::MatrixXd block =
            std::pow(ctx.q(), n) * ctx.gram(n).inverse.entries * rev.block(off, off, size, size);
        t.coeffs.block(off, off, size, size) = block.cast<cplx>();
    }
    return t;
}

HSElement xi_as_hs_orthonormal(const FockContext& ctx, int Q) {
    const int top = resolve_q(ctx, Q);
    const Eigen::MatrixXcd rev = ctx.reversal().cast<cplx>();
    HSElement t = HSElement::zero(ctx);
    for (int n = 0; n <= top; ++n) {
        const cplx w = std::pow(ctx.q(), n);
        for (const GradedVector& p : orthonormal_vectors(n, ctx)) {
            const Eigen::VectorXcd star = rev * p.coeffs.conjugate();
            t.coeffs += w * p.coeffs * star.transpose();
        }
    }
    return t;
}

// ---------------------------------------------------------------------------
// Doubled actions

void check_doubled(const FockContext& ctx) {
    const std::int64_t d = ctx.dimension();
    const std::int64_t cap = ctx.caps().max_doubled_dimension;
    if (d * d > cap) throw CapacityError("doubled-space dimension", d * d, cap);
}

DoubledAction::DoubledAction(FockContext ctx, bool real) : ctx_(std::move(ctx)), real_(real) {}

std::int64_t DoubledAction::dimension() const noexcept { return ctx_.dimension() * ctx_.dimension(); }

DoubledAction DoubledAction::left(const HSElement& t) {
    const FockContext& ctx = t.ctx;
    check_doubled(ctx);
    const bool real = t.is_real();
    DoubledAction out(ctx, real);
    const auto d = ctx.dimension();
    std::vector<Eigen::MatrixXd> rights;
    for (std::int64_t u = 0; u < d; ++u) {
        if (t.coeffs.row(u).cwiseAbs().maxCoeff() == 0.0) continue;
        if (rights.empty()) {
            rights.reserve(static_cast<std::size_t>(d));
            for (std::int64_t v = 0; v < d; ++v) rights.push_back(right_wick(ctx, v));
        }
        Eigen::MatrixXcd s = Eigen::MatrixXcd::Zero(d, d);
        for (std::int64_t v = 0; v < d; ++v)
            if (t.coeffs(u, v) != cplx(0.0)) s += t.coeffs(u, v) * rights[static_cast<std::size_t>(v)].cast<cplx>();
        out.a_.push_back(ctx.wick_table().at(u));
        if (real) out.b_real_.push_back(s.real());
        out.b_.push_back(std::move(s));
    }
    return out;
}

DoubledAction DoubledAction::right(const HSElement& t) {
    const FockContext& ctx = t.ctx;
    check_doubled(ctx);
    const bool real = t.is_real();
    DoubledAction out(ctx, real);
    const auto d = ctx.dimension();
    const WickTable& table = ctx.wick_table();
    for (std::int64_t x = 0; x < d; ++x) {
        if (t.coeffs.row(x).cwiseAbs().maxCoeff() == 0.0) continue;
        Eigen::MatrixXcd s = Eigen::MatrixXcd::Zero(d, d);
        for (std::int64_t y = 0; y < d; ++y)
            if (t.coeffs(x, y) != cplx(0.0)) s += t.coeffs(x, y) * table.at(y).cast<cplx>();
        out.a_.push_back(right_wick(ctx, x));
        if (real) out.b_real_.push_back(s.real());
        out.b_.push_back(std::move(s));
    }
    return out;
}

Eigen::MatrixXcd DoubledAction::apply(const Eigen::MatrixXcd& y) const {
    const auto d = ctx_.dimension();
    if (y.rows() != d || y.cols() != d) throw ContextMismatch("doubled-space argument has the wrong shape");
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(d, d);
    for (std::size_t k = 0; k < a_.size(); ++k) out += a_[k].cast<cplx>() * (y * b_[k].transpose());
    return out;
}

HSElement DoubledAction::apply(const HSElement& y) const {
    if (!y.ctx.same_space(ctx_)) throw ContextMismatch("HS element from another context");
    return HSElement(ctx_, apply(y.coeffs));
}

Eigen::MatrixXcd DoubledAction::dense() const {
    const std::int64_t n = dimension();
    const std::int64_t cap = ctx_.caps().max_doubled_dense;
    if (n > cap) throw CapacityError("dense doubled-space matrix", n, cap);
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(n, n);
    const auto d = ctx_.dimension();
    // vec(A Y B^T) = (B kron A) vec(Y) for column-major vec.
    for (std::size_t k = 0; k < a_.size(); ++k)
        for (std::int64_t i = 0; i < d; ++i)
            for (std::int64_t j = 0; j < d; ++j) {
                const cplx b = b_[k](i, j);
                if (b == cplx(0.0)) continue;
                out.block(i * d, j * d, d, d) += b * a_[k].cast<cplx>();
            }
    return out;
}

double DoubledAction::op_norm(double rel_tol, int max_iter) const {
    if (a_.empty()) return 0.0;
    const auto d = ctx_.dimension();
    const Eigen::MatrixXd& kh = ctx_.metric_sqrt();
    const Eigen::MatrixXd& khi = ctx_.metric_inv_sqrt();
    const auto terms = static_cast<Eigen::Index>(a_.size());

    // Orthonormalized frame: A~ = Kh A Kh^{-1}, B~ = Kh B Kh^{-1}. The terms are stacked so that
    // one application is two large products:
    //   Z = Y [B~_1^T ... B~_m^T],   out = [A~_1 ... A~_m] vstack(Z_1, ..., Z_m).
    if (real_) {
        Eigen::MatrixXd ah(d, d * terms), bt(d, d * terms), aht(d, d * terms), bc(d, d * terms);
        for (Eigen::Index k = 0; k < terms; ++k) {
            const Eigen::MatrixXd a = kh * a_[static_cast<std::size_t>(k)] * khi;
            const Eigen::MatrixXd b = kh * b_real_[static_cast<std::size_t>(k)] * khi;
            ah.middleCols(k * d, d) = a;
            bt.middleCols(k * d, d) = b.transpose();
            aht.middleCols(k * d, d) = a.transpose();
            bc.middleCols(k * d, d) = b;
        }
        auto stacked = [&](const Eigen::MatrixXd& left, const Eigen::MatrixXd& right, const Eigen::MatrixXd& y) {
            const Eigen::MatrixXd z = y * right;  // d x (d terms)
            Eigen::MatrixXd zs(d * terms, d);
            for (Eigen::Index k = 0; k < terms; ++k) zs.middleRows(k * d, d) = z.middleCols(k * d, d);
            return Eigen::MatrixXd(left * zs);
        };
        auto op = [&](const Eigen::VectorXd& v) {
            const Eigen::Map<const Eigen::MatrixXd> y(v.data(), d, d);
            const Eigen::MatrixXd ay = stacked(ah, bt, y);
            const Eigen::MatrixXd r = stacked(aht, bc, ay);
            return Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(r.data(), d * d));
        };
        return std::sqrt(std::max(0.0, lanczos_max_eig_real(op, d * d, rel_tol, max_iter)));
    }

    Eigen::MatrixXcd ah(d, d * terms), bt(d, d * terms), aht(d, d * terms), bc(d, d * terms);
    const Eigen::MatrixXcd khc = kh.cast<cplx>(), khic = khi.cast<cplx>();
    for (Eigen::Index k = 0; k < terms; ++k) {
        const Eigen::MatrixXcd a = khc * a_[static_cast<std::size_t>(k)].cast<cplx>() * khic;
        const Eigen::MatrixXcd b = khc * b_[static_cast<std::size_t>(k)] * khic;
        ah.middleCols(k * d, d) = a;
        bt.middleCols(k * d, d) = b.transpose();
        aht.middleCols(k * d, d) = a.adjoint();
        bc.middleCols(k * d, d) = b.conjugate();
    }
    auto stacked = [&](const Eigen::MatrixXcd& left, const Eigen::MatrixXcd& right, const Eigen::MatrixXcd& y) {
        const Eigen::MatrixXcd z = y * right;
        Eigen::MatrixXcd zs(d * terms, d);
        for (Eigen::Index k = 0; k < terms; ++k) zs.middleRows(k * d, d) = z.middleCols(k * d, d);
        return Eigen::MatrixXcd(left * zs);
    };
    auto op = [&](const Eigen::VectorXcd& v) {
        const Eigen::Map<const Eigen::MatrixXcd> y(v.data(), d, d);
        const Eigen::MatrixXcd ay = stacked(ah, bt, y);
        const Eigen::MatrixXcd r = stacked(aht, bc, ay);
        return Eigen::VectorXcd(Eigen::Map<const Eigen::VectorXcd>(r.data(), d * d));
    };
    return std::sqrt(std::max(0.0, lanczos_max_eig(op, d * d, rel_tol, max_iter)));
}

HSElement hs_product(const HSElement& s, const HSElement& t) {
    check_same(s, t);
    return DoubledAction::left(s).apply(t);
}

// ---------------------------------------------------------------------------
// Constants

ConstantsReport constants(double q, int N) {
    if (!(q > -1.0 && q < 1.0)) throw RangeError("q must lie in (-1, 1)");
    if (N < 1) throw RangeError("N must be >= 1");
    ConstantsReport r;
    r.q = q;
    r.N = N;
    r.c_q = c_q(std::abs(q));
    const double c3 = r.c_q * r.c_q * r.c_q;
    auto bracket = [c3](double x) {
        if (x >= 1.0) return std::numeric_limits<double>::infinity();
        const double y = x / (1.0 - x);
        return c3 * (4.0 * y + 5.0 * y * y + 2.0 * y * y * y);
    };
    r.nu = bracket(std::abs(q) * N);
    r.rho = bracket(std::abs(q) * std::sqrt(static_cast<double>(N)));
    r.nu_lt_1 = r.nu < 1.0;
    r.rho_lt_1 = r.rho < 1.0;
    return r;
}

// ---------------------------------------------------------------------------
// Neumann series

NeumannResult xi_inverse_neumann(const FockContext& ctx, int n_terms, bool with_residuals) {
    if (n_terms < 0) throw RangeError("n_terms must be >= 0");
    const HSElement one = HSElement::unit(ctx);
    const DoubledAction step = DoubledAction::left(xi_as_hs(ctx) - one);

    NeumannResult out{one, {}, false, !constants(ctx.q(), ctx.alphabet()).rho_lt_1};
    HSElement e = one;
    for (int i = 1; i <= n_terms + 1; ++i) {
        HSElement next = step.apply(e);
        if (with_residuals) out.residuals.push_back(DoubledAction::left(next).op_norm());
        if (i <= n_terms) out.u = (i % 2) ? out.u - next : out.u + next;
        e = std::move(next);
    }
    int rising = 0;
    for (std::size_t k = 1; k < out.residuals.size(); ++k) {
        rising = out.residuals[k] > out.residuals[k - 1] ? rising + 1 : 0;
        if (rising >= 3) out.nonconvergence_warning = true;
    }
    return out;
}

HSElement neumann_defect_direct(const FockContext& ctx, const HSElement& u) {
    return DoubledAction::left(xi_as_hs(ctx)).apply(u) - HSElement::unit(ctx);
}

// ---------------------------------------------------------------------------
// Exact compression of right multiplication by a level-diagonal multiplier

namespace {

// Applies Y -> L Y R^T to every column (reshaped d x d) of m, i.e. (R kron L) m.
Eigen::MatrixXd kron_left(const Eigen::MatrixXd& l, const Eigen::MatrixXd& r, const Eigen::MatrixXd& m) {
    const auto d = l.rows();
    Eigen::MatrixXd out(m.rows(), m.cols());
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
        const Eigen::Map<const Eigen::MatrixXd> y(m.col(c).data(), d, d);
        const Eigen::MatrixXd z = l * y * r.transpose();
        out.col(c) = Eigen::Map<const Eigen::VectorXd>(z.data(), d * d);
    }
    return out;
}

// Symmetric eigen-decomposition split along connected components of the sparsity pattern.
void block_eigen(const Eigen::MatrixXd& a, Eigen::VectorXd& values, Eigen::MatrixXd& vectors) {
    const auto n = a.rows();
    std::vector<Eigen::Index> parent(static_cast<std::size_t>(n));
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](Eigen::Index x) {
        while (parent[static_cast<std::size_t>(x)] != x) {
            parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
            x = parent[static_cast<std::size_t>(x)];
        }
        return x;
    };
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = 0; i < j; ++i)
            if (a(i, j) != 0.0) parent[static_cast<std::size_t>(find(i))] = find(j);

    std::vector<std::vector<Eigen::Index>> groups(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) groups[static_cast<std::size_t>(find(i))].push_back(i);

    values.resize(n);
    vectors = Eigen::MatrixXd::Zero(n, n);
    Eigen::Index col = 0;
    for (const auto& g : groups) {
        if (g.empty()) continue;
        const auto m = static_cast<Eigen::Index>(g.size());
        Eigen::MatrixXd sub(m, m);
        for (Eigen::Index i = 0; i < m; ++i)
            for (Eigen::Index j = 0; j < m; ++j) sub(i, j) = a(g[static_cast<std::size_t>(i)], g[static_cast<std::size_t>(j)]);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sub);
        for (Eigen::Index k = 0; k < m; ++k, ++col) {
            values(col) = es.eigenvalues()(k);
            for (Eigen::Index i = 0; i < m; ++i) vectors(g[static_cast<std::size_t>(i)], col) = es.eigenvectors()(i, k);
        }
    }
}

}  // namespace

RightXiCompression right_level_multiplier_compression(const FockContext& ctx, int leg_level,
                                                      const std::vector<double>& weights) {
    if (leg_level < 0 || leg_level > ctx.level()) throw RangeError("leg level out of range");
    const FockContext legs = ctx.with_level(leg_level);
    const auto D = legs.dimension();
    const std::int64_t dd = D * D;
    if (dd > ctx.caps().max_doubled_dense) {
        throw CapacityError("dense doubled-space matrix", dd, ctx.caps().max_doubled_dense);
    }
    const int N = ctx.alphabet();
    const double q = ctx.q();
    const int top = 2 * leg_level;
    const WickTable table(N, q, top, leg_level, leg_level, ctx.caps());
    const WordIndexer& rows = table.rows();
    const Eigen::MatrixXd& rev = legs.reversal();

    // Columns (u', u) of a and (v', v) of b, with a = psi_{rev u} e_{u'} and b = psi_v e_{rev v'}.
    Eigen::MatrixXd a(rows.dimension(), dd), b(rows.dimension(), dd);
    const auto& idx = legs.indexer();
    for (std::int64_t u = 0; u < D; ++u) {
        a.middleCols(u * D, D) = table[reversed(idx.word_at_global(u))];
        b.middleCols(u * D, D) = table.at(u) * rev;
    }
    // f = a^T W b with W = sum_n w_n Gamma_n on levels 0..2d.
    Eigen::MatrixXd f = Eigen::MatrixXd::Zero(dd, dd);
    for (int n = 0; n <= top && n < static_cast<int>(weights.size()); ++n) {
        if (weights[static_cast<std::size_t>(n)] == 0.0) continue;
        const auto off = rows.offset(n), size = rows.level_size(n);
        const Eigen::MatrixXd gb = weights[static_cast<std::size_t>(n)] * ctx.gram(n).gamma.entries *
                                   b.middleRows(off, size);
        f.noalias() += a.middleRows(off, size).transpose() * gb;
    }

    RightXiCompression out(legs);
    out.gram_form.resize(dd, dd);
    // f[(u' + D u), (v' + D v)] = M[(u' + D v'), (u + D v)].
    for (std::int64_t u = 0; u < D; ++u)
        for (std::int64_t v = 0; v < D; ++v)
            for (std::int64_t up = 0; up < D; ++up)
                for (std::int64_t vp = 0; vp < D; ++vp)
                    out.gram_form(up + D * vp, u + D * v) = f(up + D * u, vp + D * v);
    out.gram_form = 0.5 * (out.gram_form + out.gram_form.transpose()).eval();

    const Eigen::MatrixXd& gi = legs.metric_inverse();
    const Eigen::MatrixXd& kh = legs.metric_sqrt();
    const Eigen::MatrixXd& khi = legs.metric_inv_sqrt();
    out.action = kron_left(gi, gi, out.gram_form);

    Eigen::MatrixXd frame = kron_left(khi, khi, out.gram_form);
    frame = kron_left(khi, khi, Eigen::MatrixXd(frame.transpose()));
    frame = 0.5 * (frame + frame.transpose()).eval();

    out.frame = frame;
    Eigen::MatrixXd vecs;
    block_eigen(frame, out.spectrum, vecs);
    const double hi = out.spectrum.cwiseAbs().maxCoeff();
    const double lo = out.spectrum.minCoeff();
    out.psd = lo >= -1e-10 * std::max(hi, 1.0);
    if (out.psd) {
        const Eigen::VectorXd root = out.spectrum.cwiseMax(0.0).cwiseSqrt();
        const Eigen::MatrixXd s = vecs * root.asDiagonal() * vecs.transpose();
        // Back to word coordinates: K^{-1} S K with K = Kh kron Kh.
        Eigen::MatrixXd t = kron_left(khi, khi, s);
        t.transposeInPlace();
        t = kron_left(kh, kh, t);
        out.sqrt_action = t.transpose();
        if (lo > 1e-12 * std::max(hi, 1.0)) {
            const Eigen::VectorXd inv_root = root.cwiseInverse();
            const Eigen::MatrixXd si = vecs * inv_root.asDiagonal() * vecs.transpose();
            Eigen::MatrixXd ti = kron_left(khi, khi, si);
            ti.transposeInPlace();
            ti = kron_left(kh, kh, ti);
            out.inv_sqrt_action = ti.transpose();
        }
    }
    return out;
}

RightXiCompression right_xi_compression(const FockContext& ctx, int leg_level, int Q) {
    const int top = 2 * leg_level;
    const int cut = Q < 0 ? top : resolve_q(ctx, Q);
    std::vector<double> w(static_cast<std::size_t>(top + 1), 0.0);
    for (int n = 0; n <= std::min(cut, top); ++n) w[static_cast<std::size_t>(n)] = std::pow(ctx.q(), n);
    RightXiCompression out = right_level_multiplier_compression(ctx, leg_level, w);
    out.Q = cut;
    return out;
}

}  // namespace qfock
