#include "qfock/operators.hpp"

#include <cmath>

#include <Eigen/SVD>

#include "qfock/errors.hpp"
#include "qfock/fock_ops.hpp"
#include "qfock/wick.hpp"

namespace qfock {

FockOperator::FockOperator(FockContext c, Eigen::MatrixXcd m, std::optional<int> shift)
    : ctx(std::move(c)), matrix(std::move(m)), grading_shift(shift) {
    if (matrix.rows() != ctx.dimension() || matrix.cols() != ctx.dimension()) {
        throw ContextMismatch("operator matrix does not match the context dimension");
    }
}

FockOperator FockOperator::identity(const FockContext& ctx) {
    return FockOperator(ctx, Eigen::MatrixXcd::Identity(ctx.dimension(), ctx.dimension()), 0);
}

FockOperator FockOperator::zero(const FockContext& ctx) {
    return FockOperator(ctx, Eigen::MatrixXcd::Zero(ctx.dimension(), ctx.dimension()));
}

GradedVector FockOperator::apply(const GradedVector& v) const {
    require_same(ctx, v);
    return GradedVector{v.alphabet, v.top, matrix * v.coeffs};
}

namespace {

void check_ctx(const FockOperator& a, const FockOperator& b) {
    if (!a.ctx.same_space(b.ctx)) throw ContextMismatch("operators from different contexts");
}

std::optional<int> combine(std::optional<int> a, std::optional<int> b) {
    if (a && b && *a == *b) return a;
    return std::nullopt;
}

}  // namespace

FockOperator FockOperator::operator+(const FockOperator& o) const {
    check_ctx(*this, o);
    return FockOperator(ctx, matrix + o.matrix, combine(grading_shift, o.grading_shift));
}

FockOperator FockOperator::operator-(const FockOperator& o) const {
    check_ctx(*this, o);
    return FockOperator(ctx, matrix - o.matrix, combine(grading_shift, o.grading_shift));
}

FockOperator FockOperator::operator*(const FockOperator& o) const {
    check_ctx(*this, o);
    std::optional<int> shift;
    if (grading_shift && o.grading_shift && *grading_shift == 0 && *o.grading_shift == 0) shift = 0;
    return FockOperator(ctx, matrix * o.matrix, shift);
}

FockOperator FockOperator::operator*(cplx s) const {
    return FockOperator(ctx, matrix * s, grading_shift);
}

bool FockOperator::grading_consistent(double tol) const {
    if (!grading_shift || *grading_shift == 0) return true;
    const auto& idx = ctx.indexer();
    for (int r = 0; r <= ctx.level(); ++r) {
        for (int c = 0; c <= ctx.level(); ++c) {
            if (r - c == *grading_shift) continue;
            auto blk = matrix.block(idx.offset(r), idx.offset(c), idx.level_size(r), idx.level_size(c));
            if (blk.cwiseAbs().maxCoeff() > tol) return false;
        }
    }
    return true;
}

namespace {

void check_index(int i, const FockContext& ctx) {
    if (i < 1 || i > ctx.alphabet()) {
        throw RangeError("generator index " + std::to_string(i) + " outside 1.." +
                         std::to_string(ctx.alphabet()));
    }
}

template <class F>
FockOperator from_action(const FockContext& ctx, std::optional<int> shift, F&& f) {
    const auto& idx = ctx.indexer();
    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(idx.dimension(), idx.dimension());
    return FockOperator(ctx, f(idx, id).template cast<cplx>(), shift);
}

}  // namespace

FockOperator creation(int i, const FockContext& ctx) {
    check_index(i, ctx);
    return from_action(ctx, 1, [&](const WordIndexer& idx, const Eigen::MatrixXd& id) {
        return ops::left_create(idx, idx, id, i);
    });
}

FockOperator annihilation(int i, const FockContext& ctx) {
    check_index(i, ctx);
    return from_action(ctx, -1, [&](const WordIndexer& idx, const Eigen::MatrixXd& id) {
        return ops::left_annihilate(idx, idx, id, i, ctx.q());
    });
}

FockOperator right_creation(int i, const FockContext& ctx) {
    check_index(i, ctx);
    return from_action(ctx, 1, [&](const WordIndexer& idx, const Eigen::MatrixXd& id) {
        return ops::right_create(idx, idx, id, i);
    });
}

FockOperator right_annihilation(int i, const FockContext& ctx) {
    FockOperator a = adjoint(right_creation(i, ctx));
    a.grading_shift = -1;
    return a;
}

FockOperator right_annihilation_formula(int i, const FockContext& ctx) {
    check_index(i, ctx);
    return from_action(ctx, -1, [&](const WordIndexer& idx, const Eigen::MatrixXd& id) {
        return ops::right_annihilate(idx, idx, id, i, ctx.q());
    });
}

FockOperator gaussian(int i, const FockContext& ctx) {
    FockOperator x = creation(i, ctx) + annihilation(i, ctx);
    x.grading_shift = std::nullopt;
    return x;
}

FockOperator right_gaussian(int i, const FockContext& ctx) {
    check_index(i, ctx);
    return from_action(ctx, std::nullopt, [&](const WordIndexer& idx, const Eigen::MatrixXd& id) {
        return ops::right_gaussian(idx, idx, id, i, ctx.q());
    });
}

FockOperator adjoint(const FockOperator& a) {
    const Eigen::MatrixXcd g = a.ctx.metric().cast<cplx>();
    const Eigen::MatrixXcd ginv = a.ctx.metric_inverse().cast<cplx>();
    std::optional<int> shift;
    if (a.grading_shift) shift = -*a.grading_shift;
    return FockOperator(a.ctx, ginv * a.matrix.adjoint() * g, shift);
}

FockOperator wick_word(const Word& w, const FockContext& ctx) {
    if (static_cast<int>(w.size()) > ctx.level()) {
        throw CapacityError("Wick word length above truncation level", static_cast<long long>(w.size()),
                            ctx.level());
    }
    for (int l : w) check_index(l, ctx);
    return FockOperator(ctx, ctx.wick_table()[w].cast<cplx>());
}

FockOperator wick_operator(const GradedVector& xi, const FockContext& ctx) {
    require_same(ctx, xi);
    const WickTable& table = ctx.wick_table();
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(ctx.dimension(), ctx.dimension());
    for (Eigen::Index g = 0; g < xi.coeffs.size(); ++g) {
        if (xi.coeffs(g) == 0.0) continue;
        m += xi.coeffs(g) * table.at(g).cast<cplx>();
    }
    return FockOperator(ctx, std::move(m));
}

FockOperator poly_operator(const NCPoly& p, const FockContext& ctx) {
    if (p.max_letter() > ctx.alphabet()) throw RangeError("polynomial uses letters beyond N");
    const auto& idx = ctx.indexer();
    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(idx.dimension(), idx.dimension());
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(idx.dimension(), idx.dimension());
    for (const auto& [w, c] : p.terms()) {
        m += c * ops::left_monomial(idx, idx, id, w, ctx.q()).cast<cplx>();
    }
    return FockOperator(ctx, std::move(m));
}

cplx trace_state(const FockOperator& a) {
    // Omega has index 0 and Gamma_0 = 1.
    return a.matrix(0, 0);
}

double op_norm(const FockOperator& a) { return op_norm_on_levels(a, a.ctx.level()); }

double op_norm_on_levels(const FockOperator& a, int max_level) {
    if (max_level < 0) return 0.0;
    max_level = std::min(max_level, a.ctx.level());
    const auto cols = a.ctx.indexer().offset(max_level + 1);
    const Eigen::MatrixXcd k = a.ctx.metric_sqrt().cast<cplx>();
    const Eigen::MatrixXcd kinv = a.ctx.metric_inv_sqrt().leftCols(cols).cast<cplx>();
    const Eigen::MatrixXcd m = k * a.matrix * kinv;
    Eigen::BDCSVD<Eigen::MatrixXcd> svd(m);
    return svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
}

double c_q(double q) {
    if (!(q > -1.0 && q < 1.0)) throw RangeError("C_q needs q in (-1, 1)");
    double inv = 1.0;
    double qm = 1.0;
    for (int m = 1; m <= 1000000; ++m) {
        qm *= q;
        const double factor = 1.0 - qm;
        inv *= factor;
        if (std::abs(1.0 - factor) < 1e-15) break;
    }
    return 1.0 / inv;
}

BozejkoReport bozejko_check(const GradedVector& xi, const FockContext& ctx) {
    require_same(ctx, xi);
    const auto levels = xi.support_levels();
    if (levels.size() > 1) throw DomainError("bozejko_check needs a homogeneous vector");
    BozejkoReport r;
    r.level = levels.empty() ? 0 : levels.front();
    r.lhs = op_norm(wick_operator(xi, ctx));
    r.l2 = q_norm(ctx, xi);
    r.bound = std::pow(c_q(std::abs(ctx.q())), 1.5) * (r.level + 1) * r.l2;
    r.pass = r.lhs <= r.bound + 1e-9;
    r.lower_pass = r.lhs >= r.l2 - 1e-9;
    return r;
}

}  // namespace qfock
