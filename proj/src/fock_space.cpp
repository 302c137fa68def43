#include "qfock/fock_space.hpp"

#include <cmath>
#include <map>
#include <mutex>

#include "qfock/errors.hpp"
#include "qfock/fock_ops.hpp"
#include "qfock/wick.hpp"

namespace qfock {

namespace {

constexpr double kDegenerateTol = 1e-12;

// Write-once-per-level memo of Gram blocks for one (N, q).
class GramStore {
public:
    GramStore(int alphabet, double q) : alphabet_(alphabet), q_(q) {}

    const GramBlock& get(int n, const SizeCaps& caps) {
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = blocks_.find(n);
        if (it != blocks_.end()) return *it->second;
        auto block = std::make_unique<GramBlock>(build(n, caps));
        const GramBlock& ref = *block;
        blocks_.emplace(n, std::move(block));
        return ref;
    }

private:
    GramBlock build(int n, const SizeCaps& caps) const {
        GramBlock g;
        g.n = n;
        g.gamma = n <= caps.max_perm_length ? pq_direct(n, alphabet_, q_, caps)
                                            : pq_recursive(n, alphabet_, q_, caps);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g.gamma.entries);
        const Eigen::VectorXd& lam = es.eigenvalues();
        g.min_eig = lam.minCoeff();
        g.max_eig = lam.maxCoeff();
        if (!(g.min_eig > kDegenerateTol)) throw DegenerateMetricError(n, g.min_eig);
        const Eigen::MatrixXd& v = es.eigenvectors();
        auto fn = [&](auto f) {
            Eigen::VectorXd d = lam.unaryExpr(f);
            return WordMatrix{n, alphabet_, v * d.asDiagonal() * v.transpose()};
        };
        g.b = fn([](double x) { return 1.0 / std::sqrt(x); });
        g.sqrt_gamma = fn([](double x) { return std::sqrt(x); });
        g.inverse = fn([](double x) { return 1.0 / x; });
        return g;
    }

    int alphabet_;
    double q_;
    std::mutex mutex_;
    std::map<int, std::unique_ptr<GramBlock>> blocks_;
};

std::shared_ptr<GramStore> shared_store(int alphabet, double q) {
    static std::mutex registry_mutex;
    static std::map<std::pair<int, double>, std::weak_ptr<GramStore>> registry;
    std::lock_guard<std::mutex> lock(registry_mutex);
    auto& slot = registry[{alphabet, q}];
    if (auto existing = slot.lock()) return existing;
    auto fresh = std::make_shared<GramStore>(alphabet, q);
    slot = fresh;
    return fresh;
}

}  // namespace

struct FockContext::Impl {
    int alphabet;
    double q;
    int level;
    SizeCaps caps;
    WordIndexer indexer;
    std::shared_ptr<GramStore> store;

    mutable std::once_flag metric_once;
    mutable Eigen::MatrixXd metric, metric_sqrt, metric_inv_sqrt, metric_inverse;
    mutable std::once_flag reversal_once;
    mutable Eigen::MatrixXd reversal;
    mutable std::once_flag wick_once;
    mutable std::unique_ptr<WickTable> wick;

    Impl(int n, double qq, int l, SizeCaps c)
        : alphabet(n), q(qq), level(l), caps(c), indexer(n, l), store(shared_store(n, qq)) {}
};

FockContext make_context(int alphabet, double q, int level, SizeCaps caps) {
    return FockContext(alphabet, q, level, caps);
}

FockContext::FockContext(int alphabet, double q, int level, SizeCaps caps) {
    if (!(q > -1.0 && q < 1.0)) throw RangeError("q must lie in (-1, 1), got " + std::to_string(q));
    if (alphabet < 1) throw RangeError("alphabet size N must be >= 1");
    if (level < 0) throw RangeError("truncation level L must be >= 0");
    const std::int64_t dim = graded_dimension(alphabet, level);
    if (dim > caps.max_dimension) {
        throw CapacityError("Fock space dimension sum_{n<=L} N^n", dim, caps.max_dimension);
    }
    impl_ = std::make_shared<Impl>(alphabet, q, level, caps);
}

FockContext::FockContext(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}

int FockContext::alphabet() const noexcept { return impl_->alphabet; }
double FockContext::q() const noexcept { return impl_->q; }
int FockContext::level() const noexcept { return impl_->level; }
const SizeCaps& FockContext::caps() const noexcept { return impl_->caps; }
const WordIndexer& FockContext::indexer() const noexcept { return impl_->indexer; }
std::int64_t FockContext::dimension() const noexcept { return impl_->indexer.dimension(); }

const GramBlock& FockContext::gram(int n) const {
    if (n < 0) throw RangeError("Gram level must be >= 0");
    return impl_->store->get(n, impl_->caps);
}

namespace {

void build_metric(const FockContext& ctx, Eigen::MatrixXd& g, Eigen::MatrixXd& s,
                  Eigen::MatrixXd& is, Eigen::MatrixXd& inv) {
    const auto d = ctx.dimension();
    g = s = is = inv = Eigen::MatrixXd::Zero(d, d);
    const auto& idx = ctx.indexer();
    for (int n = 0; n <= ctx.level(); ++n) {
        const GramBlock& b = ctx.gram(n);
        const auto o = idx.offset(n), k = idx.level_size(n);
        g.block(o, o, k, k) = b.gamma.entries;
        s.block(o, o, k, k) = b.sqrt_gamma.entries;
        is.block(o, o, k, k) = b.b.entries;
        inv.block(o, o, k, k) = b.inverse.entries;
    }
}

}  // namespace

const Eigen::MatrixXd& FockContext::metric() const {
    std::call_once(impl_->metric_once, [this] {
        build_metric(*this, impl_->metric, impl_->metric_sqrt, impl_->metric_inv_sqrt,
                     impl_->metric_inverse);
    });
    return impl_->metric;
}

const Eigen::MatrixXd& FockContext::metric_sqrt() const {
    metric();
    return impl_->metric_sqrt;
}

const Eigen::MatrixXd& FockContext::metric_inv_sqrt() const {
    metric();
    return impl_->metric_inv_sqrt;
}

const Eigen::MatrixXd& FockContext::metric_inverse() const {
    metric();
    return impl_->metric_inverse;
}

const Eigen::MatrixXd& FockContext::reversal() const {
    std::call_once(impl_->reversal_once, [this] {
        const auto d = dimension();
        impl_->reversal = Eigen::MatrixXd::Zero(d, d);
        const auto map = ops::reversal_map(indexer());
        for (std::int64_t g = 0; g < d; ++g) impl_->reversal(map[static_cast<std::size_t>(g)], g) = 1.0;
    });
    return impl_->reversal;
}

const WickTable& FockContext::wick_table() const {
    std::call_once(impl_->wick_once, [this] {
        impl_->wick = std::make_unique<WickTable>(alphabet(), q(), level(), level(), level(), caps());
    });
    return *impl_->wick;
}

FockContext FockContext::with_level(int level) const {
    if (level == impl_->level) return *this;
    FockContext out(impl_->alphabet, impl_->q, level, impl_->caps);
    return out;
}

FockContext FockContext::doubled() const {
    return FockContext(2 * impl_->alphabet, impl_->q, impl_->level, impl_->caps);
}

bool FockContext::same_space(const FockContext& other) const noexcept {
    return impl_ == other.impl_ ||
           (alphabet() == other.alphabet() && q() == other.q() && level() == other.level());
}

// ---------------------------------------------------------------------------

GradedVector GradedVector::zero(const FockContext& ctx) {
    return GradedVector{ctx.alphabet(), ctx.level(), Eigen::VectorXcd::Zero(ctx.dimension())};
}

GradedVector GradedVector::vacuum(const FockContext& ctx) {
    GradedVector v = zero(ctx);
    v.coeffs(0) = 1.0;
    return v;
}

GradedVector GradedVector::basis(const FockContext& ctx, const Word& w) {
    GradedVector v = zero(ctx);
    v.coeffs(ctx.indexer().global_index(w)) = 1.0;
    return v;
}

Eigen::VectorXcd GradedVector::level(int n) const {
    WordIndexer idx(alphabet, top);
    if (n < 0 || n > top) throw RangeError("level outside the vector's range");
    return coeffs.segment(idx.offset(n), idx.level_size(n));
}

std::vector<int> GradedVector::support_levels(double tol) const {
    WordIndexer idx(alphabet, top);
    std::vector<int> out;
    for (int n = 0; n <= top; ++n) {
        if (coeffs.segment(idx.offset(n), idx.level_size(n)).cwiseAbs().maxCoeff() > tol) out.push_back(n);
    }
    return out;
}

namespace {
void same_shape(const GradedVector& a, const GradedVector& b) {
    if (a.alphabet != b.alphabet || a.top != b.top) throw ContextMismatch("graded vectors of different spaces");
}
}  // namespace

GradedVector& GradedVector::operator+=(const GradedVector& o) {
    same_shape(*this, o);
    coeffs += o.coeffs;
    return *this;
}

GradedVector& GradedVector::operator-=(const GradedVector& o) {
    same_shape(*this, o);
    coeffs -= o.coeffs;
    return *this;
}

GradedVector GradedVector::operator+(const GradedVector& o) const {
    GradedVector r = *this;
    return r += o;
}

GradedVector GradedVector::operator-(const GradedVector& o) const {
    GradedVector r = *this;
    return r -= o;
}

GradedVector GradedVector::operator*(cplx s) const {
    GradedVector r = *this;
    r.coeffs *= s;
    return r;
}

void require_same(const FockContext& ctx, const GradedVector& v) {
    if (v.alphabet != ctx.alphabet() || v.top != ctx.level() || v.coeffs.size() != ctx.dimension()) {
        throw ContextMismatch("vector does not belong to this context");
    }
}

cplx q_inner(const FockContext& ctx, const GradedVector& v, const GradedVector& w) {
    require_same(ctx, v);
    require_same(ctx, w);
    const auto& idx = ctx.indexer();
    cplx total = 0.0;
    for (int n = 0; n <= ctx.level(); ++n) {
        const auto o = idx.offset(n), k = idx.level_size(n);
        auto a = v.coeffs.segment(o, k);
        auto b = w.coeffs.segment(o, k);
        if (a.squaredNorm() == 0.0 || b.squaredNorm() == 0.0) continue;
        total += a.dot(ctx.gram(n).gamma.entries.cast<cplx>() * b);
    }
    return total;
}

double q_norm(const FockContext& ctx, const GradedVector& v) {
    return std::sqrt(std::max(0.0, q_inner(ctx, v, v).real()));
}

const GramBlock& gram(int n, const FockContext& ctx) {
    if (n < 0 || n > ctx.level()) throw RangeError("Gram level outside 0..L");
    return ctx.gram(n);
}

std::vector<GradedVector> orthonormal_vectors(int n, const FockContext& ctx) {
    const GramBlock& g = gram(n, ctx);
    const auto& idx = ctx.indexer();
    std::vector<GradedVector> out;
    for (Eigen::Index c = 0; c < g.b.entries.cols(); ++c) {
        GradedVector v = GradedVector::zero(ctx);
        v.coeffs.segment(idx.offset(n), idx.level_size(n)) = g.b.entries.col(c).cast<cplx>();
        out.push_back(std::move(v));
    }
    return out;
}

GradedVector regrade(const GradedVector& v, int top) {
    WordIndexer from(v.alphabet, v.top), to(v.alphabet, top);
    return GradedVector{v.alphabet, top, ops::regrade(from, to, v.coeffs)};
}

}  // namespace qfock
