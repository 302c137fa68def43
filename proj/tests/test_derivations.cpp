#include <doctest.h>

#include <random>

#include "qfock/derivations.hpp"
#include "qfock/errors.hpp"
#include "qfock/fock_ops.hpp"
#include "qfock/operators.hpp"

using namespace qfock;

namespace {

double maxabs(const Eigen::MatrixXcd& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

NCPoly random_poly(int N, int max_deg, std::mt19937_64& rng, int terms = 4) {
    std::normal_distribution<double> g;
    std::uniform_int_distribution<int> deg(0, max_deg), letter(1, N);
    NCPoly p;
    for (int t = 0; t < terms; ++t) {
        Word w(static_cast<std::size_t>(deg(rng)));
        for (auto& x : w) x = letter(rng);
        p.add(w, cplx(g(rng), g(rng)));
    }
    return p;
}

GradedVector random_vector(const FockContext& ctx, std::mt19937_64& rng, int only_level = -1, bool complex = true) {
    std::normal_distribution<double> g;
    GradedVector v = GradedVector::zero(ctx);
    const auto& idx = ctx.indexer();
    for (Eigen::Index i = 0; i < v.coeffs.size(); ++i) {
        if (only_level >= 0 && idx.level_of_global(i) != only_level) continue;
        v.coeffs(i) = cplx(g(rng), complex ? g(rng) : 0.0);
    }
    return v;
}

HSElement random_hs(const FockContext& ctx, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    HSElement t = HSElement::zero(ctx);
    for (Eigen::Index i = 0; i < t.coeffs.size(); ++i) t.coeffs.data()[i] = cplx(g(rng), g(rng));
    return t;
}

// Bimodule action P . T . R on coefficient matrices: (a (x) b) -> P a (x) b R.
HSElement bimodule(const NCPoly& p, const HSElement& t, const NCPoly& r) {
    const auto& ctx = t.ctx;
    const auto& idx = ctx.indexer();
    const double q = ctx.q();
    Eigen::MatrixXcd left = Eigen::MatrixXcd::Zero(idx.dimension(), idx.dimension());
    for (const auto& [w, c] : p.terms())
        left += c * ops::left_monomial(idx, idx, Eigen::MatrixXd::Identity(idx.dimension(), idx.dimension()), w, q)
                        .cast<cplx>();
    Eigen::MatrixXcd right = Eigen::MatrixXcd::Zero(idx.dimension(), idx.dimension());
    for (const auto& [w, c] : r.terms())
        right += c * ops::right_monomial(idx, idx, Eigen::MatrixXd::Identity(idx.dimension(), idx.dimension()), w, q)
                         .cast<cplx>();
    return HSElement(ctx, left * t.coeffs * right.transpose());
}

}  // namespace

TEST_CASE("generator values") {
    auto ctx = make_context(2, 0.3, 4);
    const HSElement one = HSElement::unit(ctx);
    for (int i = 1; i <= 2; ++i)
        for (int j = 1; j <= 2; ++j) {
            const NCPoly x = NCPoly::variable(i);
            const double d = i == j ? 1.0 : 0.0;
            CHECK(maxabs(derive(x, j, DerivationTag::fdq(), ctx).coeffs - (one * d).coeffs) == 0.0);
            CHECK(maxabs(derive(x, j, DerivationTag::commutator(), ctx).coeffs - (xi_as_hs(ctx) * d).coeffs) < 1e-14);
            CHECK(maxabs(derive(x, j, DerivationTag::truncated(2), ctx).coeffs - (xi_as_hs(ctx, 2) * d).coeffs) <
                  1e-14);
        }
    // d_1(X_1 X_2) = 1 (x) X_2.
    const HSElement e = derive(NCPoly::monomial({1, 2}), 1, DerivationTag::fdq(), ctx);
    CHECK(maxabs(e.coeffs - HSElement::tensor(ctx, GradedVector::vacuum(ctx), GradedVector::basis(ctx, {2})).coeffs) ==
          0.0);
    CHECK(maxabs(derive(NCPoly::constant(2.0), 1, DerivationTag::commutator(), ctx).coeffs) == 0.0);
    CHECK_THROWS_AS(derive(NCPoly::monomial({1, 1, 1, 1, 1}), 1, DerivationTag::fdq(), ctx), RangeError);
    CHECK_THROWS_AS(derive(NCPoly::variable(1), 3, DerivationTag::fdq(), ctx), RangeError);
    CHECK_THROWS_AS(derive(NCPoly::variable(1), 1, DerivationTag::truncated(5), ctx), RangeError);
    CHECK_THROWS_AS(derive(NCPoly::variable(1), 1, DerivationTag::doubling(), ctx), DomainError);
    CHECK(DerivationTag::truncated(3).name() == "Q_TRUNCATED(3)");
}

TEST_CASE("commutator identity") {
    for (double q : {-0.4, 0.25}) {
        auto ctx = make_context(2, q, 6);
        CHECK(commutator_check(NCPoly::constant(1.0), 1, ctx) == 0.0);
        for (int deg = 1; deg <= 3; ++deg) {
            const WordIndexer idx(2, deg);
            for (std::int64_t l = 0; l < idx.level_size(deg); ++l) {
                const Word w = idx.word_at_local(deg, l);
                for (int j = 1; j <= 2; ++j) CHECK(commutator_check(NCPoly::monomial(w), j, ctx) < 1e-9);
            }
        }
    }
    CHECK_THROWS_AS(commutator_check(NCPoly::monomial({1, 1, 1}), 1, make_context(2, 0.1, 3)), RangeError);
}

TEST_CASE("partial trace") {
    std::mt19937_64 rng(31);
    for (double q : {-0.5, 0.0, 0.4}) {
        auto ctx = make_context(2, q, 4);
        const GradedVector v = partial_tau(NCPoly::variable(1), 1, ctx);
        CHECK(maxabs(v.coeffs - GradedVector::vacuum(ctx).coeffs) < 1e-14);
        CHECK(maxabs(partial_tau(NCPoly::constant(3.0), 1, ctx).coeffs) == 0.0);
        for (int t = 0; t < 10; ++t) {
            const NCPoly p = random_poly(2, 4, rng);
            for (int j = 1; j <= 2; ++j) {
                const GradedVector expect = right_annihilation(j, ctx).apply(apply_to_vacuum(p, ctx));
                CHECK(maxabs(partial_tau(p, j, ctx).coeffs - expect.coeffs) < 1e-10);
            }
        }
    }
}

TEST_CASE("Leibniz rule") {
    std::mt19937_64 rng(8);
    for (double q : {-0.3, 0.45}) {
        auto ctx = make_context(2, q, 5);
        for (int t = 0; t < 8; ++t) {
            const NCPoly a = random_poly(2, 2, rng, 3), b = random_poly(2, 3, rng, 3);
            for (int j = 1; j <= 2; ++j) {
                const auto tag = DerivationTag::fdq();
                const HSElement lhs = derive(a * b, j, tag, ctx);
                const HSElement rhs = bimodule(NCPoly::constant(1.0), derive(a, j, tag, ctx), b) +
                                      bimodule(a, derive(b, j, tag, ctx), NCPoly::constant(1.0));
                CHECK(maxabs(lhs.coeffs - rhs.coeffs) < 1e-10);
            }
        }
        // Q_TRUNCATED(0) = FDQ-valued on generators, and with Q = 1 every leg stays below L.
        const NCPoly a = NCPoly::monomial({1, 2}), b = NCPoly::monomial({1});
        const HSElement lhs = derive(a * b, 1, DerivationTag::truncated(1), ctx);
        const HSElement rhs = bimodule(NCPoly::constant(1.0), derive(a, 1, DerivationTag::truncated(1), ctx), b) +
                              bimodule(a, derive(b, 1, DerivationTag::truncated(1), ctx), NCPoly::constant(1.0));
        CHECK(maxabs(lhs.coeffs - rhs.coeffs) < 1e-10);
    }
}

TEST_CASE("realness") {
    std::mt19937_64 rng(12);
    auto ctx = make_context(2, -0.35, 4);
    for (int t = 0; t < 6; ++t) {
        const NCPoly p = random_poly(2, 4, rng);
        for (const auto& tag : {DerivationTag::fdq(), DerivationTag::commutator(), DerivationTag::truncated(2)}) {
            const HSElement a = derive(p.star(), 1, tag, ctx);
            const HSElement b = derive(p, 1, tag, ctx).real_structure();
            CHECK(maxabs(a.coeffs - b.coeffs) < 1e-10);
        }
    }
}

TEST_CASE("adjoint of the commutator derivation") {
    std::mt19937_64 rng(99);
    auto ctx = make_context(2, 0.3, 4);
    for (int j = 1; j <= 2; ++j) {
        const GradedVector h = dq_star(HSElement::unit(ctx), j);
        CHECK(maxabs(h.coeffs - GradedVector::basis(ctx, {j}).coeffs) < 1e-15);
    }
    int count = 0;
    for (double q : {-0.6, 0.0, 0.3})
        for (int L = 3; L <= 4; ++L) {
            auto c = make_context(2, q, L);
            for (int t = 0; t < 8; ++t, ++count) {
                const HSElement T = random_hs(c, rng);
                const NCPoly p = random_poly(2, L - 1, rng);
                const int j = 1 + t % 2;
                const cplx lhs = q_inner(c, dq_star(T, j), apply_to_vacuum(p, c));
                const cplx rhs = hs_inner(T, derive(p, j, DerivationTag::commutator(), c));
                CHECK(std::abs(lhs - rhs) < 1e-9 * std::max(1.0, std::abs(lhs)));
            }
        }
    CHECK(count == 48);
}

TEST_CASE("number operator") {
    std::mt19937_64 rng(55);
    for (double q : {-0.5, 0.0, 0.3}) {
        auto ctx = make_context(2, q, 4);
        for (int n = 0; n <= 4; ++n)
            for (int t = 0; t < 3; ++t) {
                const auto xi = random_vector(ctx, rng, n), eta = random_vector(ctx, rng, n);
                const NumberReport r = number_check(xi, eta, ctx);
                CHECK(r.residual < 1e-9 * std::max(1.0, std::abs(r.rhs)));
                CHECK(r.crosscheck < 1e-10);
                // Diagonal form.
                const NumberReport d = number_check(xi, xi, ctx);
                CHECK(std::abs(d.lhs - static_cast<double>(n) * q_norm(ctx, xi) * q_norm(ctx, xi)) <
                      1e-9 * std::max(1.0, std::abs(d.lhs)));
            }
        const auto a = random_vector(ctx, rng, 2), b = random_vector(ctx, rng, 3);
        CHECK(std::abs(number_check(a, b, ctx).lhs) < 1e-12);
    }
    // xi = h_i (x) h_j: lhs = 2 <xi, xi>.
    const double q = 0.4;
    auto ctx = make_context(2, q, 3);
    CHECK(number_check(GradedVector::basis(ctx, {1, 1}), GradedVector::basis(ctx, {1, 1}), ctx).lhs.real() ==
          doctest::Approx(2 * (1 + q)));
    CHECK(number_check(GradedVector::basis(ctx, {1, 2}), GradedVector::basis(ctx, {1, 2}), ctx).lhs.real() ==
          doctest::Approx(2.0));
    CHECK_THROWS_AS(number_check(GradedVector::vacuum(ctx) + GradedVector::basis(ctx, {1}),
                                 GradedVector::vacuum(ctx), ctx),
                    DomainError);
}

TEST_CASE("conjugate variables at q = 0") {
    for (int N = 1; N <= 3; ++N) {
        auto ctx = make_context(N, 0.0, 3);
        for (int j = 1; j <= N; ++j) {
            const auto r = conjugate_variable(j, 5, ctx);
            CHECK(maxabs(r.xi.coeffs - GradedVector::basis(ctx, {j}).coeffs) < 1e-12);
            for (int k = 1; k <= N; ++k) {
                const auto lip = lipschitz_diagnostic(j, k, 3, ctx);
                CHECK(lip.lr_op_norm == doctest::Approx(j == k ? 1.0 : 0.0));
                CHECK(lip.l2_norm >= 0.0);
            }
        }
        CHECK(fisher_estimate(4, ctx) == doctest::Approx(static_cast<double>(N)).epsilon(1e-12));
    }
    CHECK_THROWS_AS(conjugate_variable(3, 2, make_context(2, 0.0, 2)), RangeError);
}

TEST_CASE("conjugate variable satisfies the defining duality at truncation") {
    // <xi_j, P Omega> = <U_n, d^(q)_j P>, and dq_star(Xi) is close to h_j's image under the
    // inverse, so xi_j pairs with X_i like the identity matrix when the series has converged.
    auto ctx = make_context(2, 0.05, 4);
    const auto r = conjugate_variable(1, 15, ctx);
    const NeumannResult u = xi_inverse_neumann(ctx, 15, false);
    std::mt19937_64 rng(3);
    for (int t = 0; t < 5; ++t) {
        const NCPoly p = random_poly(2, 3, rng);
        const cplx lhs = q_inner(ctx, r.xi, apply_to_vacuum(p, ctx));
        const cplx rhs = hs_inner(u.u, derive(p, 1, DerivationTag::commutator(), ctx));
        CHECK(std::abs(lhs - rhs) < 1e-9);
    }
    CHECK(std::abs(q_inner(ctx, r.xi, GradedVector::basis(ctx, {1})) - 1.0) < 1e-3);
}

TEST_CASE("conjugate series") {
    auto ctx = make_context(2, 0.05, 3);
    const auto s = conjugate_series(6, ctx, true);
    REQUIRE(s.rows.size() == 7);
    CHECK(s.rows[0].fisher == doctest::Approx(2.0));
    CHECK(s.rows[0].lipschitz.size() == 4);
    const auto r = conjugate_variable(2, 6, ctx);
    CHECK(s.rows[6].xi_norms[1] == doctest::Approx(r.norms.back()).epsilon(1e-12));
    CHECK_FALSE(s.rho_warning);
}

TEST_CASE("equivalence of the derivations") {
    std::mt19937_64 rng(17);
    auto c0 = make_context(2, 0.0, 3);
    const auto r0 = equivalence_check(NCPoly::monomial({1, 2, 1}), 1, c0);
    CHECK(r0.available);
    CHECK(r0.sqrt == doctest::Approx(r0.fdq));
    CHECK(r0.commutator == doctest::Approx(r0.fdq));
    CHECK(r0.truncated == doctest::Approx(r0.fdq));

    for (double q : {-0.4, 0.15, 0.5}) {
        auto ctx = make_context(2, q, 4);
        for (int t = 0; t < 4; ++t) {
            const NCPoly p = random_poly(2, 4, rng);
            for (int Q : {0, 2, 4}) {
                const auto r = equivalence_check(p, 1 + t % 2, ctx, Q);
                REQUIRE(r.available);
                CHECK(r.first);
                CHECK(r.second);
                CHECK(r.third);
                CHECK(r.commutator_crosscheck < 1e-10);
                CHECK(r.sqrt_crosscheck < 1e-9);
                CHECK(r.doubling_crosscheck < 1e-9 * std::max(1.0, r.sqrt * r.sqrt));
                if (r.fdq > 0) {
                    CHECK(r.sqrt > 0.0);
                    CHECK(std::isfinite(r.sqrt / r.fdq));
                }
            }
        }
    }
}

TEST_CASE("continuity at q = 0") {
    const NCPoly p = NCPoly::monomial({1, 2, 1}) + NCPoly::monomial({2, 2}) * cplx(0.5, -1.0);
    auto c0 = make_context(2, 0.0, 4);
    auto c1 = make_context(2, 1e-8, 4);
    for (const auto& tag : {DerivationTag::fdq(), DerivationTag::commutator(), DerivationTag::truncated(2),
                            DerivationTag::sqrt()}) {
        CHECK(maxabs(derive(p, 1, tag, c0).coeffs - derive(p, 1, tag, c1).coeffs) < 1e-6);
    }
}
