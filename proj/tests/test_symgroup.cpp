#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "qfock/errors.hpp"
#include "qfock/symgroup.hpp"

using namespace qfock;

namespace {
double max_abs(const Eigen::MatrixXd& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }
}  // namespace

TEST_CASE("inversions") {
    CHECK(inversions(Permutation::identity(4)) == 0);
    CHECK(inversions(Permutation({3, 2, 1})) == 3);
    CHECK(inversions(Permutation({2, 1, 3})) == 1);
}

TEST_CASE("inversions change by one under adjacent transpositions") {
    for (int n = 2; n <= 6; ++n) {
        for (const auto& p : all_permutations(n)) {
            for (int k = 1; k < n; ++k) {
                std::vector<int> im(static_cast<std::size_t>(n));
                std::iota(im.begin(), im.end(), 1);
                std::swap(im[static_cast<std::size_t>(k - 1)], im[static_cast<std::size_t>(k)]);
                const int d = inversions(compose(p, Permutation(im))) - inversions(p);
                CHECK((d == 1 || d == -1));
            }
        }
    }
}

TEST_CASE("permutation validation") {
    CHECK_THROWS_AS(Permutation({1, 1}), RangeError);
    CHECK_THROWS_AS(Permutation({0, 1}), RangeError);
}

TEST_CASE("cycle_perm") {
    CHECK(cycle_perm(1, 1, 3) == Permutation::identity(3));
    CHECK(cycle_perm(1, 3, 3) == Permutation({2, 3, 1}));
    CHECK(cycle_perm(2, 3, 4) == Permutation({1, 3, 2, 4}));
    CHECK_THROWS_AS(cycle_perm(3, 2, 4), RangeError);
    CHECK_THROWS_AS(cycle_perm(1, 5, 4), RangeError);
}

TEST_CASE("perm_action") {
    const WordMatrix id = perm_action(Permutation::identity(3), 2);
    CHECK(max_abs(id.entries - Eigen::MatrixXd::Identity(8, 8)) == 0.0);

    // swap on (1,2) gives (2,1): local indices 1 and 2
    const WordMatrix sw = perm_action(Permutation({2, 1}), 2);
    CHECK(sw.entries(2, 1) == 1.0);
    CHECK(sw.entries(1, 2) == 1.0);

    for (const auto& p : all_permutations(3)) {
        const Eigen::MatrixXd m = perm_action(p, 3).entries;
        CHECK(max_abs(m.transpose() * m - Eigen::MatrixXd::Identity(27, 27)) == 0.0);
    }
}

TEST_CASE("perm_action is an anti-homomorphism") {
    const auto perms = all_permutations(3);
    for (const auto& a : perms)
        for (const auto& b : perms) {
            const Eigen::MatrixXd lhs = perm_action(a, 2).entries * perm_action(b, 2).entries;
            CHECK(max_abs(lhs - perm_action(compose(b, a), 2).entries) == 0.0);
        }
}

TEST_CASE("pq_direct examples") {
    CHECK(max_abs(pq_direct(1, 3, 0.4).entries - Eigen::MatrixXd::Identity(3, 3)) == 0.0);
    const WordMatrix p2 = pq_direct(2, 1, 0.3);
    CHECK(p2.entries(0, 0) == doctest::Approx(1.3));
    const WordMatrix p22 = pq_direct(2, 2, 0.3);
    CHECK(p22.entries(1, 2) == doctest::Approx(0.3));
}

TEST_CASE("pq_direct agrees with the brute-force inner product") {
    const double q = -0.35;
    for (int n = 0; n <= 4; ++n) {
        const WordMatrix p = pq_direct(n, 2, q);
        const auto ws = oracle::words(2, n);
        for (std::size_t a = 0; a < ws.size(); ++a)
            for (std::size_t b = 0; b < ws.size(); ++b)
                CHECK(p.entries(static_cast<long>(a), static_cast<long>(b)) ==
                      doctest::Approx(oracle::q_inner_words(ws[a], ws[b], q)).epsilon(1e-13));
    }
}

TEST_CASE("pq_direct is symmetric positive definite on the q grid") {
    for (double q : {-0.9, -0.5, -0.1, 0.0, 0.1, 0.5, 0.9}) {
        for (int n = 1; n <= 4; ++n) {
            const Eigen::MatrixXd p = pq_direct(n, 2, q).entries;
            CHECK(max_abs(p - p.transpose()) < 1e-14);
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(p);
            CHECK(es.eigenvalues().minCoeff() > 0.0);
        }
    }
}

TEST_CASE("pq_direct capacity error") {
    SizeCaps caps;
    caps.max_dimension = 16;
    CHECK_THROWS_AS(pq_direct(5, 2, 0.1, caps), CapacityError);
    caps.max_dimension = 1 << 20;
    caps.max_perm_length = 4;
    CHECK_THROWS_AS(pq_direct(5, 2, 0.1, caps), CapacityError);
    try {
        pq_direct(5, 2, 0.1, caps);
    } catch (const CapacityError& e) {
        CHECK(e.requested() == 5);
        CHECK(e.limit() == 4);
    }
}

TEST_CASE("mn_matrix examples") {
    CHECK(max_abs(mn_matrix(1, 2, 0.3).entries - Eigen::MatrixXd::Identity(2, 2)) == 0.0);
    const Eigen::MatrixXd m2 = mn_matrix(2, 2, 0.3).entries;
    const Eigen::MatrixXd expect =
        Eigen::MatrixXd::Identity(4, 4) + 0.3 * perm_action(Permutation({2, 1}), 2).entries;
    CHECK(max_abs(m2 - expect) < 1e-15);
    CHECK(mn_matrix(3, 1, 0.5).entries(0, 0) == doctest::Approx(1.75));
}

TEST_CASE("Zagier recursion matches the direct sum") {
    for (double q : {-0.9, -0.5, -0.1, 0.0, 0.1, 0.5, 0.9})
        for (int N = 1; N <= 2; ++N)
            for (int n = 1; n <= 6; ++n) {
                const double err = max_abs(pq_recursive(n, N, q).entries - pq_direct(n, N, q).entries);
                CHECK(err < 1e-12);
            }
}

TEST_CASE("mn_inverse") {
    const MnInverse i2 = mn_inverse(2, 1, 0.3);
    CHECK(i2.inverse.entries(0, 0) == doctest::Approx(1.0 / 1.3));

    const Eigen::MatrixXd sw = perm_action(Permutation({2, 1}), 3).entries;
    const Eigen::MatrixXd expect = (Eigen::MatrixXd::Identity(9, 9) - 0.3 * sw) / (1 - 0.09);
    CHECK(max_abs(mn_inverse(2, 3, 0.3).inverse.entries - expect) < 1e-14);

    for (double q : {-0.9, -0.5, 0.1, 0.7})
        for (int n = 1; n <= 6; ++n) {
            const MnInverse r = mn_inverse(n, 2, q);
            CHECK(r.product_formula_used);
            CHECK(r.residual < 1e-10);
            const Eigen::MatrixXd left = r.inverse.entries * mn_matrix(n, 2, q).entries;
            CHECK(max_abs(left - Eigen::MatrixXd::Identity(left.rows(), left.cols())) < 1e-10);
        }
}

TEST_CASE("q outside (-1,1) is rejected") {
    CHECK_THROWS_AS(pq_direct(2, 2, 1.0), RangeError);
    CHECK_THROWS_AS(mn_inverse(2, 2, -1.0), RangeError);
}
