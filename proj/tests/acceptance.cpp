// Acceptance run: one PASS/FAIL line per criterion, exit status 0 iff all pass.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "qfock/cli.hpp"
#include "qfock/cocycle.hpp"
#include "qfock/deformation.hpp"
#include "qfock/derivations.hpp"
#include "qfock/errors.hpp"
#include "qfock/fock_space.hpp"
#include "qfock/ncpoly.hpp"
#include "qfock/operators.hpp"
#include "qfock/symgroup.hpp"

using namespace qfock;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(double x) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.3g", x);
    return buf;
}

using Clock = std::chrono::steady_clock;
double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

GradedVector random_level(const FockContext& ctx, int n, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    GradedVector v = GradedVector::zero(ctx);
    const auto& idx = ctx.indexer();
    for (std::int64_t l = 0; l < idx.level_size(n); ++l) v.coeffs(idx.offset(n) + l) = cplx(g(rng), g(rng));
    return v;
}

GradedVector random_full(const FockContext& ctx, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    GradedVector v = GradedVector::zero(ctx);
    for (Eigen::Index i = 0; i < v.coeffs.size(); ++i) v.coeffs(i) = cplx(g(rng), g(rng));
    return v;
}

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

double max_abs(const Eigen::MatrixXcd& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

const std::vector<double> q_grid{-0.9, -0.5, -0.1, 0.0, 0.1, 0.5, 0.9};

Outcome c1_zagier() {
    const auto t0 = Clock::now();
    double worst = 0.0;
    for (double q : q_grid)
        for (int N = 1; N <= 2; ++N)
            for (int n = 1; n <= 6; ++n)
                worst = std::max(worst, (pq_recursive(n, N, q).entries - pq_direct(n, N, q).entries).cwiseAbs().maxCoeff());
    const double s = seconds_since(t0);
    return {worst <= 1e-12 && s < 10.0, "max |recursive - direct| = " + fmt(worst) + ", " + fmt(s) + " s"};
}

Outcome c2_mn_inverse() {
    double worst = 0.0, formula = 0.0;
    bool all_formula = true;
    std::string reading;
    for (double q : q_grid)
        for (int N = 1; N <= 2; ++N)
            for (int n = 1; n <= 6; ++n) {
                const MnInverse r = mn_inverse(n, N, q);
                const WordMatrix m = mn_matrix(n, N, q);
                const Eigen::MatrixXd prod = m.entries * r.inverse.entries;
                const double res =
                    (prod - Eigen::MatrixXd::Identity(prod.rows(), prod.cols())).cwiseAbs().maxCoeff();
                worst = std::max(worst, res);
                formula = std::max(formula, r.formula_residual);
                all_formula = all_formula && r.product_formula_used;
                reading = r.reading;
            }
    return {worst <= 1e-10, "max |M_n M_n^-1 - I| = " + fmt(worst) + "; product formula residual " + fmt(formula) +
                                (all_formula ? " (formula used throughout)" : " (direct inverse used where it failed)") +
                                "; reading: " + reading};
}

Outcome c3_orthonormal() {
    double worst = 0.0;
    for (double q : {-0.7, -0.3, 0.0, 0.4, 0.8})
        for (int N = 1; N <= 3; ++N) {
            const FockContext ctx = make_context(N, q, 4);
            for (int n = 0; n <= 4; ++n) {
                const auto vs = orthonormal_vectors(n, ctx);
                for (std::size_t i = 0; i < vs.size(); ++i)
                    for (std::size_t j = 0; j < vs.size(); ++j)
                        worst = std::max(worst, std::abs(q_inner(ctx, vs[i], vs[j]) - (i == j ? 1.0 : 0.0)));
            }
        }
    return {worst <= 1e-10, "max |<p_i,p_j> - delta_ij| = " + fmt(worst)};
}

Outcome c4_adjoints() {
    std::mt19937_64 rng(4);
    double left = 0.0, dual = 0.0;
    int count = 0;
    for (int t = 0; t < 100; ++t, ++count) {
        const double q = q_grid[static_cast<std::size_t>(t) % q_grid.size()];
        const FockContext ctx = make_context(2, q, 4);
        const int i = 1 + t % 2;
        const auto x = random_full(ctx, rng), y = random_full(ctx, rng);
        const cplx a = q_inner(ctx, creation(i, ctx).apply(x), y);
        const cplx b = q_inner(ctx, x, annihilation(i, ctx).apply(y));
        left = std::max(left, std::abs(a - b) / std::max(1.0, std::abs(a)));
    }
    std::normal_distribution<double> g;
    for (int t = 0; t < 100; ++t) {
        const double q = q_grid[static_cast<std::size_t>(t) % q_grid.size()];
        const FockContext ctx = make_context(2, q, 3 + t % 2);
        HSElement T = HSElement::zero(ctx);
        for (Eigen::Index k = 0; k < T.coeffs.size(); ++k) T.coeffs.data()[k] = cplx(g(rng), g(rng));
        const NCPoly p = random_poly(2, ctx.level() - 1, rng);
        const int j = 1 + t % 2;
        const cplx lhs = q_inner(ctx, dq_star(T, j), apply_to_vacuum(p, ctx));
        const cplx rhs = hs_inner(T, derive(p, j, DerivationTag::commutator(), ctx));
        dual = std::max(dual, std::abs(lhs - rhs) / std::max(1.0, std::abs(lhs)));
    }
    return {left < 1e-10 && dual < 1e-10 && count == 100,
            "creation/annihilation " + fmt(left) + ", derivation duality " + fmt(dual) + " (100 instances each)"};
}

Outcome c5_commutator() {
    double worst = 0.0, gen = 0.0;
    for (double q : {-0.4, 0.3}) {
        const FockContext ctx = make_context(2, q, 6);
        for (int i = 1; i <= 2; ++i)
            for (int j = 1; j <= 2; ++j) {
                const HSElement expect = xi_as_hs(ctx) * cplx(i == j ? 1.0 : 0.0);
                gen = std::max(gen, max_abs(derive(NCPoly::variable(i), j, DerivationTag::commutator(), ctx).coeffs -
                                            expect.coeffs));
            }
        for (int deg = 0; deg <= 3; ++deg) {
            const WordIndexer idx(2, deg);
            for (std::int64_t l = 0; l < idx.level_size(deg); ++l)
                for (int j = 1; j <= 2; ++j)
                    worst = std::max(worst, commutator_check(NCPoly::monomial(idx.word_at_local(deg, l)), j, ctx));
        }
    }
    return {worst < 1e-9 && gen < 1e-12,
            "generator values " + fmt(gen) + ", [psi(P), r(h_j)] residual " + fmt(worst)};
}

Outcome c6_number() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(6);
    double worst = 0.0;
    int count = 0;
    for (int t = 0; t < 100; ++t, ++count) {
        const int N = 1 + t % 2;
        const double q = q_grid[static_cast<std::size_t>(t / 2) % q_grid.size()];
        const int n = (t / 14) % 5;
        const FockContext ctx = make_context(N, q, 4);
        const auto r = number_check(random_level(ctx, n, rng), random_level(ctx, n, rng), ctx);
        worst = std::max(worst, r.residual);
    }
    const double s = seconds_since(t0);
    return {worst <= 1e-9 && s < 60.0 && count == 100,
            "max |sum_k <d_k xi, d_k eta> - n <xi, eta>| = " + fmt(worst) + ", " + fmt(s) + " s"};
}

Outcome c7_partial_trace() {
    std::mt19937_64 rng(7);
    double worst = 0.0;
    for (double q : {-0.6, 0.0, 0.35})
        for (int t = 0; t < 15; ++t) {
            const FockContext ctx = make_context(2, q, 4);
            const NCPoly p = random_poly(2, 4, rng);
            const int j = 1 + t % 2;
            const GradedVector expect = right_annihilation(j, ctx).apply(apply_to_vacuum(p, ctx));
            worst = std::max(worst, max_abs(partial_tau(p, j, ctx).coeffs - expect.coeffs));
        }
    return {worst <= 1e-10, "max residual " + fmt(worst)};
}

Outcome c8_thresholds() {
    bool ok = true;
    double worst_nu = 0.0, worst_rho = 0.0;
    for (int N = 2; N <= 10; ++N)
        for (double sign : {1.0, -1.0}) {
            const ConstantsReport a = constants(sign * 0.13 / N, N);
            const ConstantsReport b = constants(sign * 0.13 / std::sqrt(static_cast<double>(N)), N);
            ok = ok && a.nu < 1.0 && a.nu_lt_1 && b.rho < 1.0 && b.rho_lt_1;
            worst_nu = std::max(worst_nu, a.nu);
            worst_rho = std::max(worst_rho, b.rho);
        }
    for (int N = 1; N <= 10; ++N) {
        const ConstantsReport z = constants(0.0, N);
        ok = ok && z.nu == 0.0 && z.rho == 0.0 && z.c_q == 1.0;
    }
    ok = ok && c_q(0.0) == 1.0;
    return {ok, "max nu at |q|N = 0.13: " + fmt(worst_nu) + ", max rho at |q|sqrt(N) = 0.13: " + fmt(worst_rho)};
}

Outcome c9_bozejko() {
    std::mt19937_64 rng(9);
    int count = 0, upper_fail = 0, lower_fail = 0;
    double worst_ratio = 0.0;
    for (int t = 0; t < 200; ++t, ++count) {
        const double q = std::vector<double>{-0.5, -0.2, 0.2, 0.5}[static_cast<std::size_t>(t % 4)];
        const int N = 1 + (t / 4) % 3;
        const int n = (t / 12) % 5;
        const FockContext ctx = make_context(N, q, 4);
        const auto r = bozejko_check(random_level(ctx, n, rng), ctx);
        upper_fail += !r.pass;
        lower_fail += !r.lower_pass;
        worst_ratio = std::max(worst_ratio, r.lhs / r.bound);
    }
    return {upper_fail == 0 && lower_fail == 0 && count == 200,
            std::to_string(upper_fail) + " upper and " + std::to_string(lower_fail) +
                " lower violations; max lhs/bound " + fmt(worst_ratio)};
}

Outcome c10_semicircular() {
    double xi_res = 0.0, fisher_res = 0.0, lip_res = 0.0;
    for (int N = 1; N <= 3; ++N) {
        const FockContext ctx = make_context(N, 0.0, 4);
        for (int j = 1; j <= N; ++j) {
            xi_res = std::max(xi_res, max_abs(conjugate_variable(j, 6, ctx).xi.coeffs -
                                              GradedVector::basis(ctx, {j}).coeffs));
            lip_res = std::max(lip_res, std::abs(lipschitz_diagnostic(j, j, 4, ctx).lr_op_norm - 1.0));
        }
        fisher_res = std::max(fisher_res, std::abs(fisher_estimate(6, ctx) - static_cast<double>(N)));
    }
    return {xi_res < 1e-12 && fisher_res < 1e-12 && lip_res < 1e-12,
            "xi_j - h_j " + fmt(xi_res) + ", Fisher - N " + fmt(fisher_res) + ", Lipschitz - 1 " + fmt(lip_res)};
}

Outcome c11_neumann() {
    const FockContext ctx = make_context(2, 0.05, 5);
    const int terms = 24;
    const ConjugateSeries s = conjugate_series(terms, ctx, false);
    bool monotone = true;
    for (std::size_t n = 4; n < s.rows.size(); ++n) monotone = monotone && s.rows[n].residual < s.rows[n - 1].residual;
    // Stable to 4 significant digits from n = 20 on: every later estimate rounds like the last.
    const double last = s.rows.back().fisher;
    double drift = 0.0;
    for (std::size_t n = 20; n < s.rows.size(); ++n) drift = std::max(drift, std::abs(s.rows[n].fisher - last) / last);
    return {monotone && drift < 5e-5,
            std::string(monotone ? "residuals decrease" : "residuals NOT monotone") + " (r_3 = " +
                fmt(s.rows[3].residual) + ", r_24 = " + fmt(s.rows.back().residual) + "), Fisher(24) = " +
                fmt(last) + ", relative drift over n = 20..24 " + fmt(drift)};
}

Outcome c12_moments() {
    double worst = 0.0;
    for (double q : q_grid)
        for (int L = 4; L <= 6; ++L) {
            const FockContext ctx = make_context(2, q, L);
            const auto x1 = gaussian(1, ctx), x2 = gaussian(2, ctx);
            worst = std::max(worst, std::abs(trace_state(x1 * x1) - 1.0));
            worst = std::max(worst, std::abs(trace_state(x1 * x1 * x1 * x1) - (2.0 + q)));
            worst = std::max(worst, std::abs(trace_state(x1 * x2 * x1 * x2) - q));
        }
    return {worst < 1e-12, "max moment residual " + fmt(worst)};
}

Outcome c13_norm_bound() {
    bool ok = true;
    double worst = 0.0;
    int tested = 0;
    for (double q : q_grid)
        for (int N = 1; N <= 2; ++N)
            for (int L = 1; L <= 6; ++L) {
                const FockContext ctx = make_context(N, q, L);
                for (int i = 1; i <= N; ++i, ++tested) {
                    const double n = op_norm(gaussian(i, ctx));
                    const double bound = 2.0 / (1.0 - std::abs(q));
                    ok = ok && n < bound;
                    worst = std::max(worst, n / bound);
                }
            }
    return {ok, std::to_string(tested) + " (q, N, L, i) cases, max ||X_i|| / bound = " + fmt(worst)};
}

Outcome c14_cocycle() {
    const auto t0 = Clock::now();
    const std::string path = std::string(QFOCK_DATA_DIR) + "/z_splitting.json";
    const auto spec = cocycle::load_spec(path);
    bool ok = true;
    std::int64_t violations = 0;
    for (long M = 1; M <= 8; ++M) {
        const auto rep = cocycle::simulate(spec, {cocycle::from_int(M)}, 1e3, 10000, 1000, 2024 + M);
        ok = ok && rep.absorbed == 10000;
        for (auto j : rep.jumps) ok = ok && j == M - 1;
        violations += rep.invariant_violations;
    }
    const std::string init = "6";
    const auto a = cli::render(cocycle::simulate(spec, {cocycle::from_int(6)}, 1e3, 10000, 1000, 77), path, init);
    const auto b = cli::render(cocycle::simulate(spec, {cocycle::from_int(6)}, 1e3, 10000, 1000, 77, 4), path, init);
    const bool same = a == b;
    const double s = seconds_since(t0);
    return {ok && violations == 0 && same && s < 30.0,
            std::string(ok ? "all paths absorb in M-1 jumps" : "absorption count mismatch") + ", " +
                std::to_string(violations) + " invariant violations, reports " + (same ? "identical" : "DIFFER") +
                ", " + fmt(s) + " s"};
}

Outcome c15_hat_edge() {
    std::mt19937_64 rng(15);
    std::normal_distribution<double> g;
    bool ok = true;
    int cases = 0;
    for (int t = 0; t < 50; ++t) {
        const int rank = 1 + t % 3;
        const bool is_int = t % 5 == 0;
        std::string json = std::string("{\"group\":{\"kind\":\"") + (is_int ? "int" : "free") +
                           "\",\"rank\":" + std::to_string(is_int ? 1 : rank) + "},\"cocycles\":[";
        const int ncoc = 1 + t % 2;
        for (int j = 0; j < ncoc; ++j) {
            json += std::string(j ? "," : "") + "{\"generator_values\":{";
            const int gens = is_int ? 1 : rank;
            for (int k = 0; k < gens; ++k) {
                const std::string gen = is_int ? "1" : std::string(1, static_cast<char>('a' + k));
                const std::string e = is_int ? "0" : "\"\"";
                const std::string s = is_int ? "1" : "\"" + gen + "\"";
                json += std::string(k ? "," : "") + "\"" + gen + "\":[{\"element\":" + e + ",\"imag\":" +
                        cli::format_double(g(rng)) + "},{\"element\":" + s + ",\"imag\":" +
                        cli::format_double(g(rng)) + "}]";
            }
            json += "}}";
        }
        json += "]}";
        const auto spec = cocycle::parse_spec(json);
        const int gens = is_int ? 1 : rank;
        for (int k = 1; k <= gens; ++k, ++cases) {
            const cocycle::Element gamma = cocycle::generator(k);
            for (int j = 1; j <= spec.count(); ++j) ok = ok && cocycle::hat_norm_sq(spec, j, gamma) == 0.0;
            ok = ok && cocycle::rate(spec, {gamma}) == 0.0;
            bool threw = false;
            try {
                cocycle::transitions(spec, {gamma});
            } catch (const DomainError&) {
                threw = true;
            }
            ok = ok && threw;
            const auto rep = cocycle::simulate(spec, {gamma}, 10.0, 20, 10, 1);
            ok = ok && rep.absorbed == 20 && rep.survival == 1.0;
            for (auto j : rep.jumps) ok = ok && j == 0;
        }
    }
    return {ok, std::to_string(cases) + " generator cases with exact zero hat norm and absorbing singleton"};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"Zagier recursion equivalence", c1_zagier},
        {"M_n inversion", c2_mn_inverse},
        {"Gram orthonormality", c3_orthonormal},
        {"adjoint identities", c4_adjoints},
        {"commutator identity", c5_commutator},
        {"number operator", c6_number},
        {"partial trace", c7_partial_trace},
        {"constant thresholds", c8_thresholds},
        {"Bozejko inequality", c9_bozejko},
        {"semicircular degeneration", c10_semicircular},
        {"Neumann convergence", c11_neumann},
        {"moments", c12_moments},
        {"operator norm bound", c13_norm_bound},
        {"cocycle chain", c14_cocycle},
        {"hat-norm edge", c15_hat_edge},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += !o.pass;
        std::printf("%s %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
