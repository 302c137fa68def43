#include "qfock/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <random>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "qfock/deformation.hpp"
#include "qfock/derivations.hpp"
#include "qfock/errors.hpp"
#include "qfock/fock_space.hpp"
#include "qfock/ncpoly.hpp"
#include "qfock/operators.hpp"
#include "qfock/symgroup.hpp"

namespace qfock::cli {

using ojson = nlohmann::ordered_json;

Format parse_format(const std::string& s) {
    if (s == "csv") return Format::Csv;
    if (s == "json") return Format::Json;
    throw UsageError("unknown format '" + s + "' (expected csv or json)");
}

// ---------------------------------------------------------------------------
// Serialization

std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

namespace {

std::string cell_text(const Cell& c) {
    struct V {
        std::string operator()(const std::string& s) const { return s; }
        std::string operator()(double d) const { return format_double(d); }
        std::string operator()(std::int64_t i) const { return std::to_string(i); }
        std::string operator()(bool b) const { return b ? "true" : "false"; }
    };
    return std::visit(V{}, c);
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out += '"';
        out += ch;
    }
    return out + "\"";
}

ojson cell_json(const Cell& c) {
    struct V {
        ojson operator()(const std::string& s) const { return s; }
        ojson operator()(double d) const { return d; }
        ojson operator()(std::int64_t i) const { return i; }
        ojson operator()(bool b) const { return b; }
    };
    return std::visit(V{}, c);
}

// nlohmann prints the shortest round-trip form; the artifacts use fixed 17-digit floats,
// so numbers are written here and everything else is delegated to the library.
void emit(const ojson& j, std::string& out, int depth) {
    const std::string pad(static_cast<std::size_t>(2 * (depth + 1)), ' ');
    const std::string close(static_cast<std::size_t>(2 * depth), ' ');
    if (j.is_object()) {
        if (j.empty()) {
            out += "{}";
            return;
        }
        out += "{\n";
        bool first = true;
        for (const auto& [k, v] : j.items()) {
            if (!first) out += ",\n";
            first = false;
            out += pad + ojson(k).dump() + ": ";
            emit(v, out, depth + 1);
        }
        out += "\n" + close + "}";
    } else if (j.is_array()) {
        if (j.empty()) {
            out += "[]";
            return;
        }
        const bool flat = std::all_of(j.begin(), j.end(), [](const ojson& e) { return e.is_primitive(); });
        if (flat) {
            out += "[";
            for (std::size_t i = 0; i < j.size(); ++i) {
                if (i) out += ", ";
                emit(j[i], out, depth + 1);
            }
            out += "]";
            return;
        }
        out += "[\n";
        for (std::size_t i = 0; i < j.size(); ++i) {
            if (i) out += ",\n";
            out += pad;
            emit(j[i], out, depth + 1);
        }
        out += "\n" + close + "]";
    } else if (j.is_number_float()) {
        const double d = j.get<double>();
        out += std::isfinite(d) ? format_double(d) : "\"" + format_double(d) + "\"";
    } else {
        out += j.dump();
    }
}

std::string dump(const ojson& j) {
    std::string out;
    emit(j, out, 0);
    return out + "\n";
}

}  // namespace

std::string to_csv(const Table& t) {
    std::string out;
    for (const auto& w : t.warnings) out += "# warning: " + w + "\r\n";
    for (std::size_t i = 0; i < t.columns.size(); ++i) out += (i ? "," : "") + csv_field(t.columns[i]);
    out += "\r\n";
    for (const auto& row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + csv_field(cell_text(row[i]));
        out += "\r\n";
    }
    return out;
}

std::string to_json(const Table& t) {
    ojson j;
    j["table"] = t.name;
    j["columns"] = t.columns;
    ojson rows = ojson::array();
    for (const auto& row : t.rows) {
        ojson r = ojson::object();
        for (std::size_t i = 0; i < row.size() && i < t.columns.size(); ++i) r[t.columns[i]] = cell_json(row[i]);
        rows.push_back(std::move(r));
    }
    j["rows"] = std::move(rows);
    j["warnings"] = t.warnings;
    return dump(j);
}

std::string render(const Table& t, Format f) { return f == Format::Csv ? to_csv(t) : to_json(t); }

// ---------------------------------------------------------------------------
// constants, gram, xi, conjugate

std::vector<std::pair<double, int>> parse_grid(const std::string& s) {
    std::vector<std::pair<double, int>> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto colon = item.find(':');
        if (colon == std::string::npos) throw UsageError("grid entry '" + item + "' is not of the form q:N");
        try {
            std::size_t used = 0;
            const std::string qs = item.substr(0, colon), ns = item.substr(colon + 1);
            const double q = std::stod(qs, &used);
            if (used != qs.size()) throw std::invalid_argument(qs);
            const int n = std::stoi(ns, &used);
            if (used != ns.size()) throw std::invalid_argument(ns);
            out.emplace_back(q, n);
        } catch (const std::logic_error&) {
            throw UsageError("grid entry '" + item + "' is not of the form q:N");
        }
    }
    if (out.empty()) throw UsageError("empty grid");
    return out;
}

std::vector<std::pair<double, int>> default_constants_grid() {
    std::vector<std::pair<double, int>> g;
    for (int N = 2; N <= 10; ++N) g.emplace_back(0.13 / N, N);
    for (int N = 2; N <= 10; ++N) g.emplace_back(0.13 / std::sqrt(static_cast<double>(N)), N);
    g.emplace_back(0.0, 5);
    g.emplace_back(0.6, 2);
    return g;
}

Table cmd_constants(const std::vector<std::pair<double, int>>& grid) {
    Table t;
    t.name = "constants";
    t.columns = {"q", "N", "C_q", "nu", "rho", "nu_lt_1", "rho_lt_1"};
    for (const auto& [q, N] : grid) {
        const ConstantsReport r = constants(q, N);
        t.rows.push_back({r.q, static_cast<std::int64_t>(r.N), r.c_q, r.nu, r.rho, r.nu_lt_1, r.rho_lt_1});
    }
    return t;
}

namespace {

FockContext context_of(const ContextParams& p) { return make_context(p.N, p.q, p.L, p.caps); }

}  // namespace

Table cmd_gram(const ContextParams& p, int n) {
    if (n < 0) throw UsageError("--level must be non-negative");
    const FockContext ctx = make_context(p.N, p.q, std::max(n, 0), p.caps);
    const GramBlock& g = gram(n, ctx);
    const WordIndexer idx(p.N, n);
    Table t;
    t.name = "gram";
    t.columns = {"i", "j", "u", "v", "gamma"};
    const auto size = idx.level_size(n);
    for (std::int64_t i = 0; i < size; ++i)
        for (std::int64_t j = 0; j < size; ++j)
            t.rows.push_back({i, j, qfock::to_string(idx.word_at_local(n, i)), qfock::to_string(idx.word_at_local(n, j)),
                              g.gamma.entries(i, j)});
    return t;
}

Table cmd_xi(const ContextParams& p, int Q) {
    const FockContext ctx = context_of(p);
    if (Q > p.L) throw UsageError("--trunc-q must not exceed --level");
    Table t;
    t.name = "xi";
    t.columns = {"Q", "hs_norm", "lr_norm", "lr_minus_one_norm", "rho"};
    const ConstantsReport c = constants(p.q, p.N);
    const HSElement one = HSElement::unit(ctx);
    auto row = [&](int qq, const std::string& label) {
        const HSElement x = xi_as_hs(ctx, qq);
        t.rows.push_back({label, hs_norm(x), DoubledAction::left(x).op_norm(),
                          DoubledAction::left(x - one).op_norm(), c.rho});
    };
    if (Q >= 0) {
        row(Q, std::to_string(Q));
    } else {
        for (int qq = 0; qq <= p.L; ++qq) row(qq, std::to_string(qq));
    }
    if (!c.rho_lt_1) t.warnings.push_back("rho(q,N) >= 1: the Neumann series for Xi^{-1} is not guaranteed to converge");
    return t;
}

Table cmd_conjugate(const ContextParams& p, int terms, bool with_lipschitz) {
    if (terms < 0) throw UsageError("--terms must be non-negative");
    const FockContext ctx = context_of(p);
    const ConjugateSeries s = conjugate_series(terms, ctx, with_lipschitz);
    Table t;
    t.name = "conjugate";
    t.columns = {"n", "residual"};
    for (int j = 1; j <= p.N; ++j) t.columns.push_back("xi_norm_" + std::to_string(j));
    t.columns.push_back("fisher");
    if (with_lipschitz)
        for (int j = 1; j <= p.N; ++j)
            for (int k = 1; k <= p.N; ++k) t.columns.push_back("lipschitz_" + std::to_string(j) + "_" + std::to_string(k));
    for (const auto& r : s.rows) {
        std::vector<Cell> row{static_cast<std::int64_t>(r.n), r.residual};
        for (double x : r.xi_norms) row.emplace_back(x);
        row.emplace_back(r.fisher);
        if (with_lipschitz)
            for (double x : r.lipschitz) row.emplace_back(x);
        t.rows.push_back(std::move(row));
    }
    if (s.rho_warning)
        t.warnings.push_back("rho(q,N) >= 1 at q=" + format_double(p.q) + ", N=" + std::to_string(p.N) +
                             ": convergence of the Neumann series is not guaranteed");
    if (s.nonconvergence_warning) t.warnings.push_back("Neumann residuals did not decrease monotonically");
    return t;
}

// ---------------------------------------------------------------------------
// verify

bool VerifyReport::pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

const std::vector<std::string>& suite_names() {
    static const std::vector<std::string> names{"gram", "operators", "bozejko", "derivations", "number", "conjugate"};
    return names;
}

namespace {

class Runner {
public:
    Runner(std::vector<Check>& out, std::string suite) : out_(out), suite_(std::move(suite)) {}

    void check(const std::string& name, double tol, const std::function<double()>& f) {
        Check c;
        c.suite = suite_;
        c.name = name;
        c.tolerance = tol;
        try {
            c.residual = f();
            c.pass = std::isfinite(c.residual) && c.residual <= tol;
        } catch (const std::exception& e) {
            c.residual = std::numeric_limits<double>::quiet_NaN();
            c.error = e.what();
        }
        out_.push_back(std::move(c));
    }

private:
    std::vector<Check>& out_;
    std::string suite_;
};

GradedVector random_level_vector(const FockContext& ctx, int n, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    GradedVector v = GradedVector::zero(ctx);
    const auto& idx = ctx.indexer();
    for (std::int64_t l = 0; l < idx.level_size(n); ++l) v.coeffs(idx.offset(n) + l) = cplx(g(rng), g(rng));
    return v;
}

GradedVector random_full_vector(const FockContext& ctx, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    GradedVector v = GradedVector::zero(ctx);
    for (Eigen::Index i = 0; i < v.coeffs.size(); ++i) v.coeffs(i) = cplx(g(rng), g(rng));
    return v;
}

NCPoly random_poly(int N, int max_deg, std::mt19937_64& rng, int terms = 4) {
    std::normal_distribution<double> g;
    std::uniform_int_distribution<int> deg(0, std::max(0, max_deg)), letter(1, N);
    NCPoly p;
    for (int t = 0; t < terms; ++t) {
        Word w(static_cast<std::size_t>(deg(rng)));
        for (auto& x : w) x = letter(rng);
        p.add(w, cplx(g(rng), g(rng)));
    }
    return p;
}

double max_abs(const Eigen::MatrixXcd& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

void suite_gram(const ContextParams& p, Runner& r) {
    const int top = std::min(p.L, 6);
    for (int n = 1; n <= top; ++n) {
        r.check("zagier_recursion_n" + std::to_string(n), 1e-12, [&] {
            const auto a = pq_recursive(n, p.N, p.q, p.caps), b = pq_direct(n, p.N, p.q, p.caps);
            return (a.entries - b.entries).cwiseAbs().maxCoeff();
        });
        r.check("mn_inverse_n" + std::to_string(n), 1e-10, [&] { return mn_inverse(n, p.N, p.q, p.caps).residual; });
    }
    const FockContext ctx = make_context(p.N, p.q, p.L, p.caps);
    for (int n = 0; n <= std::min(p.L, 4); ++n) {
        r.check("orthonormal_basis_n" + std::to_string(n), 1e-10, [&] {
            const auto vs = orthonormal_vectors(n, ctx);
            double worst = 0.0;
            for (std::size_t i = 0; i < vs.size(); ++i)
                for (std::size_t j = 0; j < vs.size(); ++j)
                    worst = std::max(worst, std::abs(q_inner(ctx, vs[i], vs[j]) - (i == j ? 1.0 : 0.0)));
            return worst;
        });
    }
    for (int n = 0; n <= p.L; ++n)
        r.check("gram_positive_n" + std::to_string(n), 0.0,
                [&] { return std::max(0.0, -gram(n, ctx).min_eig); });
}

void suite_operators(const ContextParams& p, Runner& r, std::mt19937_64& rng) {
    const FockContext ctx = make_context(p.N, p.q, p.L, p.caps);
    r.check("adjoint_creation_annihilation_100", 1e-10, [&] {
        double worst = 0.0;
        for (int t = 0; t < 100; ++t) {
            const int i = 1 + t % p.N;
            const auto a = creation(i, ctx), as = annihilation(i, ctx);
            const auto x = random_full_vector(ctx, rng), y = random_full_vector(ctx, rng);
            const double scale = std::max(1.0, q_norm(ctx, x) * q_norm(ctx, y));
            worst = std::max(worst, std::abs(q_inner(ctx, a.apply(x), y) - q_inner(ctx, x, as.apply(y))) / scale);
        }
        return worst;
    });
    r.check("right_annihilation_formula", 1e-12, [&] {
        double worst = 0.0;
        for (int i = 1; i <= p.N; ++i)
            worst = std::max(worst, max_abs(right_annihilation(i, ctx).matrix - right_annihilation_formula(i, ctx).matrix));
        return worst;
    });
    if (p.L >= 1) {
        r.check("moment_x1x1", 1e-12, [&] {
            const auto x = gaussian(1, ctx);
            return std::abs(trace_state(x * x) - 1.0);
        });
    }
    if (p.L >= 2) {
        r.check("moment_x1x1x1x1", 1e-12, [&] {
            const auto x = gaussian(1, ctx);
            return std::abs(trace_state(x * x * x * x) - (2.0 + p.q));
        });
        if (p.N >= 2)
            r.check("moment_x1x2x1x2", 1e-12, [&] {
                const auto x = gaussian(1, ctx), y = gaussian(2, ctx);
                return std::abs(trace_state(x * y * x * y) - p.q);
            });
    }
    for (int i = 1; i <= p.N; ++i)
        r.check("gaussian_norm_bound_" + std::to_string(i), 0.0, [&, i] {
            const double n = op_norm(gaussian(i, ctx));
            const double bound = 2.0 / (1.0 - std::abs(p.q));
            return n < bound ? 0.0 : n - bound + std::numeric_limits<double>::min();
        });
}

void suite_bozejko(const ContextParams& p, Runner& r, std::mt19937_64& rng) {
    const FockContext ctx = make_context(p.N, p.q, p.L, p.caps);
    const int top = std::min(p.L, 4);
    r.check("bozejko_upper_200", 1e-9, [&] {
        double worst = 0.0;
        for (int t = 0; t < 200; ++t) {
            const auto rep = bozejko_check(random_level_vector(ctx, t % (top + 1), rng), ctx);
            worst = std::max(worst, rep.lhs - rep.bound);
        }
        return std::max(0.0, worst);
    });
    r.check("bozejko_lower_200", 1e-9, [&] {
        double worst = 0.0;
        for (int t = 0; t < 200; ++t) {
            const auto rep = bozejko_check(random_level_vector(ctx, t % (top + 1), rng), ctx);
            worst = std::max(worst, rep.l2 - rep.lhs);
        }
        return std::max(0.0, worst);
    });
}

void suite_derivations(const ContextParams& p, Runner& r, std::mt19937_64& rng) {
    const FockContext ctx = make_context(p.N, p.q, p.L, p.caps);
    const int top = std::min(3, p.L - 1);
    for (int deg = 0; deg <= top; ++deg) {
        r.check("commutator_identity_deg" + std::to_string(deg), 1e-9, [&, deg] {
            const WordIndexer idx(p.N, deg);
            double worst = 0.0;
            for (std::int64_t l = 0; l < idx.level_size(deg); ++l)
                for (int j = 1; j <= p.N; ++j)
                    worst = std::max(worst, commutator_check(NCPoly::monomial(idx.word_at_local(deg, l)), j, ctx));
            return worst;
        });
    }
    r.check("partial_trace_20", 1e-10, [&] {
        double worst = 0.0;
        for (int t = 0; t < 20; ++t) {
            const NCPoly poly = random_poly(p.N, std::min(4, p.L), rng);
            const int j = 1 + t % p.N;
            const GradedVector expect = right_annihilation(j, ctx).apply(apply_to_vacuum(poly, ctx));
            worst = std::max(worst, max_abs(partial_tau(poly, j, ctx).coeffs - expect.coeffs));
        }
        return worst;
    });
    r.check("adjoint_duality_100", 1e-10, [&] {
        std::normal_distribution<double> g;
        double worst = 0.0;
        for (int t = 0; t < 100; ++t) {
            HSElement T = HSElement::zero(ctx);
            for (Eigen::Index i = 0; i < T.coeffs.size(); ++i) T.coeffs.data()[i] = cplx(g(rng), g(rng));
            const NCPoly poly = random_poly(p.N, std::max(0, p.L - 1), rng);
            const int j = 1 + t % p.N;
            const cplx lhs = q_inner(ctx, dq_star(T, j), apply_to_vacuum(poly, ctx));
            const cplx rhs = hs_inner(T, derive(poly, j, DerivationTag::commutator(), ctx));
            worst = std::max(worst, std::abs(lhs - rhs) / std::max(1.0, std::abs(lhs)));
        }
        return worst;
    });
    const int eq_level = std::min(p.L, 4);
    const FockContext ectx = make_context(p.N, p.q, eq_level, p.caps);
    for (int Q : {0, eq_level / 2, eq_level}) {
        r.check("equivalence_sandwich_Q" + std::to_string(Q), 1e-9, [&, Q] {
            double worst = 0.0;
            for (int t = 0; t < 3; ++t) {
                const NCPoly poly = random_poly(p.N, eq_level, rng);
                const auto e = equivalence_check(poly, 1 + t % p.N, ectx, Q);
                if (!e.available) throw UnavailableError("Xi compression is not positive");
                const double a = e.xi_half, b = e.xi_minus_half;
                const double viol[] = {
                    e.commutator - a * e.sqrt,
                    a * e.sqrt - a * a * e.fdq,
                    e.fdq - b * e.sqrt,
                    b * e.sqrt - b * b * e.commutator,
                    e.commutator * (1.0 - e.xi_q_minus_xi * b * b) - e.truncated,
                    e.truncated - e.xi_q * e.fdq,
                    e.commutator_crosscheck,
                    e.sqrt_crosscheck,
                    e.doubling_crosscheck / std::max(1.0, e.sqrt * e.sqrt),
                };
                for (double v : viol) worst = std::max(worst, v);
            }
            return std::max(0.0, worst);
        });
    }
}

void suite_number(const ContextParams& p, Runner& r, std::mt19937_64& rng) {
    const FockContext ctx = make_context(p.N, p.q, p.L, p.caps);
    const int top = std::min(p.L, 4);
    r.check("number_operator_100", 1e-9, [&] {
        double worst = 0.0;
        for (int t = 0; t < 100; ++t) {
            const int n = t % (top + 1);
            const auto rep = number_check(random_level_vector(ctx, n, rng), random_level_vector(ctx, n, rng), ctx);
            worst = std::max(worst, rep.residual / std::max(1.0, std::abs(rep.rhs)));
        }
        return worst;
    });
    r.check("number_operator_crosscheck", 1e-10, [&] {
        double worst = 0.0;
        for (int n = 0; n <= top; ++n) {
            const auto x = random_level_vector(ctx, n, rng);
            worst = std::max(worst, number_check(x, x, ctx).crosscheck);
        }
        return worst;
    });
    if (top >= 2)
        r.check("number_operator_orthogonal_levels", 1e-12, [&] {
            return std::abs(number_check(random_level_vector(ctx, 1, rng), random_level_vector(ctx, 2, rng), ctx).lhs);
        });
}

void suite_conjugate(const ContextParams& p, int terms, Runner& r, std::mt19937_64& rng) {
    const FockContext ctx = make_context(p.N, p.q, p.L, p.caps);
    std::shared_ptr<NeumannResult> u;
    r.check("neumann_residual_monotone", 0.0, [&] {
        u = std::make_shared<NeumannResult>(xi_inverse_neumann(ctx, terms, true));
        double worst = 0.0;
        for (std::size_t k = 4; k < u->residuals.size(); ++k)
            worst = std::max(worst, u->residuals[k] - u->residuals[k - 1]);
        return std::max(0.0, worst);
    });
    r.check("neumann_residual_identity", 1e-9, [&] {
        if (!u) throw Error("Neumann series unavailable");
        const double direct = DoubledAction::left(neumann_defect_direct(ctx, u->u)).op_norm();
        return std::abs(direct - u->residuals.back()) / std::max(1.0, direct);
    });
    r.check("conjugate_duality", 1e-9, [&] {
        if (!u) throw Error("Neumann series unavailable");
        double worst = 0.0;
        for (int j = 1; j <= p.N; ++j) {
            const GradedVector xi = dq_star(u->u, j);
            for (int t = 0; t < 5; ++t) {
                const NCPoly poly = random_poly(p.N, std::max(0, p.L - 1), rng);
                const cplx lhs = q_inner(ctx, xi, apply_to_vacuum(poly, ctx));
                const cplx rhs = hs_inner(u->u, derive(poly, j, DerivationTag::commutator(), ctx));
                worst = std::max(worst, std::abs(lhs - rhs) / std::max(1.0, std::abs(lhs)));
            }
        }
        return worst;
    });
    if (p.q == 0.0) {
        r.check("semicircular_conjugate_variable", 1e-12, [&] {
            double worst = 0.0;
            for (int j = 1; j <= p.N; ++j)
                worst = std::max(worst, max_abs(conjugate_variable(j, terms, ctx).xi.coeffs -
                                                GradedVector::basis(ctx, {j}).coeffs));
            return worst;
        });
        r.check("semicircular_fisher", 1e-12,
                [&] { return std::abs(fisher_estimate(terms, ctx) - static_cast<double>(p.N)); });
    }
}

}  // namespace

VerifyReport cmd_verify(const std::string& suite, const ContextParams& p, int terms, std::uint64_t seed) {
    const auto& names = suite_names();
    if (suite != "all" && std::find(names.begin(), names.end(), suite) == names.end())
        throw UsageError("unknown suite '" + suite + "'");
    if (terms < 0) throw UsageError("--terms must be non-negative");

    VerifyReport rep;
    rep.suite = suite;
    rep.params = p;
    rep.terms = terms;
    rep.seed = seed;
    for (const auto& name : names) {
        if (suite != "all" && suite != name) continue;
        Runner r(rep.checks, name);
        // Each suite gets its own stream so that a single suite reproduces its part of "all".
        std::mt19937_64 rng(seed + std::hash<std::string>{}(name));
        try {
            if (name == "gram") suite_gram(p, r);
            if (name == "operators") suite_operators(p, r, rng);
            if (name == "bozejko") suite_bozejko(p, r, rng);
            if (name == "derivations") suite_derivations(p, r, rng);
            if (name == "number") suite_number(p, r, rng);
            if (name == "conjugate") suite_conjugate(p, terms, r, rng);
        } catch (const std::exception& e) {
            // Setup failures (context construction and the like) become one failed check.
            Check c;
            c.suite = name;
            c.name = "setup";
            c.residual = std::numeric_limits<double>::quiet_NaN();
            c.error = e.what();
            rep.checks.push_back(std::move(c));
        }
    }
    return rep;
}

std::string render(const VerifyReport& r, Format f) {
    if (f == Format::Csv) {
        Table t;
        t.name = "verify";
        t.columns = {"suite", "check", "residual", "tolerance", "pass", "error"};
        for (const auto& c : r.checks) t.rows.push_back({c.suite, c.name, c.residual, c.tolerance, c.pass, c.error});
        return to_csv(t);
    }
    ojson j;
    j["suite"] = r.suite;
    j["N"] = r.params.N;
    j["q"] = r.params.q;
    j["level"] = r.params.L;
    j["terms"] = r.terms;
    j["seed"] = r.seed;
    j["pass"] = r.pass();
    ojson checks = ojson::array();
    for (const auto& c : r.checks) {
        ojson x;
        x["suite"] = c.suite;
        x["check"] = c.name;
        x["residual"] = c.residual;
        x["tolerance"] = c.tolerance;
        x["pass"] = c.pass;
        if (!c.error.empty()) x["error"] = c.error;
        checks.push_back(std::move(x));
    }
    j["checks"] = std::move(checks);
    return dump(j);
}

// ---------------------------------------------------------------------------
// cocycle-sim

cocycle::State parse_state(const cocycle::GroupSpec& g, const std::string& s) {
    cocycle::State st;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item.erase(std::remove_if(item.begin(), item.end(), [](unsigned char c) { return std::isspace(c); }),
                   item.end());
        cocycle::Element e;
        if (g.kind == cocycle::GroupKind::Int) {
            try {
                std::size_t used = 0;
                const long n = std::stol(item, &used);
                if (used != item.size()) throw std::invalid_argument(item);
                if (n > 100000 || n < -100000) throw UsageError("initial component out of range: " + item);
                e = cocycle::from_int(n);
            } catch (const std::logic_error&) {
                throw UsageError("initial component '" + item + "' is not an integer");
            }
        } else {
            try {
                e = cocycle::from_string(item, g.rank);
            } catch (const RangeError& err) {
                throw UsageError(std::string("initial component: ") + err.what());
            }
        }
        if (cocycle::is_identity(e)) throw UsageError("initial state components must differ from the identity");
        st.push_back(std::move(e));
    }
    if (st.empty()) throw UsageError("empty initial state");
    return st;
}

cocycle::SimReport cmd_cocycle(const std::string& spec_path, const std::string& init, double horizon,
                               std::int64_t n_paths, std::int64_t max_jumps, std::uint64_t seed) {
    if (max_jumps < 1) throw UsageError("--max-jumps must be at least 1");
    if (n_paths < 1) throw UsageError("--paths must be at least 1");
    if (!(horizon > 0.0)) throw UsageError("--horizon must be positive");
    const auto spec = cocycle::load_spec(spec_path);
    const auto st = parse_state(spec.group, init);
    return cocycle::simulate(spec, st, horizon, n_paths, max_jumps, seed);
}

std::string render(const cocycle::SimReport& r, const std::string& spec_path, const std::string& init) {
    ojson j;
    j["spec"] = spec_path;
    j["init"] = init;
    j["n_paths"] = r.n_paths;
    j["horizon"] = r.horizon;
    j["max_jumps"] = r.max_jumps;
    j["seed"] = r.seed;
    j["absorbed"] = r.absorbed;
    j["censored"] = r.censored;
    j["active"] = r.active;
    j["survival"] = r.survival;
    j["survival_half_width"] = r.half_width;
    j["invariant_violations"] = r.invariant_violations;
    j["max_probability_defect"] = r.max_probability_defect;
    std::map<std::int64_t, std::int64_t> hist;
    for (auto x : r.jumps) ++hist[x];
    ojson h = ojson::object();
    for (const auto& [k, v] : hist) h[std::to_string(k)] = v;
    j["jump_histogram"] = std::move(h);
    j["jumps"] = r.jumps;
    return dump(j);
}

// ---------------------------------------------------------------------------
// Entry point

namespace {

void write_output(const std::string& text, const std::string& path, std::ostream& out) {
    if (path.empty() || path == "-") {
        out << text;
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open output file: " + path);
    f << text;
    if (!f) throw std::runtime_error("write failed: " + path);
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Numerical laboratory for q-deformed Fock spaces"};
    app.require_subcommand(1);

    int N = 2;
    double q = 0.1;
    int level = 5;
    int trunc_q = -1;
    int terms = 10;
    std::string grid, spec_path, init, out_path, format;
    double horizon = 100.0;
    std::int64_t paths = 10000, max_jumps = 1000;
    std::uint64_t seed = 1;
    std::int64_t cap_override = 0;
    std::string suite;

    auto add_ctx = [&](CLI::App* c) {
        c->add_option("--n", N, "alphabet size N")->check(CLI::Range(1, 1000));
        c->add_option("--q", q, "deformation parameter in (-1, 1)");
        c->add_option("--level", level, "truncation level L")->check(CLI::NonNegativeNumber);
    };
    auto add_common = [&](CLI::App* c) {
        c->add_option("--out", out_path, "output file (default stdout)");
        c->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
        c->add_option("--cap-override", cap_override, "override the dense dimension cap")
            ->check(CLI::PositiveNumber);
    };

    auto* c_const = app.add_subcommand("constants", "C_q, nu and rho over a grid of (q, N)");
    c_const->add_option("--grid", grid, "comma-separated q:N pairs");
    c_const->add_option("--q", q, "single q (with --n)");
    c_const->add_option("--n", N, "single N (with --q)");
    add_common(c_const);

    auto* c_verify = app.add_subcommand("verify", "run a verification suite");
    c_verify->add_option("suite", suite, "gram, operators, bozejko, derivations, number, conjugate or all")
        ->required();
    add_ctx(c_verify);
    c_verify->add_option("--terms", terms, "Neumann terms for the conjugate suite");
    c_verify->add_option("--seed", seed, "random seed");
    add_common(c_verify);

    auto* c_gram = app.add_subcommand("gram", "Gram matrix of one level");
    c_gram->add_option("--n", N, "alphabet size N")->check(CLI::Range(1, 1000));
    c_gram->add_option("--q", q, "deformation parameter");
    c_gram->add_option("--level", level, "level n")->check(CLI::NonNegativeNumber);
    add_common(c_gram);

    auto* c_xi = app.add_subcommand("xi", "norms of Xi and its truncations");
    add_ctx(c_xi);
    c_xi->add_option("--trunc-q", trunc_q, "single truncation order Q");
    add_common(c_xi);

    auto* c_conj = app.add_subcommand("conjugate", "conjugate-variable convergence series");
    add_ctx(c_conj);
    c_conj->add_option("--terms", terms, "number of Neumann terms");
    add_common(c_conj);

    auto* c_cocycle = app.add_subcommand("cocycle-sim", "simulate the cocycle Markov chain");
    c_cocycle->add_option("--spec", spec_path, "cocycle spec JSON file")->required();
    c_cocycle->add_option("--init", init, "initial state, e.g. 5 or ab,Ba")->required();
    c_cocycle->add_option("--horizon", horizon, "time horizon");
    c_cocycle->add_option("--paths", paths, "number of paths");
    c_cocycle->add_option("--max-jumps", max_jumps, "jump budget per path");
    c_cocycle->add_option("--seed", seed, "random seed");
    add_common(c_cocycle);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        if (const auto* sub = app.get_subcommands().empty() ? nullptr : app.get_subcommands().front())
            err << sub->help();
        return 2;
    }

    try {
        ContextParams p;
        p.caps = SizeCaps::from_environment();
        if (cap_override > 0) p.caps.max_dimension = cap_override;
        p.N = N;
        p.q = q;
        p.L = level;
        if (!(q > -1.0 && q < 1.0)) throw UsageError("--q must lie in (-1, 1)");

        if (c_const->parsed()) {
            std::vector<std::pair<double, int>> g;
            if (!grid.empty())
                g = parse_grid(grid);
            else if (c_const->count("--q") || c_const->count("--n"))
                g = {{q, N}};
            else
                g = default_constants_grid();
            write_output(render(cmd_constants(g), parse_format(format.empty() ? "csv" : format)), out_path, out);
            return 0;
        }
        if (c_verify->parsed()) {
            const auto rep = cmd_verify(suite, p, terms, seed);
            write_output(render(rep, parse_format(format.empty() ? "json" : format)), out_path, out);
            return rep.pass() ? 0 : 1;
        }
        if (c_gram->parsed()) {
            write_output(render(cmd_gram(p, level), parse_format(format.empty() ? "csv" : format)), out_path, out);
            return 0;
        }
        if (c_xi->parsed()) {
            const Table t = cmd_xi(p, trunc_q);
            if (!out_path.empty() && out_path != "-")
                for (const auto& w : t.warnings) err << "warning: " << w << "\n";
            write_output(render(t, parse_format(format.empty() ? "csv" : format)), out_path, out);
            return 0;
        }
        if (c_conj->parsed()) {
            const Table t = cmd_conjugate(p, terms);
            if (!out_path.empty() && out_path != "-")
                for (const auto& w : t.warnings) err << "warning: " << w << "\n";
            write_output(render(t, parse_format(format.empty() ? "csv" : format)), out_path, out);
            return 0;
        }
        if (c_cocycle->parsed()) {
            if (!format.empty() && format != "json") throw UsageError("cocycle-sim writes JSON only");
            const auto rep = cmd_cocycle(spec_path, init, horizon, paths, max_jumps, seed);
            write_output(render(rep, spec_path, init), out_path, out);
            return rep.invariant_violations == 0 ? 0 : 1;
        }
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const RangeError& e) {
        err << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 3;
    }
    return 2;
}

}  // namespace qfock::cli
