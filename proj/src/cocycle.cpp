#include "qfock/cocycle.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "qfock/errors.hpp"

namespace qfock::cocycle {

using json = nlohmann::json;

Element identity() { return {}; }

Element generator(int g) {
    if (g == 0) throw RangeError("generator index must be nonzero");
    return {g};
}

Element reduce(const std::vector<int>& word) {
    Element out;
    out.reserve(word.size());
    for (int x : word) {
        if (x == 0) throw RangeError("letter 0 in group word");
        if (!out.empty() && out.back() == -x)
            out.pop_back();
        else
            out.push_back(x);
    }
    return out;
}

Element multiply(const Element& a, const Element& b) {
    Element out = a;
    std::size_t i = 0;
    while (i < b.size() && !out.empty() && out.back() == -b[i]) {
        out.pop_back();
        ++i;
    }
    out.insert(out.end(), b.begin() + static_cast<std::ptrdiff_t>(i), b.end());
    return out;
}

Element inverse(const Element& a) {
    Element out(a.rbegin(), a.rend());
    for (int& x : out) x = -x;
    return out;
}

bool is_identity(const Element& a) { return a.empty(); }

Element from_int(long n) {
    Element out(static_cast<std::size_t>(n < 0 ? -n : n), n < 0 ? -1 : 1);
    return out;
}

long to_int(const Element& a) {
    long n = 0;
    for (int x : a) {
        if (x != 1 && x != -1) throw RangeError("element is not in the rank-1 group");
        n += x;
    }
    return n;
}

Element from_string(const std::string& s, int rank) {
    std::vector<int> word;
    word.reserve(s.size());
    for (char ch : s) {
        int g = 0;
        if (ch >= 'a' && ch <= 'z')
            g = ch - 'a' + 1;
        else if (ch >= 'A' && ch <= 'Z')
            g = -(ch - 'A' + 1);
        else
            throw RangeError(std::string("invalid letter '") + ch + "' in group word");
        if (std::abs(g) > rank)
            throw RangeError(std::string("letter '") + ch + "' exceeds the group rank " + std::to_string(rank));
        word.push_back(g);
    }
    return reduce(word);
}

std::string to_string(const Element& a) {
    std::string s;
    s.reserve(a.size());
    for (int x : a) {
        if (std::abs(x) > 26) throw RangeError("generator index too large for letter encoding");
        s.push_back(x > 0 ? static_cast<char>('a' + x - 1) : static_cast<char>('A' - x - 1));
    }
    return s;
}

std::string format(const GroupSpec& g, const Element& a) {
    if (g.kind == GroupKind::Int) return std::to_string(to_int(a));
    return a.empty() ? std::string("e") : to_string(a);
}

// ---------------------------------------------------------------------------
// Spec parsing

namespace {

[[noreturn]] void schema_error(const std::string& path, const std::string& msg) {
    throw DomainError("cocycle spec: " + path + ": " + msg);
}

const json& require(const json& obj, const std::string& key, const std::string& path) {
    if (!obj.is_object()) schema_error(path, "expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) schema_error(path, "missing field \"" + key + "\"");
    return *it;
}

int parse_generator(const GroupSpec& g, const std::string& key, const std::string& path) {
    if (g.kind == GroupKind::Int) {
        if (key == "1") return 1;
        schema_error(path, "the only generator of Z is \"1\"");
    }
    if (key.size() == 1 && key[0] >= 'a' && key[0] <= 'z') {
        int idx = key[0] - 'a' + 1;
        if (idx <= g.rank) return idx;
    }
    schema_error(path, "unknown generator \"" + key + "\"");
}

Element parse_element(const GroupSpec& g, const json& v, const std::string& path) {
    if (g.kind == GroupKind::Int) {
        if (!v.is_number_integer()) schema_error(path, "expected an integer");
        const long n = v.get<long>();
        if (n > 100000 || n < -100000) schema_error(path, "integer element out of range");
        return from_int(n);
    }
    if (!v.is_string()) schema_error(path, "expected a word string");
    try {
        return from_string(v.get<std::string>(), g.rank);
    } catch (const RangeError& e) {
        schema_error(path, e.what());
    }
}

void prune(Chain& c) {
    double mx = 0.0;
    for (const auto& [k, v] : c) mx = std::max(mx, std::abs(v));
    const double tol = 1e-14 * mx;
    for (auto it = c.begin(); it != c.end();) {
        if (std::abs(it->second) <= tol)
            it = c.erase(it);
        else
            ++it;
    }
}

void add_into(Chain& acc, const Chain& f, double sign) {
    for (const auto& [k, v] : f) acc[k] += sign * v;
}

}  // namespace

CocycleSpec parse_spec(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw DomainError(std::string("cocycle spec: malformed JSON: ") + e.what());
    }

    CocycleSpec spec;
    const json& group = require(doc, "group", "$");
    const json& kind = require(group, "kind", "$.group");
    if (!kind.is_string()) schema_error("$.group.kind", "expected a string");
    const std::string k = kind.get<std::string>();
    if (k == "int")
        spec.group.kind = GroupKind::Int;
    else if (k == "free")
        spec.group.kind = GroupKind::Free;
    else
        schema_error("$.group.kind", "expected \"int\" or \"free\", got \"" + k + "\"");

    const json& rank = require(group, "rank", "$.group");
    if (!rank.is_number_integer()) schema_error("$.group.rank", "expected an integer");
    spec.group.rank = rank.get<int>();
    if (spec.group.kind == GroupKind::Int && spec.group.rank != 1)
        schema_error("$.group.rank", "Z has rank 1");
    if (spec.group.rank < 1 || spec.group.rank > 26) schema_error("$.group.rank", "rank must lie in 1..26");

    const json& cocycles = require(doc, "cocycles", "$");
    if (!cocycles.is_array()) schema_error("$.cocycles", "expected an array");
    if (cocycles.empty()) schema_error("$.cocycles", "at least one cocycle is required");

    for (std::size_t j = 0; j < cocycles.size(); ++j) {
        const std::string cpath = "$.cocycles[" + std::to_string(j) + "]";
        const json& gv = require(cocycles[j], "generator_values", cpath);
        const std::string gpath = cpath + ".generator_values";
        if (!gv.is_object()) schema_error(gpath, "expected an object");
        std::map<int, Chain> values;
        for (const auto& [key, entries] : gv.items()) {
            const std::string epath = gpath + "." + key;
            const int gen = parse_generator(spec.group, key, epath);
            if (!entries.is_array()) schema_error(epath, "expected an array");
            Chain c;
            for (std::size_t t = 0; t < entries.size(); ++t) {
                const std::string tpath = epath + "[" + std::to_string(t) + "]";
                const Element el = parse_element(spec.group, require(entries[t], "element", tpath), tpath + ".element");
                const json& im = require(entries[t], "imag", tpath);
                if (!im.is_number()) schema_error(tpath + ".imag", "expected a number");
                const double x = im.get<double>();
                if (!std::isfinite(x)) schema_error(tpath + ".imag", "must be finite");
                c[el] += x;
            }
            prune(c);
            values[gen] = std::move(c);
        }
        spec.values.push_back(std::move(values));
    }
    return spec;
}

CocycleSpec load_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open cocycle spec file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_spec(ss.str());
}

// ---------------------------------------------------------------------------
// Cocycle values

Chain translate(const Element& x, const Chain& f) {
    Chain out;
    for (const auto& [k, v] : f) out[multiply(x, k)] += v;
    return out;
}

Chain cocycle_value_of_word(const CocycleSpec& spec, int j, const std::vector<int>& word) {
    if (j < 1 || j > spec.count()) throw RangeError("cocycle index out of range");
    if (word.size() > spec.max_word_length)
        throw CapacityError("cocycle word length", static_cast<long long>(word.size()),
                            static_cast<long long>(spec.max_word_length));
    const auto& gens = spec.values[static_cast<std::size_t>(j - 1)];
    // c(s1...sn) = sum_k s1...s_{k-1} . c(s_k), with c(s^{-1}) = -s^{-1} . c(s).
    Chain acc;
    Element prefix;
    for (int s : word) {
        if (s == 0 || std::abs(s) > spec.group.rank) throw RangeError("letter outside the group rank");
        auto it = gens.find(std::abs(s));
        if (it != gens.end()) {
            if (s > 0) {
                add_into(acc, translate(prefix, it->second), 1.0);
            } else {
                add_into(acc, translate(multiply(prefix, Element{s}), it->second), -1.0);
            }
        }
        prefix = multiply(prefix, Element{s});
    }
    prune(acc);
    return acc;
}

Chain cocycle_value(const CocycleSpec& spec, int j, const Element& g) {
    return cocycle_value_of_word(spec, j, g);
}

double hat_norm_sq(const CocycleSpec& spec, int j, const Element& g, bool* warn) {
    if (is_identity(g)) throw DomainError("hat norm requested at the identity");
    // Summing over the support minus {e, g} is the same quantity as the subtraction and keeps
    // exact zeros exact. It cannot go negative, so the clamp below only guards rounding.
    double h = 0.0;
    for (const auto& [k, v] : cocycle_value(spec, j, g))
        if (!k.empty() && k != g) h += v * v;
    if (h < 0.0) {
        if (h >= -1e-12) {
            if (warn) *warn = true;
            return 0.0;
        }
        throw DomainError("negative hat norm; the cocycle spec is inconsistent");
    }
    return h;
}

double rate(const CocycleSpec& spec, const State& s) {
    double r = 0.0;
    for (const Element& g : s) {
        if (is_identity(g)) throw DomainError("chain state contains the identity");
        for (int j = 1; j <= spec.count(); ++j) r += hat_norm_sq(spec, j, g);
    }
    return r;
}

std::vector<Transition> transitions(const CocycleSpec& spec, const State& s) {
    const double R = rate(spec, s);
    if (!(R > 0.0)) throw DomainError("transitions requested at an absorbing state");
    std::map<State, double> merged;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const Element& g = s[i];
        std::map<Element, double> weight;
        for (int j = 1; j <= spec.count(); ++j) {
            for (const auto& [d, v] : cocycle_value(spec, j, g)) {
                if (d.empty() || d == g) continue;
                weight[d] += v * v;
            }
        }
        for (const auto& [d, w] : weight) {
            State t;
            t.reserve(s.size() + 1);
            t.insert(t.end(), s.begin(), s.begin() + static_cast<std::ptrdiff_t>(i));
            t.push_back(d);
            t.push_back(multiply(inverse(d), g));
            t.insert(t.end(), s.begin() + static_cast<std::ptrdiff_t>(i) + 1, s.end());
            merged[t] += w / R;
        }
    }
    std::vector<Transition> out;
    out.reserve(merged.size());
    for (auto& [t, p] : merged) out.push_back({t, p});
    return out;
}

Element product(const State& s) {
    Element p;
    for (const Element& g : s) p = multiply(p, g);
    return p;
}

// ---------------------------------------------------------------------------
// Simulation

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

enum class Outcome { Absorbed, Censored, Active };

struct PathResult {
    std::int64_t jumps = 0;
    Outcome outcome = Outcome::Active;
    std::int64_t violations = 0;
    double max_defect = 0.0;
};

PathResult run_path(const CocycleSpec& spec, const State& init, double horizon, std::int64_t max_jumps,
                    std::uint64_t seed, std::int64_t path) {
    std::mt19937_64 rng(splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(path))));
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    PathResult res;
    State s = init;
    const Element conserved = product(init);
    double t = 0.0;
    for (;;) {
        const double R = rate(spec, s);
        if (!(R > 0.0)) {
            res.outcome = Outcome::Absorbed;
            return res;
        }
        std::exponential_distribution<double> hold(R);
        t += hold(rng);
        if (t > horizon) {
            res.outcome = Outcome::Active;
            return res;
        }
        const auto tr = transitions(spec, s);
        double sum = 0.0;
        for (const auto& x : tr) {
            if (x.probability < 0.0) ++res.violations;
            sum += x.probability;
        }
        res.max_defect = std::max(res.max_defect, std::abs(sum - 1.0));
        if (std::abs(sum - 1.0) > 1e-12) ++res.violations;

        const double u = unif(rng) * sum;
        double cum = 0.0;
        std::size_t pick = tr.size() - 1;
        for (std::size_t k = 0; k < tr.size(); ++k) {
            cum += tr[k].probability;
            if (u < cum) {
                pick = k;
                break;
            }
        }
        const std::size_t before = s.size();
        s = tr[pick].target;
        ++res.jumps;
        if (s.size() != before + 1) ++res.violations;
        if (product(s) != conserved) ++res.violations;
        for (const Element& g : s)
            if (is_identity(g)) ++res.violations;

        if (!(rate(spec, s) > 0.0)) {
            res.outcome = Outcome::Absorbed;
            return res;
        }
        if (res.jumps >= max_jumps) {
            res.outcome = Outcome::Censored;
            return res;
        }
    }
}

}  // namespace

SimReport simulate(const CocycleSpec& spec, const State& init, double horizon, std::int64_t n_paths,
                   std::int64_t max_jumps, std::uint64_t seed, unsigned threads) {
    if (max_jumps < 1) throw RangeError("max_jumps must be at least 1");
    if (n_paths < 1) throw RangeError("n_paths must be at least 1");
    if (!(horizon > 0.0) || std::isnan(horizon)) throw RangeError("horizon must be positive");
    for (const Element& g : init)
        if (is_identity(g)) throw DomainError("initial state contains the identity");

    std::vector<PathResult> results(static_cast<std::size_t>(n_paths));
    auto worker = [&](std::int64_t begin, std::int64_t stride) {
        for (std::int64_t p = begin; p < n_paths; p += stride)
            results[static_cast<std::size_t>(p)] = run_path(spec, init, horizon, max_jumps, seed, p);
    };
    unsigned nt = threads == 0 ? 1u : threads;
    nt = static_cast<unsigned>(std::min<std::int64_t>(nt, n_paths));
    if (nt <= 1) {
        worker(0, 1);
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < nt; ++w) pool.emplace_back(worker, static_cast<std::int64_t>(w), static_cast<std::int64_t>(nt));
        for (auto& th : pool) th.join();
    }

    SimReport rep;
    rep.n_paths = n_paths;
    rep.horizon = horizon;
    rep.max_jumps = max_jumps;
    rep.seed = seed;
    rep.jumps.reserve(results.size());
    for (const auto& r : results) {
        rep.jumps.push_back(r.jumps);
        switch (r.outcome) {
            case Outcome::Absorbed: ++rep.absorbed; break;
            case Outcome::Censored: ++rep.censored; break;
            case Outcome::Active: ++rep.active; break;
        }
        rep.invariant_violations += r.violations;
        rep.max_probability_defect = std::max(rep.max_probability_defect, r.max_defect);
    }
    const double n = static_cast<double>(n_paths);
    rep.survival = static_cast<double>(rep.absorbed + rep.active) / n;
    rep.half_width = 1.96 * std::sqrt(rep.survival * (1.0 - rep.survival) / n);
    return rep;
}

}  // namespace qfock::cocycle
