#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace qfock::cocycle {

/// Z is handled as the free group of rank 1, so every element is a freely reduced word.
enum class GroupKind { Int, Free };

struct GroupSpec {
    GroupKind kind = GroupKind::Int;
    int rank = 1;  // always 1 for Z
};

/// Reduced word; letter g > 0 is the g-th generator, -g its inverse.
using Element = std::vector<int>;

Element identity();
Element generator(int g);
Element multiply(const Element& a, const Element& b);
Element inverse(const Element& a);
/// Reduces an arbitrary word.
Element reduce(const std::vector<int>& word);
bool is_identity(const Element& a);

/// Z elements as integers (letters all +1 or all -1).
Element from_int(long n);
long to_int(const Element& a);

/// Free group words as strings over a, b, ... with capitals for inverses ("" is the identity).
Element from_string(const std::string& s, int rank);
std::string to_string(const Element& a);
/// Human-readable form depending on the group kind.
std::string format(const GroupSpec& g, const Element& a);

/// Finitely supported function on the group with imaginary values; stores the imaginary parts.
using Chain = std::map<Element, double>;

struct CocycleSpec {
    GroupSpec group;
    /// values[j][g] = c_j(generator g), for g = 1..rank.
    std::vector<std::map<int, Chain>> values;
    /// Longest word accepted by cocycle_value.
    std::size_t max_word_length = 100000;

    int count() const { return static_cast<int>(values.size()); }
};

/// Parses the JSON schema
///   {"group": {"kind": "int" | "free", "rank": k},
///    "cocycles": [{"generator_values": {"<gen>": [{"element": e, "imag": x}, ...]}}, ...]}
/// Generators are "1" for Z and "a", "b", ... for free groups; elements are integers for Z
/// and strings for free groups. Errors name the offending field.
CocycleSpec parse_spec(const std::string& json_text);
CocycleSpec load_spec(const std::string& path);

/// The cocycle with c(e) = 0 and c(x y) = x.c(y) + c(x), evaluated along a word.
Chain cocycle_value(const CocycleSpec& spec, int j, const Element& g);
/// Same, evaluated along an arbitrary (possibly unreduced) word.
Chain cocycle_value_of_word(const CocycleSpec& spec, int j, const std::vector<int>& word);
/// Left translation x.f: delta_y -> delta_{x y}.
Chain translate(const Element& x, const Chain& f);

/// ||c_j(g)||^2 - |c_j(g)(g)|^2 - |c_j(g)(e)|^2. Values in [-1e-12, 0) are clamped to 0
/// (warn is set); anything more negative throws DomainError.
double hat_norm_sq(const CocycleSpec& spec, int j, const Element& g, bool* warn = nullptr);

using State = std::vector<Element>;

double rate(const CocycleSpec& spec, const State& s);

struct Transition {
    State target;
    double probability = 0.0;
};

/// Splits g_i = d d' with d in the support of some c_j(g_i) other than e and g_i, d' = d^{-1} g_i.
/// Throws DomainError on an absorbing state.
std::vector<Transition> transitions(const CocycleSpec& spec, const State& s);

struct SimReport {
    std::int64_t n_paths = 0;
    double horizon = 0.0;
    std::int64_t max_jumps = 0;
    std::uint64_t seed = 0;
    std::vector<std::int64_t> jumps;  // per path
    std::int64_t absorbed = 0;        // reached a rate-0 state
    std::int64_t censored = 0;        // hit max_jumps before the horizon
    std::int64_t active = 0;          // still running at the horizon
    double survival = 0.0;            // fraction not censored
    double half_width = 0.0;          // 1.96 binomial standard error
    std::int64_t invariant_violations = 0;
    double max_probability_defect = 0.0;  // max |sum p - 1| over states met
};

/// Gillespie simulation; one mt19937_64 stream per path seeded from (seed, path index).
SimReport simulate(const CocycleSpec& spec, const State& init, double horizon, std::int64_t n_paths,
                   std::int64_t max_jumps, std::uint64_t seed, unsigned threads = 0);

/// Product of the components (the conserved quantity of every jump).
Element product(const State& s);

}  // namespace qfock::cocycle
