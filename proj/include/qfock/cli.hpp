#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "qfock/caps.hpp"
#include "qfock/cocycle.hpp"

namespace qfock::cli {

enum class Format { Csv, Json };

Format parse_format(const std::string& s);

/// Thrown for malformed command lines and parameter values (exit status 2).
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

using Cell = std::variant<std::string, double, std::int64_t, bool>;

struct Table {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;
    std::vector<std::string> warnings;
};

/// 17 significant digits, C locale; "inf", "-inf" and "nan" for non-finite values.
std::string format_double(double x);

/// RFC 4180 (CRLF line ends, quoting on demand). Warnings precede the header as "# " lines.
std::string to_csv(const Table& t);
/// {"table": name, "columns": [...], "rows": [{column: value}], "warnings": [...]}.
std::string to_json(const Table& t);
std::string render(const Table& t, Format f);

/// Context parameters shared by the numerical commands.
struct ContextParams {
    int N = 2;
    double q = 0.1;
    int L = 5;
    SizeCaps caps = SizeCaps::from_environment();
};

/// "q:N,q:N,..." pairs.
std::vector<std::pair<double, int>> parse_grid(const std::string& s);
/// The threshold rows |q| N = 0.13 and |q| sqrt(N) = 0.13 for N = 2..10, plus (0, 5) and (0.6, 2).
std::vector<std::pair<double, int>> default_constants_grid();

Table cmd_constants(const std::vector<std::pair<double, int>>& grid);

/// Gamma_n in the word basis, one row per entry.
Table cmd_gram(const ContextParams& p, int n);

/// Norms of Xi and of its truncations Xi^Q (Q = 0..L, or a single Q when Q >= 0).
Table cmd_xi(const ContextParams& p, int Q = -1);

/// Neumann/conjugate-variable convergence series n = 0..terms.
Table cmd_conjugate(const ContextParams& p, int terms, bool with_lipschitz = true);

struct Check {
    std::string suite;
    std::string name;
    double residual = 0.0;
    double tolerance = 0.0;
    bool pass = false;
    std::string error;  // set when the check could not run (capacity and the like)
};

struct VerifyReport {
    std::string suite;
    ContextParams params;
    int terms = 10;
    std::uint64_t seed = 0;
    std::vector<Check> checks;

    bool pass() const;
};

const std::vector<std::string>& suite_names();

/// Runs one suite, or every suite for "all". Unknown names raise UsageError.
VerifyReport cmd_verify(const std::string& suite, const ContextParams& p, int terms, std::uint64_t seed);

std::string render(const VerifyReport& r, Format f);

/// Parses "5" or "3,2" for Z and "ab,Ba" for free groups.
cocycle::State parse_state(const cocycle::GroupSpec& g, const std::string& s);

cocycle::SimReport cmd_cocycle(const std::string& spec_path, const std::string& init, double horizon,
                               std::int64_t n_paths, std::int64_t max_jumps, std::uint64_t seed);

std::string render(const cocycle::SimReport& r, const std::string& spec_path, const std::string& init);

/// Full command-line entry point. Returns the process exit status:
/// 0 success, 1 failed checks, 2 usage error, 3 runtime or I/O error.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace qfock::cli
