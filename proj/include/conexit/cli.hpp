#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace conexit::cli {

// Either an explicit list of values or start:stop:count with log or linear spacing.
struct Grid {
    std::vector<double> values;
    double start = 0.0, stop = 0.0;
    int count = 0;
    bool log = false;

    bool empty() const { return values.empty() && count == 0; }
    // Throws std::invalid_argument unless the points are finite and strictly increasing.
    std::vector<double> points() const;
};

// "0.5,1,2" or "1:64:7:log" (spacing defaults to linear).
Grid parse_grid(const std::string& text);

struct RunConfig {
    std::string subcommand;
    std::string cone;
    double rho = 1.0;
    std::string theta = "bisector";  // radians, a multiple of pi, or "bisector"
    std::string process = "bm";      // bm | ibm
    std::string quantity = "exit";   // simulate/compare: exit (place) | time
    Grid r, t;
    double tol = 1e-10;
    int terms = 0;  // max series terms; spectrum rows (default 10)
    std::uint64_t n = 10000;
    double h = 1e-3;
    double h_clock = 0.0;
    std::uint64_t seed = 0;
    std::uint32_t workers = 1;
    std::string format = "csv";  // csv | json
    std::string output;          // empty: standard output
    std::string input;           // compare: sample file written by simulate
    double window_lo = 2.0, window_hi = 64.0;  // compare: KS window in units of rho
    std::optional<double> fit_lo, fit_hi;      // compare: fit range (units of rho for radii)
    double slope_tol = 0.1;

    // Throws std::invalid_argument on inconsistent settings.
    void validate() const;
    std::string to_json() const;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;  // compare finished but a check failed
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumeric = 3;

// Runs one subcommand; output goes to config.output or `out`, diagnostics to `err`.
int run(const RunConfig& config, std::ostream& out, std::ostream& err);

// Parses the command line and runs it.
int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

// Number formatting of every table: shortest round-trip digits, fixed notation,
// scientific below 1e-4 in magnitude (and from 1e16).
std::string format_number(double v);

}  // namespace conexit::cli
