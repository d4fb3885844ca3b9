#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "conexit/cone.hpp"
#include "conexit/rng.hpp"

namespace conexit {

// Thrown by the tail estimator when too few samples reach the fitting range.
class InsufficientData : public std::runtime_error {
public:
    explicit InsufficientData(const std::string& what) : std::runtime_error(what) {}
};

struct McParams {
    double h = 1e-3;           // minimal step variance of the BM walks
    double h_clock = 0.0;      // minimal step variance of the IBM clock; 0 means h
    double kappa = 5.0;        // steps never exceed (distance to boundary / kappa)^2
    std::uint64_t budget = 100'000'000;  // steps per walk before the path is redrawn
    std::uint64_t seed = 0;
    std::uint32_t workers = 1;           // logical workers = RNG streams
    std::uint32_t max_attempts = 32;     // redraws per path before NonConvergence

    double clock_step() const { return h_clock > 0.0 ? h_clock : h; }
    void validate() const;
};

enum class SampleKind { BmExit, IbmExit, IbmExitTime };

std::string_view to_string(SampleKind k);
SampleKind parse_sample_kind(std::string_view s);

// One path. boundary_coord is the ray index (0 or 1) for planar wedges and
// for the 2-D half-space (0 when the exit abscissa is positive), and the
// azimuth in (-pi, pi] for 3-D cones and half-spaces of dimension >= 3.
struct Sample {
    double exit_time = 0.0;
    double exit_radius = 0.0;
    double boundary_coord = 0.0;
    std::uint32_t stream = 0;
    std::uint64_t path_index = 0;
};

struct SampleBatch {
    SampleKind kind = SampleKind::BmExit;
    std::string cone;  // ConeFamily::describe()
    PolarPoint start{1.0, 0.0};
    McParams params;
    std::uint64_t resampled = 0;  // paths redrawn after hitting the step budget
    std::vector<Sample> samples;

    std::vector<double> radii() const;
    std::vector<double> times() const;

    // Header line "# {json}" then the column row and one line per sample.
    void write_csv(std::ostream& out) const;
    static SampleBatch read_csv(std::istream& in);
    std::string header_json() const;
};

// Single exits, addressed like the batch draws: path `path` of stream
// `stream`. The batch sampler returns exactly these values.
struct ExitDraw {
    double time = 0.0;
    std::vector<double> point;  // Cartesian, dimension of the cone
    double radius = 0.0;
    double boundary_coord = 0.0;
    std::uint32_t attempts = 1;
};

ExitDraw sample_bm_exit(const ConeFamily& cone, const PolarPoint& x, const McParams& mc, std::uint32_t stream,
                        std::uint64_t path);
// Exit place of IBM from two BM exits; time holds the exit time of the path
// that was selected.
ExitDraw sample_ibm_exit(const ConeFamily& cone, const PolarPoint& z, const McParams& mc, std::uint32_t stream,
                         std::uint64_t path);
// Exit time of IBM: a clock walk on (-tau-, tau+); the point is where the
// selected BM path left the cone.
ExitDraw sample_ibm_exit_time(const ConeFamily& cone, const PolarPoint& z, const McParams& mc, std::uint32_t stream,
                              std::uint64_t path);

// The side coin of the exit place sampler: 0 (leave along X-) with
// probability tau_plus / (tau_minus + tau_plus), else 1.
int ibm_exit_side(double tau_minus, double tau_plus, const RngSpec& rng, std::uint32_t stream, std::uint64_t path,
                  std::uint32_t attempt = 0);

// N paths split into `workers` contiguous blocks, block w drawn from stream w.
// Output is a function of (kind, cone, start, params, n) only.
SampleBatch simulate(SampleKind kind, const ConeFamily& cone, const PolarPoint& start, const McParams& mc,
                     std::uint64_t n);

// Worker count from CONEXIT_WORKERS, else `fallback`.
std::uint32_t default_workers(std::uint32_t fallback = 1);

struct TailFit {
    double slope = 0.0;
    double std_error = 0.0;     // batch means over 10 contiguous batches
    double intercept = 0.0;
    double fit_quality = 0.0;   // weighted residual chi^2 per degree of freedom
    std::size_t tail_count = 0; // samples above r_min
    std::vector<double> grid;   // dyadic radii used
    std::vector<double> survival;

    // Rough power-law check: residuals within a few sigma of a straight line.
    bool power_law() const { return fit_quality < 10.0; }
};

// Slope of log(empirical survival) against log r on r_min * 2^k <= r_max,
// least squares weighted by the binomial variance of each point.
// Throws InsufficientData below 100 samples above r_min and
// std::invalid_argument unless r_max >= 4 r_min > 0.
TailFit estimate_tail_exponent(std::span<const double> samples, double r_min, double r_max);

// sup |F_N - F| over the sample points.
double ks_distance(std::span<const double> samples, const std::function<double(double)>& cdf);

// KS distance of the samples inside [a, b] against F conditioned on [a, b].
// `count` receives the number of samples used.
double ks_distance_window(std::span<const double> samples, const std::function<double(double)>& cdf, double a,
                          double b, std::size_t* count = nullptr);

}  // namespace conexit
