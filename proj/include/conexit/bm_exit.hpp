#pragma once

#include <memory>
#include <vector>

#include "conexit/cone.hpp"
#include "conexit/spectrum.hpp"

namespace conexit {

struct SeriesOptions {
    double tol = 1e-12;     // relative truncation tolerance
    int max_terms = 0;      // 0: default_mode_cap of the cone
    double min_gap = 1e-3;  // radial series refused when gamma > 1 - min_gap
};

struct SeriesValue {
    double value = 0.0;
    double error = 0.0;  // truncation error estimate
    int terms = 0;
    bool converged = false;
};

// A point on the lateral boundary at distance r from the apex. For wedges
// `side` picks the ray (0: phi = 0, 1: phi = a); ignored otherwise.
struct BoundaryPoint {
    double r;
    int side = 0;
};

// gamma = 2 rho r / (rho^2 + r^2)
double similarity_variable(double rho, double r);

// Dirichlet heat kernel p_C(t, x, y) by its eigenfunction series. For the
// axisymmetric families x must be on the axis. Negative roundoff is clamped
// to 0. Throws NonConvergence if the term envelope does not drop below tol.
SeriesValue heat_kernel(const Spectrum& s, double t, const PolarPoint& x, const PolarPoint& y,
                        const SeriesOptions& opt = {});

// Density of (tau, B_tau) with respect to dt and surface measure on the
// boundary: half the inward normal derivative of the heat kernel at y.
SeriesValue joint_exit_density(const Spectrum& s, double t, const PolarPoint& x, const BoundaryPoint& y,
                               const SeriesOptions& opt = {});

// d/dr P_x(|B_tau| <= r) by the closed-form series in q = min(rho/r, r/rho).
// Throws std::domain_error when gamma > 1 - min_gap.
SeriesValue exit_radial_density(const Spectrum& s, const PolarPoint& x, double r, const SeriesOptions& opt = {});

// Same density as the time integral of the joint exit law over the circle
// {|y| = r} of the boundary. Valid for every r > 0 including r = rho.
double exit_radial_density_time_integral(const Spectrum& s, const PolarPoint& x, double r,
                                         const SeriesOptions& opt = {});

// The series when it is admissible and converges, the time integral otherwise.
double exit_radial_density_bridged(const Spectrum& s, const PolarPoint& x, double r, const SeriesOptions& opt = {});

// P_x(a < |B_tau| <= b) by quadrature of the bridged density: log r outside
// the diagonal window, r inside it.
double exit_radial_probability(const Spectrum& s, const PolarPoint& x, double a, double b,
                               const SeriesOptions& opt = {});

// Window {gamma > 1 - min_gap} around rho in which the series is refused.
struct RadialWindow {
    double lo, hi;
};
RadialWindow diagonal_window(double rho, double min_gap);

// Exact tail of the radial law for r > rho by integrating the series
// termwise: 1/2 rho^{1-n/2} sum S_j m_j rho^{alpha_j} r^{-p_j} / (alpha_j p_j).
SeriesValue exit_radial_tail_series(const Spectrum& s, const PolarPoint& x, double r, const SeriesOptions& opt = {});

// P_x(|B_tau| > r): quadrature of the density on (r, R*), R* = max(50 rho, 4r),
// closed by the termwise tail beyond R*. Requires gamma(r) <= 1 - min_gap, r > rho.
double exit_radial_tail(const Spectrum& s, const PolarPoint& x, double r, const SeriesOptions& opt = {});

struct TailAsymptote {
    double constant;
    double exponent;
    bool log_correction = false;
};

// P_x(|B_tau| > r) ~ constant * r^{-p1} with constant = rho^{p1} S_1 m_1(theta) / (2 p1 alpha_1).
TailAsymptote bm_tail_asymptote(const Spectrum& s, const PolarPoint& x);

// P_x(tau > t) by radial quadrature of the heat kernel; the angular integral
// is the factor D_j. Returns 1 when the boundary-distance bound already puts
// 1 - P within tol.
double survival(const Spectrum& s, const PolarPoint& x, double t, const SeriesOptions& opt = {});

// C(x) in P_x(tau > t) ~ C(x) t^{-p1/2}.
double survival_asymptote(const Spectrum& s, const PolarPoint& x);

// E_x tau; +infinity when p1 <= 2.
double mean_exit_time(const Spectrum& s, const PolarPoint& x, const SeriesOptions& opt = {});

// Immutable tabulation of t -> P_x(tau > t): monotone cubic (PCHIP) in (log t, log P)
// on [t_lo, t_hi], 1 below, C(x) t^{-p1/2} above.
class SurvivalCurve {
public:
    SurvivalCurve(const Spectrum& s, const PolarPoint& x, int points_per_decade = 48);

    double operator()(double t) const;
    double constant() const { return constant_; }
    double exponent() const { return exponent_; }  // p1 / 2
    double t_lo() const { return t_lo_; }
    double t_hi() const { return t_hi_; }

    // Nodes of the table, for inspection.
    const std::vector<double>& log_values() const { return log_values_; }

private:
    struct Spline;
    double t_lo_, t_hi_;
    double constant_, exponent_;
    std::vector<double> log_values_;
    std::shared_ptr<const Spline> spline_;
};

}  // namespace conexit
