#pragma once

#include <memory>
#include <vector>

#include "conexit/bm_exit.hpp"

namespace conexit {

// Iterated Brownian motion Z_t = X(Y_t): a two-sided Brownian motion X from z
// read at the position of an independent 1-D Brownian clock Y. Z leaves the
// cone when Y leaves (-tau-, tau+), tau+- being the exit times of the two
// halves of X; it exits through X- with probability tau+ / (tau- + tau+).

enum class IbmRegime { Sub, Critical, Super };  // p1 < 2, p1 = 2, p1 > 2

const char* to_string(IbmRegime regime);

// Regime of the cone; exact when p1 is a known fraction, tolerance 1e-9 otherwise.
IbmRegime classify_regime(const ConeFamily& cone);

// Probability that the clock started at 0 leaves (-u, v) through -u.
double exit_side_probability(double u, double v);

// Clock kernel of one starting point:
//   L(c) = \int_0^inf P_z(tau > v) (1 + c v)^{-2} dv.
// Tabulated once from the survival curve (PCHIP in log-log) and extrapolated
// with the survival asymptotics outside the table. L(0) = E_z tau when finite.
class ClockKernel {
public:
    ClockKernel(const Spectrum& s, const PolarPoint& z, int points_per_decade = 24);

    double operator()(double c) const;

    // 2 E[tau' / (u + tau')] for an independent copy tau' of the exit time:
    // the IBM exit law is the BM joint exit law in (tau, B_tau) reweighted by
    // this factor. Equals 2 L(1/u) / u; tends to 2 as u -> 0.
    double exit_weight(double u) const;

    // L(c) by direct quadrature over the survival curve, bypassing the table.
    double evaluate(double c) const;

    const Spectrum& spectrum() const { return spectrum_; }
    const PolarPoint& start() const { return start_; }
    const SurvivalCurve& survival_curve() const { return curve_; }
    IbmRegime regime() const { return regime_; }
    double c_lo() const { return c_lo_; }
    double c_hi() const { return c_hi_; }

private:
    struct Spline;
    Spectrum spectrum_;
    PolarPoint start_;
    SurvivalCurve curve_;
    IbmRegime regime_;
    double c_lo_, c_hi_;
    double l_lo_, l_hi_;
    std::shared_ptr<const Spline> spline_;
};

// d/dr P_z(|Z_tau| <= r) by the mode series
//   r^{n/2-2} rho^{1-n/2} sum_j S_j m_j(theta) I_j,
//   I_j = 2/(rho^2 + r^2) \int_0^inf e^{-s} I_{alpha_j}(gamma s) L(2s/(rho^2 + r^2)) ds.
// Refused (std::domain_error) when gamma > 1 - min_gap.
SeriesValue ibm_radial_density(const ClockKernel& kernel, double r, const SeriesOptions& opt = {});

// The first `count` terms of that series (mode j = k + 1 at index k), prefactor included.
std::vector<double> ibm_radial_density_terms(const ClockKernel& kernel, double r, int count,
                                             const SeriesOptions& opt = {});

// Same density as the time integral of the BM joint exit law weighted by
// exit_weight. Valid at every r > 0.
double ibm_radial_density_time_integral(const ClockKernel& kernel, double r, const SeriesOptions& opt = {});

// Series where admissible and convergent, time integral otherwise.
double ibm_radial_density_bridged(const ClockKernel& kernel, double r, const SeriesOptions& opt = {});

// P_z(a < |Z_tau| <= b) by quadrature of the bridged density.
double ibm_radial_probability(const ClockKernel& kernel, double a, double b, const SeriesOptions& opt = {});

// P_z(|Z_tau| > r): quadrature of the bridged density out to
// R = max(1e4 rho, 100 r), closed by the leading-order tail beyond R.
double ibm_radial_tail(const ClockKernel& kernel, double r, const SeriesOptions& opt = {});

struct IbmAsymptote {
    IbmRegime regime;
    double density_exponent;  // density ~ A r^{-density_exponent} (times ln r when log_correction)
    double tail_exponent;     // tail ~ A / k r^{-tail_exponent}
    bool log_correction;
    double constant;          // A(z, p1)
};

IbmAsymptote ibm_asymptote(const Spectrum& s, const PolarPoint& z);

// Leading-order tail P_z(|Z_tau| > r): A/(2 p1) r^{-2 p1}, A/4 r^{-4} ln r or
// A/(p1 + 2) r^{-p1-2}. Refuses r < 10 rho.
double ibm_tail(const IbmAsymptote& a, double rho, double r);
double ibm_tail(const Spectrum& s, const PolarPoint& z, double r);

// Power law of the exit-time survival P_z(eta > t) ~ t^{-exponent}, times
// ln t in the critical case: p1 / 2 below p1 = 2, 1 at p1 = 2, (p1 + 1) / 2 above.
struct IbmSurvivalLaw {
    IbmRegime regime;
    double exponent;
    bool log_correction;
};
IbmSurvivalLaw ibm_survival_law(const ConeFamily& cone);

// E_z |Z_tau|^p < infinity.
bool moment_finite(const ConeFamily& cone, double p);

}  // namespace conexit
