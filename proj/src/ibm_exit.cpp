#include "conexit/ibm_exit.hpp"

#include <cmath>
// Boost 1.74 pchip.hpp calls isnan unqualified.
using std::isnan;
#include <boost/math/interpolators/pchip.hpp>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "conexit/errors.hpp"
#include "conexit/quadrature.hpp"
#include "conexit/special.hpp"
#include "series.hpp"

namespace conexit {

namespace {

constexpr double kLn10 = 2.302585092994046;

// Decade-by-decade quadrature of f over log s, walking outward from x0 until
// a decade adds less than eps of the running total.
double integrate_log_decades(const Integrand& f, double x0, double x_min, const QuadratureSpec& q, double eps) {
    double total = integrate(f, x0 - kLn10, x0 + kLn10, q);
    for (double x = x0 + kLn10;; x += kLn10) {
        const double piece = integrate(f, x, x + kLn10, q);
        total += piece;
        if (std::abs(piece) <= eps * std::abs(total)) break;
        if (x > 800.0) throw NonConvergence("clock integral did not decay");
    }
    for (double x = x0 - kLn10; x > x_min; x -= kLn10) {
        const double piece = integrate(f, x - kLn10, x, q);
        total += piece;
        if (std::abs(piece) <= eps * std::abs(total)) break;
    }
    return total;
}

// Location of the maximum of s e^{-s} I_alpha(gamma s) from the uniform
// asymptotics I'_alpha / I_alpha ~ sqrt(1 + (alpha / z)^2).
double bessel_laplace_peak(double alpha, double gamma) {
    const double g2 = 1.0 - gamma * gamma;
    return (1.0 + std::sqrt(std::max(0.0, 1.0 - g2 * (1.0 - alpha * alpha)))) / g2;
}

}  // namespace

const char* to_string(IbmRegime regime) {
    switch (regime) {
        case IbmRegime::Sub: return "sub";
        case IbmRegime::Critical: return "critical";
        case IbmRegime::Super: return "super";
    }
    return "?";
}

IbmRegime classify_regime(const ConeFamily& cone) {
    if (const auto f = cone.exact_p1()) {
        const long lhs = f->numerator, rhs = 2L * f->denominator;
        return lhs < rhs ? IbmRegime::Sub : lhs == rhs ? IbmRegime::Critical : IbmRegime::Super;
    }
    const double p1 = principal_exponent(cone);
    if (std::abs(p1 - 2.0) <= 1e-9) return IbmRegime::Critical;
    return p1 < 2.0 ? IbmRegime::Sub : IbmRegime::Super;
}

double exit_side_probability(double u, double v) {
    if (!(u > 0.0) || !(v > 0.0)) throw std::invalid_argument("exit_side_probability needs u, v > 0");
    return v / (u + v);
}

struct ClockKernel::Spline {
    boost::math::interpolators::pchip<std::vector<double>> spline;
};

ClockKernel::ClockKernel(const Spectrum& s, const PolarPoint& z, int points_per_decade)
    : spectrum_(s), start_(z), curve_(s, z), regime_(classify_regime(s.cone())) {
    if (points_per_decade < 4) throw std::invalid_argument("clock table needs >= 4 points per decade");
    c_lo_ = 1.0 / curve_.t_hi();
    c_hi_ = 1e6 / curve_.t_lo();
    const double lo = std::log(c_lo_), hi = std::log(c_hi_);
    const int count = static_cast<int>(std::ceil((hi - lo) / kLn10 * points_per_decade)) + 1;
    const double step = (hi - lo) / (count - 1);
    std::vector<double> nodes(count), values(count);
    for (int i = 0; i < count; ++i) {
        nodes[i] = lo + i * step;
        values[i] = std::log(evaluate(std::exp(nodes[i])));
        if (i > 0) values[i] = std::min(values[i], values[i - 1]);
    }
    l_lo_ = std::exp(values.front());
    l_hi_ = std::exp(values.back());
    spline_ = std::make_shared<const Spline>(Spline{{std::move(nodes), std::move(values)}});
}

double ClockKernel::evaluate(double c) const {
    if (!(c > 0.0)) throw std::invalid_argument("clock kernel needs c > 0");
    const double t_lo = curve_.t_lo(), t_hi = curve_.t_hi();
    const double h = curve_.exponent(), big_c = curve_.constant();
    // survival is exactly 1 below t_lo
    double total = t_lo / (1.0 + c * t_lo);
    auto body = [&](double x) {
        const double v = std::exp(x);
        const double k = 1.0 + c * v;
        return v * curve_(v) / (k * k);
    };
    const QuadratureSpec q{1e-300, 1e-11, 2000};
    const double x_lo = std::log(t_lo), x_hi = std::log(t_hi);
    for (double x = x_lo; x < x_hi; x += kLn10) total += integrate(body, x, std::min(x + kLn10, x_hi), q);
    auto tail = [&](double x) {
        const double log_k = std::log1p(c * std::exp(x));
        return big_c * std::exp((1.0 - h) * x - 2.0 * log_k);
    };
    total += integrate(tail, x_hi, kInfinity, q);
    return total;
}

double ClockKernel::operator()(double c) const {
    if (!(c >= 0.0)) throw std::invalid_argument("clock kernel needs c >= 0");
    if (c == 0.0) return regime_ == IbmRegime::Super ? l_lo_ : std::numeric_limits<double>::infinity();
    // 1/c - L(c) ~ E[1/tau] / c^2
    if (c >= c_hi_) return 1.0 / c - (1.0 / c_hi_ - l_hi_) * (c_hi_ / c) * (c_hi_ / c);
    if (c <= c_lo_) {
        switch (regime_) {
            case IbmRegime::Sub: return l_lo_ * std::pow(c / c_lo_, curve_.exponent() - 1.0);
            case IbmRegime::Critical: return l_lo_ + curve_.constant() * std::log(c_lo_ / c);
            case IbmRegime::Super: return l_lo_;
        }
    }
    return std::exp(spline_->spline(std::log(c)));
}

double ClockKernel::exit_weight(double u) const {
    if (!(u > 0.0)) throw std::invalid_argument("exit_weight needs u > 0");
    if (1.0 / u == 0.0) return 0.0;
    return 2.0 * (*this)(1.0 / u) / u;
}

namespace {

double require_off_diagonal(const ClockKernel& kernel, double r, const SeriesOptions& opt) {
    if (!(r > 0.0) || !std::isfinite(r)) throw std::invalid_argument("radius must be positive and finite");
    const double gamma = similarity_variable(kernel.start().rho, r);
    if (gamma > 1.0 - opt.min_gap) {
        std::ostringstream os;
        os << "IBM radial series refused near the diagonal: gamma = " << gamma << " > 1 - " << opt.min_gap;
        throw std::domain_error(os.str());
    }
    return gamma;
}

double radial_prefactor(const ClockKernel& kernel, double r) {
    const int n = kernel.spectrum().cone().dimension();
    return std::pow(r, 0.5 * n - 2.0) * std::pow(kernel.start().rho, 1.0 - 0.5 * n);
}

// I_j = 2/sigma \int_0^inf e^{-s} I_alpha(gamma s) L(2s/sigma) ds, in x = log s.
double mode_integral(const ClockKernel& kernel, const Mode& m, double r, double gamma, const QuadratureSpec& q) {
    const double sigma = kernel.start().rho * kernel.start().rho + r * r;
    auto f = [&](double x) {
        const double sv = std::exp(x);
        const double decay = std::exp(-(1.0 - gamma) * sv);
        if (decay == 0.0) return 0.0;
        return sv * decay * bessel_i_scaled(m.alpha, gamma * sv) * kernel(2.0 * sv / sigma);
    };
    const double x0 = std::log(bessel_laplace_peak(m.alpha, gamma));
    return 2.0 / sigma * integrate_log_decades(f, x0, -120.0, q, 1e-17);
}

}  // namespace

SeriesValue ibm_radial_density(const ClockKernel& kernel, double r, const SeriesOptions& opt) {
    const double gamma = require_off_diagonal(kernel, r, opt);
    const auto& s = kernel.spectrum();
    const int limit = detail::mode_limit(s, opt);
    const QuadratureSpec q{1e-300, std::max(1e-11, opt.tol / limit), 2000};
    detail::SeriesAccumulator acc(opt.tol);
    bool done = false;
    for (int k = 0; k < limit && !done; ++k) {
        const auto& m = s.mode(k);
        if (m.boundary_functional == 0.0) {
            done = acc.add(0.0, 0.0);
            continue;
        }
        const double integral = mode_integral(kernel, m, r, gamma, q);
        done = acc.add(integral * m.boundary_functional * s.eigenfunction(k, kernel.start().theta),
                       integral * std::abs(m.boundary_functional) * m.sup_abs);
    }
    auto v = acc.result(done);
    if (!done) {
        std::ostringstream os;
        os << "ibm_radial_density: series not converged after " << v.terms << " terms";
        throw NonConvergence(os.str());
    }
    const double pref = radial_prefactor(kernel, r);
    v.value = std::max(0.0, v.value * pref);
    v.error *= pref;
    return v;
}

std::vector<double> ibm_radial_density_terms(const ClockKernel& kernel, double r, int count,
                                             const SeriesOptions& opt) {
    const double gamma = require_off_diagonal(kernel, r, opt);
    const auto& s = kernel.spectrum();
    if (count < 1 || count > s.size()) throw std::invalid_argument("term count out of range");
    const QuadratureSpec q{1e-300, std::max(1e-11, opt.tol / count), 2000};
    const double pref = radial_prefactor(kernel, r);
    std::vector<double> terms(count, 0.0);
    for (int k = 0; k < count; ++k) {
        const auto& m = s.mode(k);
        if (m.boundary_functional == 0.0) continue;
        terms[k] = pref * mode_integral(kernel, m, r, gamma, q) * m.boundary_functional *
                   s.eigenfunction(k, kernel.start().theta);
    }
    return terms;
}

double ibm_radial_density_time_integral(const ClockKernel& kernel, double r, const SeriesOptions& opt) {
    return detail::radial_time_integral(
        kernel.spectrum(), kernel.start(), r, opt, [&](double t) { return kernel.exit_weight(t); }, 2.0);
}

double ibm_radial_density_bridged(const ClockKernel& kernel, double r, const SeriesOptions& opt) {
    if (similarity_variable(kernel.start().rho, r) <= 1.0 - opt.min_gap) {
        try {
            return ibm_radial_density(kernel, r, opt).value;
        } catch (const NonConvergence&) {
        }
    }
    return ibm_radial_density_time_integral(kernel, r, opt);
}

double ibm_radial_probability(const ClockKernel& kernel, double a, double b, const SeriesOptions& opt) {
    if (!(a > 0.0) || !(b > a) || !std::isfinite(b)) throw std::invalid_argument("need 0 < a < b < inf");
    const double rho = kernel.start().rho;
    const auto w = diagonal_window(rho, opt.min_gap);
    auto in_log = [&](double x) {
        const double r = std::exp(x);
        return r * ibm_radial_density_bridged(kernel, r, opt);
    };
    auto linear = [&](double r) { return ibm_radial_density_time_integral(kernel, r, opt); };
    const QuadratureSpec q{1e-14, std::max(opt.tol, 1e-9), 2000};
    // the window is integrated in r directly, everything else in log r
    double total = 0.0;
    const double cuts[] = {a, std::clamp(w.lo, a, b), std::clamp(w.hi, a, b), b};
    for (int i = 0; i < 3; ++i) {
        if (!(cuts[i + 1] > cuts[i])) continue;
        total += i == 1 ? integrate(linear, cuts[i], cuts[i + 1], q)
                        : integrate(in_log, std::log(cuts[i]), std::log(cuts[i + 1]), q);
    }
    return total;
}

double ibm_radial_tail(const ClockKernel& kernel, double r, const SeriesOptions& opt) {
    if (!(r > 0.0) || !std::isfinite(r)) throw std::invalid_argument("tail radius must be positive and finite");
    const double rho = kernel.start().rho;
    const double far = std::max(1e4 * rho, 100.0 * r);
    const IbmAsymptote a = ibm_asymptote(kernel.spectrum(), kernel.start());
    return ibm_radial_probability(kernel, r, far, opt) + ibm_tail(a, rho, far);
}

IbmSurvivalLaw ibm_survival_law(const ConeFamily& cone) {
    const double p = principal_exponent(cone);
    switch (classify_regime(cone)) {
        case IbmRegime::Sub: return {IbmRegime::Sub, 0.5 * p, false};
        case IbmRegime::Critical: return {IbmRegime::Critical, 1.0, true};
        case IbmRegime::Super: break;
    }
    return {IbmRegime::Super, 0.5 * (p + 1.0), false};
}

IbmAsymptote ibm_asymptote(const Spectrum& s, const PolarPoint& z) {
    s.cone().validate_point(z);
    const int n = s.cone().dimension();
    const auto& m = s.mode(0);
    const double p = principal_exponent(s.cone());
    const double m1 = s.eigenfunction(0, z.theta);
    const double s1 = m.boundary_functional, d1 = m.interior_functional;
    IbmAsymptote a{classify_regime(s.cone()), 0.0, 0.0, false, 0.0};
    switch (a.regime) {
        case IbmRegime::Sub: {
            const double log_g = log_gamma(0.5 * (p + n)) + log_gamma(0.5 * (3.0 * p + n) - 1.0) -
                                 2.0 * log_gamma(p + 0.5 * n);
            a.constant = std::pow(z.rho, 2.0 * p) * m1 * m1 * s1 * d1 * std::exp(log_g) * beta_tail_integral(p);
            a.density_exponent = 2.0 * p + 1.0;
            a.tail_exponent = 2.0 * p;
            break;
        }
        case IbmRegime::Critical:
            a.constant = 2.0 / (1.0 + 0.5 * n) * std::pow(z.rho, 4.0) * m1 * m1 * s1 * d1;
            a.density_exponent = 5.0;
            a.tail_exponent = 4.0;
            a.log_correction = true;
            break;
        case IbmRegime::Super:
            a.constant = 2.0 * std::pow(z.rho, p) * m1 * s1 * mean_exit_time(s, z);
            a.density_exponent = p + 3.0;
            a.tail_exponent = p + 2.0;
            break;
    }
    return a;
}

double ibm_tail(const IbmAsymptote& a, double rho, double r) {
    if (!(r >= 10.0 * rho)) {
        std::ostringstream os;
        os << "ibm_tail is asymptotic and needs r >= 10 rho, got r = " << r << ", rho = " << rho;
        throw std::domain_error(os.str());
    }
    const double power = std::pow(r, -a.tail_exponent);
    if (a.log_correction) return 0.25 * a.constant * power * std::log(r);
    return a.constant / a.tail_exponent * power;
}

double ibm_tail(const Spectrum& s, const PolarPoint& z, double r) { return ibm_tail(ibm_asymptote(s, z), z.rho, r); }

bool moment_finite(const ConeFamily& cone, double p) {
    if (!(p > 0.0)) throw std::invalid_argument("moment order must be positive");
    const double p1 = principal_exponent(cone);
    switch (classify_regime(cone)) {
        case IbmRegime::Sub: return p < 2.0 * p1;
        case IbmRegime::Critical: return p < 4.0;
        case IbmRegime::Super: return p < p1 + 2.0;
    }
    return false;
}

}  // namespace conexit
