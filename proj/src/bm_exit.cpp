#include "conexit/bm_exit.hpp"

#include <cmath>
// Boost 1.74 pchip.hpp calls isnan unqualified.
using std::isnan;
#include <algorithm>
#include <boost/math/interpolators/pchip.hpp>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "conexit/errors.hpp"
#include "conexit/quadrature.hpp"
#include "conexit/special.hpp"
#include "series.hpp"

namespace conexit {

using detail::SeriesAccumulator;

namespace {

// exp below this is treated as zero without summing the series.
constexpr double kUnderflowExponent = -700.0;
// Integrand pieces whose bound sum_j |coef_j| * gauss (Ie <= 1) is below this
// are dropped; used where the integral itself is of order one.
constexpr double kNegligible = 1e-18;

void require_time(double t) {
    if (!(t > 0.0) || !std::isfinite(t)) throw std::invalid_argument("time must be positive and finite");
}

[[noreturn]] void throw_truncation(const char* what, const SeriesValue& v) {
    std::ostringstream os;
    os << what << ": series not converged after " << v.terms << " terms (last envelope " << v.error << ")";
    throw NonConvergence(os.str());
}

// sum_j Ie_{alpha_j}(z) c_j with envelope Ie * e_j.
template <class Coef, class Env>
SeriesValue bessel_series(const Spectrum& s, double z, const SeriesOptions& opt, Coef coef, Env env) {
    SeriesAccumulator acc(opt.tol);
    const int limit = detail::mode_limit(s, opt);
    for (int k = 0; k < limit; ++k) {
        const double ie = bessel_i_scaled(s.mode(k).alpha, z);
        if (acc.add(ie * coef(k), ie * env(k))) return acc.result(true);
    }
    return acc.result(false);
}

double boundary_derivative(const Spectrum& s, int k, int side) {
    const auto d = s.inward_normal_derivative(k);
    if (side < 0 || side >= static_cast<int>(d.size())) throw std::invalid_argument("boundary side out of range");
    return d[side];
}

// Measure of {y in boundary : |y| = r} per unit r^{n-2}, folded into S_j already.
double half_prefactor(int n, double rho, double r) {
    return 0.5 * std::pow(r, 0.5 * n - 2.0) * std::pow(rho, 1.0 - 0.5 * n);
}

double lower_time_cutoff(int n, double d, double eps) {
    double t = d * d;
    while (detail::early_exit_bound(n, d, t) > eps) t *= 0.5;
    return t;
}

}  // namespace

double similarity_variable(double rho, double r) { return 2.0 * rho * r / (rho * rho + r * r); }

SeriesValue heat_kernel(const Spectrum& s, double t, const PolarPoint& x, const PolarPoint& y,
                        const SeriesOptions& opt) {
    require_time(t);
    const auto& cone = s.cone();
    cone.validate_point(x);
    cone.validate_point(y, false);
    if (cone.axis_only() && x.theta != 0.0 && y.theta != 0.0)
        throw std::invalid_argument("heat kernel for axisymmetric cones needs one point on the axis");
    const int n = cone.dimension();
    const double z = x.rho * y.rho / t;
    const double expo = -(x.rho - y.rho) * (x.rho - y.rho) / (2.0 * t);
    if (expo < kUnderflowExponent) return {0.0, 0.0, 0, true};
    auto v = bessel_series(
        s, z, opt, [&](int k) { return s.eigenfunction(k, x.theta) * s.eigenfunction(k, y.theta); },
        [&](int k) { return s.mode(k).sup_abs * s.mode(k).sup_abs; });
    if (!v.converged) throw_truncation("heat_kernel", v);
    const double pref = std::pow(x.rho * y.rho, 1.0 - 0.5 * n) / t * std::exp(expo);
    v.value = std::max(0.0, v.value * pref);
    v.error *= pref;
    return v;
}

SeriesValue joint_exit_density(const Spectrum& s, double t, const PolarPoint& x, const BoundaryPoint& y,
                               const SeriesOptions& opt) {
    require_time(t);
    const auto& cone = s.cone();
    cone.validate_point(x);
    if (!(y.r > 0.0)) throw std::invalid_argument("boundary point must have r > 0");
    const int n = cone.dimension();
    const double z = x.rho * y.r / t;
    const double expo = -(x.rho - y.r) * (x.rho - y.r) / (2.0 * t);
    if (expo < kUnderflowExponent) return {0.0, 0.0, 0, true};
    auto v = bessel_series(
        s, z, opt, [&](int k) { return s.eigenfunction(k, x.theta) * boundary_derivative(s, k, y.side); },
        [&](int k) { return s.mode(k).sup_abs * std::abs(boundary_derivative(s, k, y.side)); });
    if (!v.converged) throw_truncation("joint_exit_density", v);
    const double pref = 0.5 / (y.r * t) * std::pow(x.rho * y.r, 1.0 - 0.5 * n) * std::exp(expo);
    v.value = std::max(0.0, v.value * pref);
    v.error *= pref;
    return v;
}

RadialWindow diagonal_window(double rho, double min_gap) {
    const double g = 1.0 - min_gap;
    const double x = (1.0 - std::sqrt((1.0 - g) * (1.0 + g))) / g;
    return {rho * x, rho / x};
}

SeriesValue exit_radial_density(const Spectrum& s, const PolarPoint& x, double r, const SeriesOptions& opt) {
    s.cone().validate_point(x);
    if (!(r > 0.0) || !std::isfinite(r)) throw std::invalid_argument("radius must be positive and finite");
    const double gamma = similarity_variable(x.rho, r);
    if (gamma > 1.0 - opt.min_gap) {
        std::ostringstream os;
        os << "radial series refused near the diagonal: gamma = " << gamma << " > 1 - " << opt.min_gap;
        throw std::domain_error(os.str());
    }
    const double log_q = std::log(std::min(x.rho / r, r / x.rho));
    SeriesAccumulator acc(opt.tol);
    const int limit = detail::mode_limit(s, opt);
    bool done = false;
    for (int k = 0; k < limit && !done; ++k) {
        const auto& m = s.mode(k);
        const double g = std::exp(m.alpha * log_q) / m.alpha;
        done = acc.add(g * m.boundary_functional * s.eigenfunction(k, x.theta),
                       g * std::abs(m.boundary_functional) * m.sup_abs);
    }
    auto v = acc.result(done);
    if (!done) throw_truncation("exit_radial_density", v);
    const double pref = half_prefactor(s.cone().dimension(), x.rho, r);
    v.value *= pref;
    v.error *= pref;
    return v;
}

namespace detail {

double radial_time_integral(const Spectrum& s, const PolarPoint& x, double r, const SeriesOptions& opt,
                            const std::function<double(double)>& weight, double weight_bound) {
    const auto& cone = s.cone();
    cone.validate_point(x);
    if (!(r > 0.0)) throw std::invalid_argument("radius must be positive");
    const int n = cone.dimension();
    const double t_lo = lower_time_cutoff(n, cone.distance_to_boundary(x), 1e-13);
    std::vector<double> coef(s.size()), env(s.size());
    for (int k = 0; k < s.size(); ++k) {
        coef[k] = s.mode(k).boundary_functional * s.eigenfunction(k, x.theta);
        env[k] = std::abs(s.mode(k).boundary_functional) * s.mode(k).sup_abs;
    }
    double bound = 0.0;
    for (double e : env) bound += e;
    bound *= weight_bound;
    const double d2 = (x.rho - r) * (x.rho - r);
    // u = log t; dt = t du cancels the 1/t of the kernel
    auto f = [&](double u) {
        const double t = std::exp(u);
        const double gauss = std::exp(-d2 / (2.0 * t));
        if (gauss * bound < kNegligible) return 0.0;
        auto v = bessel_series(
            s, x.rho * r / t, opt, [&](int k) { return coef[k]; }, [&](int k) { return env[k]; });
        if (!v.converged) throw_truncation("radial_time_integral", v);
        return gauss * v.value * weight(t);
    };
    const double value = integrate(f, std::log(t_lo), kInfinity, {1e-15, 1e-10, 4000});
    return std::max(0.0, half_prefactor(n, x.rho, r) * value);
}

}  // namespace detail

double exit_radial_density_time_integral(const Spectrum& s, const PolarPoint& x, double r,
                                         const SeriesOptions& opt) {
    return detail::radial_time_integral(s, x, r, opt, [](double) { return 1.0; }, 1.0);
}

double exit_radial_density_bridged(const Spectrum& s, const PolarPoint& x, double r, const SeriesOptions& opt) {
    if (similarity_variable(x.rho, r) <= 1.0 - opt.min_gap) {
        try {
            return exit_radial_density(s, x, r, opt).value;
        } catch (const NonConvergence&) {
        }
    }
    return exit_radial_density_time_integral(s, x, r, opt);
}

double exit_radial_probability(const Spectrum& s, const PolarPoint& x, double a, double b, const SeriesOptions& opt) {
    if (!(a > 0.0) || !(b > a) || !std::isfinite(b)) throw std::invalid_argument("need 0 < a < b < inf");
    const auto w = diagonal_window(x.rho, opt.min_gap);
    auto in_log = [&](double u) {
        const double r = std::exp(u);
        return r * exit_radial_density_bridged(s, x, r, opt);
    };
    auto linear = [&](double r) { return exit_radial_density_time_integral(s, x, r, opt); };
    const QuadratureSpec q{1e-14, std::max(opt.tol, 1e-10), 2000};
    double total = 0.0;
    const double cuts[] = {a, std::clamp(w.lo, a, b), std::clamp(w.hi, a, b), b};
    for (int i = 0; i < 3; ++i) {
        if (!(cuts[i + 1] > cuts[i])) continue;
        total += i == 1 ? integrate(linear, cuts[i], cuts[i + 1], q)
                        : integrate(in_log, std::log(cuts[i]), std::log(cuts[i + 1]), q);
    }
    return total;
}

SeriesValue exit_radial_tail_series(const Spectrum& s, const PolarPoint& x, double r, const SeriesOptions& opt) {
    s.cone().validate_point(x);
    if (!(r > x.rho)) throw std::domain_error("termwise tail needs r > rho");
    const double log_q = std::log(x.rho / r);
    SeriesAccumulator acc(opt.tol);
    const int limit = detail::mode_limit(s, opt);
    bool done = false;
    for (int k = 0; k < limit && !done; ++k) {
        const auto& m = s.mode(k);
        const double g = std::exp(m.p * log_q) / (m.alpha * m.p);
        done = acc.add(g * m.boundary_functional * s.eigenfunction(k, x.theta),
                       g * std::abs(m.boundary_functional) * m.sup_abs);
    }
    auto v = acc.result(done);
    if (!done) throw_truncation("exit_radial_tail_series", v);
    v.value *= 0.5;
    v.error *= 0.5;
    return v;
}

double exit_radial_tail(const Spectrum& s, const PolarPoint& x, double r, const SeriesOptions& opt) {
    if (!(r > x.rho) || similarity_variable(x.rho, r) > 1.0 - opt.min_gap) {
        std::ostringstream os;
        os << "exit_radial_tail needs r beyond the diagonal window, got r = " << r;
        throw std::domain_error(os.str());
    }
    const double r_star = std::max(50.0 * x.rho, 4.0 * r);
    auto f = [&](double u) {
        const double y = std::exp(u);
        return y * exit_radial_density_bridged(s, x, y, opt);
    };
    const double body = integrate(f, std::log(r), std::log(r_star), {1e-15, 1e-11, 2000});
    return body + exit_radial_tail_series(s, x, r_star, opt).value;
}

TailAsymptote bm_tail_asymptote(const Spectrum& s, const PolarPoint& x) {
    s.cone().validate_point(x);
    const auto& m = s.mode(0);
    const double c = std::pow(x.rho, m.p) * m.boundary_functional * s.eigenfunction(0, x.theta) / (2.0 * m.p * m.alpha);
    return {c, m.p, false};
}

double survival(const Spectrum& s, const PolarPoint& x, double t, const SeriesOptions& opt) {
    require_time(t);
    const auto& cone = s.cone();
    cone.validate_point(x);
    const int n = cone.dimension();
    if (detail::early_exit_bound(n, cone.distance_to_boundary(x), t) < opt.tol) return 1.0;

    std::vector<double> coef(s.size()), env(s.size());
    for (int k = 0; k < s.size(); ++k) {
        coef[k] = s.mode(k).interior_functional * s.eigenfunction(k, x.theta);
        env[k] = std::abs(coef[k]);
    }
    double bound = 0.0;
    for (double e : env) bound += e;
    // r = sqrt(t) u; the Gaussian factor centres at u = c.
    const double st = std::sqrt(t);
    const double c = x.rho / st;
    const double pref = std::pow(x.rho, 1.0 - 0.5 * n) * std::pow(st, 0.5 * n - 1.0);
    auto f = [&](double u) {
        if (u <= 0.0) return 0.0;
        const double gauss = std::exp(-0.5 * (c - u) * (c - u));
        if (gauss * bound * std::pow(u, 0.5 * n) * pref < kNegligible) return 0.0;
        auto v = bessel_series(
            s, c * u, opt, [&](int k) { return coef[k]; }, [&](int k) { return env[k]; });
        if (!v.converged) throw_truncation("survival", v);
        return std::pow(u, 0.5 * n) * gauss * v.value;
    };
    const QuadratureSpec q{1e-15, std::max(opt.tol, 1e-11), 4000};
    const double lo = std::max(0.0, c - 12.0);
    double value = integrate(f, lo, c + 12.0, q) + integrate(f, c + 12.0, kInfinity, q);
    if (lo > 0.0) value += integrate(f, 0.0, lo, q);
    return std::clamp(pref * value, 0.0, 1.0);
}

double survival_asymptote(const Spectrum& s, const PolarPoint& x) {
    s.cone().validate_point(x);
    const int n = s.cone().dimension();
    const auto& m = s.mode(0);
    const double log_c = 0.5 * m.p * std::log(0.5 * x.rho * x.rho) + log_gamma(0.5 * (m.p + n)) -
                         log_gamma(m.p + 0.5 * n);
    return std::exp(log_c) * m.interior_functional * s.eigenfunction(0, x.theta);
}

double mean_exit_time(const Spectrum& s, const PolarPoint& x, const SeriesOptions& opt) {
    s.cone().validate_point(x);
    const double p1 = principal_exponent(s.cone());
    if (p1 <= 2.0 + 1e-9) return std::numeric_limits<double>::infinity();
    const int n = s.cone().dimension();
    const double t0 = lower_time_cutoff(n, s.cone().distance_to_boundary(x), 1e-15);
    const double t_star = 1e8 * x.rho * x.rho;
    SeriesOptions inner = opt;
    inner.tol = std::max(opt.tol, 1e-12);
    auto f = [&](double u) {
        const double t = std::exp(u);
        return t * survival(s, x, t, inner);
    };
    const double body = integrate(f, std::log(t0), std::log(t_star), {1e-15, 1e-9, 2000});
    const double h = 0.5 * p1;
    const double tail = survival_asymptote(s, x) * std::pow(t_star, 1.0 - h) / (h - 1.0);
    return t0 + body + tail;
}

struct SurvivalCurve::Spline {
    boost::math::interpolators::pchip<std::vector<double>> spline;
};

SurvivalCurve::SurvivalCurve(const Spectrum& s, const PolarPoint& x, int points_per_decade) {
    s.cone().validate_point(x);
    if (points_per_decade < 4) throw std::invalid_argument("survival table needs >= 4 points per decade");
    const int n = s.cone().dimension();
    t_lo_ = lower_time_cutoff(n, s.cone().distance_to_boundary(x), 1e-15);
    t_hi_ = 1e10 * x.rho * x.rho;
    constant_ = survival_asymptote(s, x);
    exponent_ = 0.5 * s.p1();
    const double lo = std::log(t_lo_), hi = std::log(t_hi_);
    const int count = static_cast<int>(std::ceil((hi - lo) / std::log(10.0) * points_per_decade)) + 1;
    const double step = (hi - lo) / (count - 1);
    SeriesOptions opt;
    opt.tol = 1e-12;
    std::vector<double> nodes(count);
    log_values_.resize(count);
    for (int i = 0; i < count; ++i) {
        nodes[i] = lo + i * step;
        log_values_[i] = std::log(survival(s, x, std::exp(nodes[i]), opt));
        // roundoff near S = 1 can break monotonicity by an ulp
        if (i > 0) log_values_[i] = std::min(log_values_[i], log_values_[i - 1]);
    }
    log_values_[0] = std::min(log_values_[0], 0.0);
    spline_ = std::make_shared<const Spline>(Spline{{std::move(nodes), std::vector<double>(log_values_)}});
}

double SurvivalCurve::operator()(double t) const {
    if (!(t >= 0.0)) throw std::invalid_argument("survival curve needs t >= 0");
    if (t <= t_lo_) return 1.0;
    if (t >= t_hi_) return constant_ * std::pow(t, -exponent_);
    return std::min(1.0, std::exp(spline_->spline(std::log(t))));
}

}  // namespace conexit
