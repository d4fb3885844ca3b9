#include "conexit/special.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "conexit/errors.hpp"

namespace conexit {

namespace {

constexpr double kEps = 1e-17;
constexpr double kSeriesSwitch = 30.0;

// exp(-z) I_nu(z) by the ascending series. Terms are all positive, so the only
// hazard is overflow of the partial sum, handled by rescaling into `log_scale`.
double scaled_series(double nu, double z) {
    if (z == 0.0) return nu == 0.0 ? 1.0 : 0.0;
    const double quarter_z2 = 0.25 * z * z;
    double log_scale = nu * std::log(0.5 * z) - z - log_gamma(nu + 1.0);
    double term = 1.0;
    double sum = 1.0;
    for (int k = 0; k < 100000; ++k) {
        term *= quarter_z2 / ((k + 1.0) * (nu + k + 1.0));
        sum += term;
        if (sum > 1e280) {
            sum *= 1e-280;
            term *= 1e-280;
            log_scale += 280.0 * std::numbers::ln10;
        }
        const bool decreasing = quarter_z2 < (k + 2.0) * (nu + k + 2.0);
        if (decreasing && term < kEps * sum) break;
    }
    return std::exp(std::log(sum) + log_scale);
}

// Hankel expansion of exp(-z) I_nu(z). Returns false if the asymptotic series
// reaches its smallest term before machine precision.
bool scaled_hankel(double nu, double z, double& out) {
    const double mu4 = 4.0 * nu * nu;
    double term = 1.0;
    double sum = 1.0;
    double prev = 1.0;
    for (int k = 1; k < 200; ++k) {
        const double odd = 2.0 * k - 1.0;
        term *= -(mu4 - odd * odd) / (8.0 * k * z);
        if (std::abs(term) > std::abs(prev) && k > 1) return false;
        sum += term;
        if (std::abs(term) < kEps * std::abs(sum)) {
            out = sum / std::sqrt(2.0 * std::numbers::pi * z);
            return true;
        }
        prev = term;
    }
    return false;
}

// I_{nu+1}(z) / I_nu(z) by modified Lentz evaluation of the continued fraction
// 1 / (2(nu+1)/z + 1 / (2(nu+2)/z + ...)).
double ratio_cf(double nu, double z) {
    constexpr double tiny = 1e-300;
    double f = tiny, c = f, d = 0.0;
    for (int k = 1; k < 5000000; ++k) {
        const double b = 2.0 * (nu + k) / z;
        d = b + d;
        if (d == 0.0) d = tiny;
        c = b + 1.0 / c;
        if (c == 0.0) c = tiny;
        d = 1.0 / d;
        const double delta = c * d;
        f *= delta;
        if (std::abs(delta - 1.0) < 1e-16) return f;
    }
    std::ostringstream os;
    os << "Bessel I continued fraction failed for nu=" << nu << ", z=" << z;
    throw NonConvergence(os.str());
}

double scaled_large_z(double nu, double z) {
    double direct = 0.0;
    if (scaled_hankel(nu, z, direct)) return direct;

    // Downward recurrence I_{k-1} = I_{k+1} + (2k/z) I_k from an unnormalized
    // start at order nu, down to the fractional order mu in [0, 1).
    const double mu = nu - std::floor(nu);
    const int steps = static_cast<int>(std::floor(nu));
    double upper = ratio_cf(nu, z);  // I_{nu+1} relative to I_nu = 1
    double current = 1.0;
    double log_rescale = 0.0;  // log of accumulated division applied to current
    for (int i = 0; i < steps; ++i) {
        const double order = nu - i;
        const double lower = upper + (2.0 * order / z) * current;
        upper = current;
        current = lower;
        if (current > 1e250) {
            upper *= 1e-250;
            current *= 1e-250;
            log_rescale += 250.0 * std::numbers::ln10;
        }
    }
    double base = 0.0;
    if (!scaled_hankel(mu, z, base)) {
        std::ostringstream os;
        os << "Hankel expansion failed at fractional order " << mu << ", z=" << z;
        throw NonConvergence(os.str());
    }
    // I_nu / I_mu = 1 / (current * exp(log_rescale)).
    return base * std::exp(-std::log(current) - log_rescale);
}

}  // namespace

double log_gamma(double x) {
    if (!(x > 0.0) || !std::isfinite(x)) {
        std::ostringstream os;
        os << "log_gamma requires x > 0, got " << x;
        throw std::domain_error(os.str());
    }
#if defined(__GLIBC__)
    int sign = 0;
    return ::lgamma_r(x, &sign);
#else
    return std::lgamma(x);
#endif
}

double bessel_i_scaled(double nu, double z) {
    if (!(nu >= 0.0) || !(z >= 0.0) || !std::isfinite(nu) || !std::isfinite(z)) {
        std::ostringstream os;
        os << "bessel_i requires nu >= 0 and z >= 0, got nu=" << nu << ", z=" << z;
        throw std::domain_error(os.str());
    }
    if (z <= kSeriesSwitch + nu) return scaled_series(nu, z);
    return scaled_large_z(nu, z);
}

ScaledValue bessel_i_split(double nu, double z) {
    return {bessel_i_scaled(nu, z), z};
}

double bessel_i(double nu, double z) {
    const double scaled = bessel_i_scaled(nu, z);
    if (scaled == 0.0) return 0.0;
    const double log_value = std::log(scaled) + z;
    if (log_value > std::log(std::numeric_limits<double>::max())) {
        std::ostringstream os;
        os << "bessel_i(" << nu << ", " << z
           << ") overflows; use bessel_i_scaled or bessel_i_split";
        throw std::overflow_error(os.str());
    }
    return scaled * std::exp(z);
}

double similarity_ratio(double gamma) {
    if (!(gamma > 0.0 && gamma < 1.0)) {
        std::ostringstream os;
        os << "similarity ratio requires 0 < gamma < 1, got " << gamma;
        throw std::domain_error(os.str());
    }
    return gamma / (1.0 + std::sqrt((1.0 - gamma) * (1.0 + gamma)));
}

double laplace_bessel_ratio(double alpha, double gamma) {
    if (!(alpha > 0.0)) throw std::domain_error("laplace_bessel_ratio requires alpha > 0");
    return std::exp(alpha * std::log(similarity_ratio(gamma))) / alpha;
}

double laplace_bessel(double alpha, double gamma) {
    if (!(alpha > 0.0)) throw std::domain_error("laplace_bessel requires alpha > 0");
    const double q = similarity_ratio(gamma);
    return std::exp(alpha * std::log(q)) / std::sqrt((1.0 - gamma) * (1.0 + gamma));
}

double beta_tail_integral(double p1) {
    if (!(p1 > 0.0 && p1 < 2.0)) {
        std::ostringstream os;
        os << "beta_tail_integral diverges unless 0 < p1 < 2, got " << p1;
        throw std::domain_error(os.str());
    }
    return std::exp(log_gamma(1.0 - 0.5 * p1) + log_gamma(1.0 + 0.5 * p1));
}

}  // namespace conexit
