#include "conexit/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <string>

#include "conexit/legendre.hpp"
#include "conexit/special.hpp"

namespace conexit {

namespace {

constexpr double kPi = std::numbers::pi;

double sphere_measure(int dim) {  // |S^dim|
    const double h = 0.5 * (dim + 1);
    return 2.0 * std::exp(h * std::log(kPi) - log_gamma(h));
}

}  // namespace

const Spectrum& cached_spectrum(const ConeFamily& cone, BoundaryWeight weight) {
    static std::mutex mutex;
    static std::map<std::string, std::unique_ptr<Spectrum>> cache;
    const std::string key = cone.describe() + (weight == BoundaryWeight::Geometric ? "|g" : "|s");
    std::lock_guard lock(mutex);
    auto& slot = cache[key];
    if (!slot) slot = std::make_unique<Spectrum>(cone, default_mode_cap(cone), weight);
    return *slot;
}

int default_mode_cap(const ConeFamily& cone) {
    return std::holds_alternative<CircularCone3D>(cone.variant()) ? 60 : 200;
}

double principal_exponent(const ConeFamily& cone) {
    if (auto f = cone.exact_p1()) return static_cast<double>(f->numerator) / f->denominator;
    return Spectrum(cone, 1).p1();
}

double integrate_over_domain(const ConeFamily& cone, const Integrand& f, const QuadratureSpec& spec) {
    const double extent = cone.angular_extent();
    if (std::holds_alternative<Wedge2D>(cone.variant())) return integrate(f, 0.0, extent, spec);
    const int n = cone.dimension();
    const double omega = sphere_measure(n - 2);
    auto weighted = [&f, n](double t) { return f(t) * std::pow(std::sin(t), n - 2); };
    return omega * integrate(weighted, 0.0, extent, spec);
}

Spectrum::Spectrum(const ConeFamily& cone, int modes, BoundaryWeight weight)
    : cone_(cone), weight_(weight) {
    if (modes < 1) throw std::invalid_argument("spectrum needs at least one mode");
    const int n = cone.dimension();
    const double shift = 0.5 * n - 1.0;
    omega_ = n == 2 ? 2.0 : sphere_measure(n - 2);
    modes_.reserve(modes);

    if (const auto* w = std::get_if<Wedge2D>(&cone.variant())) {
        const double a = w->aperture;
        const double c = std::sqrt(2.0 / a);
        const double bw = weight == BoundaryWeight::Geometric ? 1.0 : std::sin(0.5 * a);
        for (int j = 1; j <= modes; ++j) {
            const double k = j * kPi / a;
            const double odd = j % 2 == 1 ? 2.0 : 0.0;  // 1 - cos(j pi)
            Mode m{j, k, k * k, k, k, c, bw * c * k * odd, c * odd / k, c};
            modes_.push_back(m);
        }
        return;
    }

    std::vector<double> degrees;
    if (const auto* c3 = std::get_if<CircularCone3D>(&cone.variant())) {
        degrees = legendre_degree_roots(c3->half_angle, modes);
        if (auto exact = cone.exact_p1(); exact && exact->numerator == 1 && exact->denominator == 1) {
            // theta0 = pi/2: the degrees are exactly the odd integers
            for (int j = 0; j < modes; ++j) degrees[j] = 2.0 * j + 1.0;
        }
    } else {
        for (int j = 1; j <= modes; ++j) degrees.push_back(2.0 * j - 1.0);
    }

    const double extent = cone.angular_extent();
    const double sin_extent = std::sin(extent);
    const double boundary_measure = omega_ * std::pow(sin_extent, n - 2);
    double bw = 1.0;
    if (weight == BoundaryWeight::ApertureSine && std::holds_alternative<CircularCone3D>(cone.variant()))
        bw = sin_extent;
    const QuadratureSpec tight{1e-300, 1e-12, 4000};
    for (int j = 1; j <= modes; ++j) {
        const double d = degrees[j - 1];
        Mode m{j, d, d * (d + n - 2.0), d + shift, d, 1.0, 0.0, 0.0, 0.0};
        if (std::holds_alternative<HalfSpace>(cone.variant())) {
            // Odd l: the square of the profile is even, so the hemisphere
            // carries half the full-sphere Gegenbauer norm.
            double sq = 0.25 * kPi * omega_;  // n = 2: 2 \int_0^{pi/2} cos^2
            if (n > 2) {
                const double lam = 0.5 * n - 1.0;
                const double l = d;
                sq = 0.5 * omega_ * kPi *
                     std::exp((1.0 - 2.0 * lam) * std::log(2.0) + log_gamma(l + 2.0 * lam) - log_gamma(l + 1.0) -
                              std::log(l + lam) - 2.0 * log_gamma(lam));
            }
            m.norm = 1.0 / std::sqrt(sq);
            m.boundary_functional = boundary_measure * -m.norm * profile_derivative(m, extent);
            m.interior_functional = m.boundary_functional / m.eigenvalue;  // Green
        } else {
            const double sq = integrate_over_domain(
                cone_, [&](double t) { const double g = profile(m, t); return g * g; }, tight);
            m.norm = 1.0 / std::sqrt(sq);
            m.boundary_functional = bw * boundary_measure * -m.norm * profile_derivative(m, extent);
            // |D_j| <= |D|^{1/2} ||profile||, so the profile norm sets the absolute scale
            const QuadratureSpec scaled{1e-13 * std::sqrt(sq), 1e-12, 4000};
            m.interior_functional =
                m.norm * integrate_over_domain(cone_, [&](double t) { return profile(m, t); }, scaled);
        }
        if (std::holds_alternative<HalfSpace>(cone.variant())) {
            // |C_l^lambda| and |cos l theta| peak at theta = 0
            m.sup_abs = m.norm * std::abs(profile(m, 0.0));
        } else {
            const int grid = std::max(64, static_cast<int>(16.0 * d));
            double sup = 0.0;
            for (int i = 0; i <= grid; ++i) sup = std::max(sup, std::abs(profile(m, extent * i / grid)));
            m.sup_abs = 1.02 * m.norm * sup;
        }
        modes_.push_back(m);
    }
}

double Spectrum::profile(const Mode& m, double theta) const {
    if (std::holds_alternative<Wedge2D>(cone_.variant())) return std::sin(m.degree * theta);
    if (std::holds_alternative<CircularCone3D>(cone_.variant())) return legendre_p(m.degree, std::cos(theta));
    const int n = cone_.dimension();
    const int l = static_cast<int>(m.degree);
    if (n == 2) return std::cos(l * theta);
    return gegenbauer(l, 0.5 * n - 1.0, std::cos(theta));
}

double Spectrum::profile_derivative(const Mode& m, double theta) const {
    if (std::holds_alternative<Wedge2D>(cone_.variant())) return m.degree * std::cos(m.degree * theta);
    const double s = std::sin(theta);
    if (std::holds_alternative<CircularCone3D>(cone_.variant()))
        return -s * legendre_p_derivative(m.degree, std::cos(theta));
    const int n = cone_.dimension();
    const int l = static_cast<int>(m.degree);
    if (n == 2) return -l * std::sin(l * theta);
    const double lambda = 0.5 * n - 1.0;
    if (l == 0) return 0.0;
    return -s * 2.0 * lambda * gegenbauer(l - 1, lambda + 1.0, std::cos(theta));
}

double Spectrum::eigenfunction(int k, double theta) const {
    const Mode& m = modes_.at(k);
    return m.norm * profile(m, theta);
}

double Spectrum::eigenfunction_derivative(int k, double theta) const {
    const Mode& m = modes_.at(k);
    return m.norm * profile_derivative(m, theta);
}

std::vector<double> Spectrum::inward_normal_derivative(int k) const {
    const double extent = cone_.angular_extent();
    if (std::holds_alternative<Wedge2D>(cone_.variant()))
        return {eigenfunction_derivative(k, 0.0), -eigenfunction_derivative(k, extent)};
    return {-eigenfunction_derivative(k, extent)};
}

}  // namespace conexit
