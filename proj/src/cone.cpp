#include "conexit/cone.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>

namespace conexit {

namespace {

constexpr double kPi = std::numbers::pi;

std::optional<PiFraction> detect_pi_fraction(double angle) {
    const double ratio = angle / kPi;
    for (int den = 1; den <= 64; ++den) {
        const double num = std::round(ratio * den);
        if (num < 1.0) continue;
        if (std::abs(ratio - num / den) <= 1e-7 * ratio) {
            const int n = static_cast<int>(num);
            return PiFraction{n / std::gcd(n, den), den / std::gcd(n, den)};
        }
    }
    return std::nullopt;
}

double parse_number(std::string_view text) {
    double value = 0.0;
    const auto* first = text.data();
    const auto* last = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last)
        throw std::invalid_argument("not a number: '" + std::string(text) + "'");
    return value;
}

std::string format_double(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

}  // namespace

double parse_angle(std::string_view text) {
    const auto pos = text.find("pi");
    if (pos == std::string_view::npos) return parse_number(text);
    std::string_view coeff = text.substr(0, pos);
    if (!coeff.empty() && coeff.back() == '*') coeff.remove_suffix(1);
    double value = kPi * (coeff.empty() ? 1.0 : parse_number(coeff));
    std::string_view rest = text.substr(pos + 2);
    if (!rest.empty()) {
        if (rest.front() != '/') throw std::invalid_argument("bad angle: '" + std::string(text) + "'");
        value /= parse_number(rest.substr(1));
    }
    return value;
}

ConeFamily ConeFamily::wedge(double aperture) {
    if (!(aperture > 0.0 && aperture < 2.0 * kPi))
        throw std::invalid_argument("wedge aperture must lie in (0, 2 pi)");
    auto fraction = detect_pi_fraction(aperture);
    if (fraction) aperture = kPi * fraction->numerator / fraction->denominator;
    ConeFamily cone(Wedge2D{aperture});
    cone.pi_fraction_ = fraction;
    return cone;
}

ConeFamily ConeFamily::halfspace(int dimension) {
    if (dimension < 2) throw std::invalid_argument("half-space dimension must be >= 2");
    return ConeFamily(HalfSpace{dimension});
}

ConeFamily ConeFamily::cone3d(double half_angle) {
    if (!(half_angle > 0.0 && half_angle < kPi))
        throw std::invalid_argument("cone half angle must lie in (0, pi)");
    auto fraction = detect_pi_fraction(half_angle);
    if (fraction) half_angle = kPi * fraction->numerator / fraction->denominator;
    ConeFamily cone(CircularCone3D{half_angle});
    cone.pi_fraction_ = fraction;
    return cone;
}

int ConeFamily::dimension() const {
    if (const auto* h = std::get_if<HalfSpace>(&variant_)) return h->dimension;
    return std::holds_alternative<Wedge2D>(variant_) ? 2 : 3;
}

bool ConeFamily::axis_only() const { return !std::holds_alternative<Wedge2D>(variant_); }

double ConeFamily::angular_extent() const {
    if (const auto* w = std::get_if<Wedge2D>(&variant_)) return w->aperture;
    if (const auto* c = std::get_if<CircularCone3D>(&variant_)) return c->half_angle;
    return 0.5 * kPi;
}

double ConeFamily::bisector() const {
    if (const auto* w = std::get_if<Wedge2D>(&variant_)) return 0.5 * w->aperture;
    return 0.0;
}

std::optional<PiFraction> ConeFamily::exact_p1() const {
    if (std::holds_alternative<HalfSpace>(variant_)) return PiFraction{1, 1};
    if (std::holds_alternative<Wedge2D>(variant_) && pi_fraction_)
        return PiFraction{pi_fraction_->denominator, pi_fraction_->numerator};  // p1 = pi / a
    if (std::holds_alternative<CircularCone3D>(variant_) && pi_fraction_ &&
        pi_fraction_->numerator == 1 && pi_fraction_->denominator == 2)
        return PiFraction{1, 1};
    return std::nullopt;
}

double ConeFamily::distance_to_boundary(const PolarPoint& x) const {
    auto ray_distance = [&x](double angle_gap) {
        return angle_gap >= 0.5 * kPi ? x.rho : x.rho * std::sin(angle_gap);
    };
    if (const auto* w = std::get_if<Wedge2D>(&variant_))
        return std::min(ray_distance(std::abs(x.theta)), ray_distance(std::abs(w->aperture - x.theta)));
    return ray_distance(angular_extent() - x.theta);
}

void ConeFamily::validate_point(const PolarPoint& x, bool interior) const {
    if (!(x.rho > 0.0) || !std::isfinite(x.rho))
        throw std::invalid_argument("point radius must be positive and finite");
    const double extent = angular_extent();
    if (axis_only()) {
        if (x.theta != 0.0 && interior)
            throw std::invalid_argument(describe() + ": only starting points on the axis (theta = 0) are supported");
        if (x.theta < 0.0 || x.theta > extent)
            throw std::invalid_argument("polar angle outside the cone");
        return;
    }
    const bool ok = interior ? (x.theta > 0.0 && x.theta < extent) : (x.theta >= 0.0 && x.theta <= extent);
    if (!ok) throw std::invalid_argument("angle outside the wedge");
}

std::string ConeFamily::describe() const {
    if (const auto* w = std::get_if<Wedge2D>(&variant_)) return "wedge:a=" + format_double(w->aperture);
    if (const auto* h = std::get_if<HalfSpace>(&variant_)) return "halfspace:n=" + std::to_string(h->dimension);
    return "cone3d:theta0=" + format_double(std::get<CircularCone3D>(variant_).half_angle);
}

ConeFamily parse_cone(std::string_view spec) {
    const auto colon = spec.find(':');
    const auto eq = spec.find('=');
    if (colon == std::string_view::npos || eq == std::string_view::npos || eq < colon)
        throw std::invalid_argument("cone spec must look like family:key=value, got '" + std::string(spec) + "'");
    const auto family = spec.substr(0, colon);
    const auto key = spec.substr(colon + 1, eq - colon - 1);
    const auto value = spec.substr(eq + 1);
    if (family == "wedge" && key == "a") return ConeFamily::wedge(parse_angle(value));
    if (family == "cone3d" && key == "theta0") return ConeFamily::cone3d(parse_angle(value));
    if (family == "halfspace" && key == "n") {
        int n = 0;
        const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), n);
        if (ec != std::errc() || ptr != value.data() + value.size())
            throw std::invalid_argument("half-space dimension must be an integer");
        return ConeFamily::halfspace(n);
    }
    throw std::invalid_argument("unknown cone spec '" + std::string(spec) + "'");
}

}  // namespace conexit
