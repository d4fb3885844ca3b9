#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <variant>

namespace conexit {

// Planar wedge {0 < phi < aperture}; boundary rays at angles 0 and aperture.
struct Wedge2D {
    double aperture;
};

// {x_n > 0} in R^n, generated by the upper hemisphere.
struct HalfSpace {
    int dimension;
};

// {polar angle from the x_3 axis < half_angle} in R^3.
struct CircularCone3D {
    double half_angle;
};

// a = pi * numerator / denominator, recovered from an aperture given in
// decimal form when it is within 1e-7 (relative) of such a fraction.
struct PiFraction {
    int numerator;
    int denominator;
};

// A point in the cone in polar form x = rho * theta. For wedges theta is the
// angle in [0, a]; for the axisymmetric families (half-space, 3-D cone) it is
// the polar angle from the axis.
struct PolarPoint {
    double rho;
    double theta;
};

class ConeFamily {
public:
    using Variant = std::variant<Wedge2D, HalfSpace, CircularCone3D>;

    // Throw std::invalid_argument outside 0 < a < 2 pi, n >= 2, 0 < theta0 < pi.
    static ConeFamily wedge(double aperture);
    static ConeFamily halfspace(int dimension);
    static ConeFamily cone3d(double half_angle);

    const Variant& variant() const { return variant_; }
    int dimension() const;

    // True for the families whose exit laws are only computed from points on
    // the symmetry axis.
    bool axis_only() const;

    // Angular extent of the generating domain: a for wedges, the half angle
    // (pi/2 for half-spaces) otherwise.
    double angular_extent() const;

    // Starting angle used by the `bisector` keyword: a/2 for wedges, 0 otherwise.
    double bisector() const;

    std::optional<PiFraction> pi_fraction() const { return pi_fraction_; }

    // Exact p1 as a fraction when known symbolically (wedges with a rational
    // multiple of pi, half-spaces).
    std::optional<PiFraction> exact_p1() const;

    // Euclidean distance from an interior point to the boundary of the cone.
    double distance_to_boundary(const PolarPoint& x) const;

    // Throws std::invalid_argument unless x lies in the closed cone (interior
    // when `interior` is set), and for axis-only families on the axis.
    void validate_point(const PolarPoint& x, bool interior = true) const;

    // Canonical CLI spelling, e.g. "wedge:a=0.785398163397448".
    std::string describe() const;

private:
    explicit ConeFamily(Variant v) : variant_(v) {}
    Variant variant_;
    std::optional<PiFraction> pi_fraction_;
};

// Parses `wedge:a=<radians>`, `halfspace:n=<int>`, `cone3d:theta0=<radians>`.
// Angles may also be written with pi, e.g. `pi/4`, `2pi/3`, `3*pi/4`.
ConeFamily parse_cone(std::string_view spec);

// Parses a radian value: a decimal number or a multiple of pi as above.
double parse_angle(std::string_view text);

}  // namespace conexit
