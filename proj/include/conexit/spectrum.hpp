#pragma once

#include <vector>

#include "conexit/cone.hpp"
#include "conexit/quadrature.hpp"

namespace conexit {

// How the boundary functional S_j weights the inward normal derivative.
//
// Geometric integrates against the induced surface measure of the boundary of
// the generating domain (the two endpoints for wedges, a circle of radius
// sin(theta0) for 3-D cones). With it the Green identity S_j = lambda_j D_j
// holds exactly and the exit density integrates to one.
//
// ApertureSine multiplies by sin(a/2) for wedges and by an extra sin(theta0)
// for 3-D cones. Kept for comparison only.
enum class BoundaryWeight { Geometric, ApertureSine };

struct Mode {
    int index;                    // j = 1, 2, ...
    double degree;                // j pi / a, nu_j, or l = 2j - 1
    double eigenvalue;            // lambda_j
    double alpha;                 // sqrt(lambda_j + (n/2 - 1)^2)
    double p;                     // alpha_j - (n/2 - 1)
    double norm;                  // c_j with m_j = c_j * profile
    double boundary_functional;   // S_j
    double interior_functional;   // D_j = \int_D m_j
    double sup_abs;               // max |m_j| over D (sampled), for truncation envelopes
};

// Dirichlet spectrum of the spherical Laplacian on the generating domain D,
// restricted for the axisymmetric families to the zonal modes (the only ones
// that do not vanish on the axis).
class Spectrum {
public:
    Spectrum(const ConeFamily& cone, int modes, BoundaryWeight weight = BoundaryWeight::Geometric);

    const ConeFamily& cone() const { return cone_; }
    BoundaryWeight weight() const { return weight_; }
    int size() const { return static_cast<int>(modes_.size()); }
    const Mode& mode(int k) const { return modes_.at(k); }  // k = j - 1
    const std::vector<Mode>& modes() const { return modes_; }

    double p1() const { return modes_.front().p; }

    // m_j(theta) and dm_j/dtheta for k = j - 1. For the axisymmetric families
    // theta is the polar angle.
    double eigenfunction(int k, double theta) const;
    double eigenfunction_derivative(int k, double theta) const;

    // Inward normal derivative of m_j at the boundary: a list of endpoint
    // values for wedges (phi = 0 then phi = a), one value otherwise.
    std::vector<double> inward_normal_derivative(int k) const;

    // Measure of S^{n-2}; the angular factor in dsigma = omega * sin^{n-2} dtheta.
    double zonal_measure() const { return omega_; }

private:
    double profile(const Mode& m, double theta) const;
    double profile_derivative(const Mode& m, double theta) const;

    ConeFamily cone_;
    BoundaryWeight weight_;
    std::vector<Mode> modes_;
    double omega_ = 1.0;
};

// Spectrum with default_mode_cap(cone) modes, built once per (cone, weight) and
// shared. Safe to call from several threads.
const Spectrum& cached_spectrum(const ConeFamily& cone, BoundaryWeight weight = BoundaryWeight::Geometric);

// Mode count used when a series is truncated by tolerance: 60 for 3-D
// circular cones, 200 for wedges and half-spaces.
int default_mode_cap(const ConeFamily& cone);

// p1 of the cone, using the exact fraction when known.
double principal_exponent(const ConeFamily& cone);

// Integral over D of a function of the angle against the surface measure
// (zonal functions only for the axisymmetric families).
double integrate_over_domain(const ConeFamily& cone, const Integrand& f,
                             const QuadratureSpec& spec = {1e-14, 1e-12, 4000});

}  // namespace conexit
