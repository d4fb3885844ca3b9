#pragma once

#include <functional>
#include <limits>

namespace conexit {

struct QuadratureSpec {
    double abs_tol = 1e-12;
    double rel_tol = 1e-10;
    int max_subdivisions = 2000;

    // Throws std::invalid_argument unless tolerances are positive and
    // max_subdivisions >= 1.
    void validate() const;
};

struct QuadratureResult {
    double value = 0.0;
    double error = 0.0;
    int evaluations = 0;
    bool converged = false;
};

using Integrand = std::function<double(double)>;

// Globally adaptive 10/21-point Gauss-Kronrod with interval bisection. An
// infinite upper limit is split at a + 1; the tail uses x = a + 1 / (2 - u).
// Never throws on non-convergence; callers inspect `converged`.
QuadratureResult integrate_adaptive(const Integrand& f, double a, double b,
                                    const QuadratureSpec& spec = {});

// As integrate_adaptive, but throws NonConvergence when the error contract
// is not met.
double integrate(const Integrand& f, double a, double b,
                 const QuadratureSpec& spec = {});

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

}  // namespace conexit
