#pragma once

namespace conexit {

// ln Gamma(x) for x > 0. Throws std::domain_error otherwise.
double log_gamma(double x);

// Modified Bessel function of the first kind, real order nu >= 0, z >= 0.
//
// Power series for z <= 30 + nu. Beyond that the Hankel expansion is used when
// it converges to machine precision; otherwise the ratio I_{nu+1}/I_nu from its
// continued fraction seeds a downward recurrence to the fractional order
// nu - floor(nu), which the Hankel expansion normalizes.
//
// bessel_i throws std::overflow_error when the unscaled value is not
// representable; bessel_i_scaled returns exp(-z) I_nu(z) and never overflows.
double bessel_i(double nu, double z);
double bessel_i_scaled(double nu, double z);

// I_nu(z) = mantissa * exp(exponent), for callers that need the magnitude of
// values past the overflow threshold.
struct ScaledValue {
    double mantissa;
    double exponent;
};
ScaledValue bessel_i_split(double nu, double z);

// \int_0^inf w^{-1} e^{-w} I_alpha(gamma w) dw
//   = alpha^{-1} gamma^alpha [1 + sqrt(1 - gamma^2)]^{-alpha},   0 < gamma < 1.
double laplace_bessel_ratio(double alpha, double gamma);

// \int_0^inf e^{-w} I_alpha(gamma w) dw
//   = gamma^alpha / (sqrt(1 - gamma^2) [1 + sqrt(1 - gamma^2)]^alpha).
double laplace_bessel(double alpha, double gamma);

// The geometric ratio q = gamma / (1 + sqrt(1 - gamma^2)) that controls both
// closed forms above; q = min(rho/r, r/rho) when gamma = 2 rho r/(rho^2 + r^2).
double similarity_ratio(double gamma);

// \int_0^inf w^{-p/2} (1 + w)^{-2} dw = Gamma(1 - p/2) Gamma(1 + p/2), 0 < p < 2.
double beta_tail_integral(double p1);

}  // namespace conexit
