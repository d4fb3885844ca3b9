#pragma once

#include <vector>

namespace conexit {

// Legendre function of the first kind P_nu(x) for real degree nu and
// -1 < x <= 1, together with P_{nu-1}(x).
//
// Degrees below 2 use the hypergeometric series 2F1(-nu, nu+1; 1; (1-x)/2).
// Larger degrees start that series at the fractional part of nu and run the
// three-term recurrence upward, which stays stable on (-1, 1) and avoids the
// cancellation the series suffers for large nu.
struct LegendrePair {
    double value;     // P_nu(x)
    double previous;  // P_{nu-1}(x)
};
LegendrePair legendre_p_pair(double nu, double x);
double legendre_p(double nu, double x);

// dP_nu/dx.
double legendre_p_derivative(double nu, double x);

// Gegenbauer polynomial C_l^{(lambda)}(x), lambda > 0, by recurrence.
double gegenbauer(int l, double lambda, double x);

// First `count` positive roots, increasing, of nu -> P_nu(cos theta0).
// Throws NonConvergence if the scan passes `max_degree` first.
std::vector<double> legendre_degree_roots(double theta0, int count, double max_degree = 4000.0);

}  // namespace conexit
