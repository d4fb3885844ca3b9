#include "conexit/legendre.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "conexit/errors.hpp"

namespace conexit {

namespace {

double hypergeometric_series(double nu, double x) {
    const double z = 0.5 * (1.0 - x);
    double term = 1.0;
    double sum = 1.0;
    for (int k = 0; k < 2000000; ++k) {
        term *= (k - nu) * (nu + k + 1.0) / ((k + 1.0) * (k + 1.0)) * z;
        sum += term;
        // once k exceeds |nu| the terms shrink geometrically
        if (k > std::abs(nu) + 1.0 && std::abs(term) < 1e-17 * std::abs(sum)) return sum;
        if (term == 0.0) return sum;
    }
    std::ostringstream os;
    os << "Legendre series did not converge for nu=" << nu << ", x=" << x;
    throw NonConvergence(os.str());
}

void check_argument(double nu, double x) {
    if (!(x > -1.0 && x <= 1.0) || !std::isfinite(nu)) {
        std::ostringstream os;
        os << "legendre_p requires -1 < x <= 1, got nu=" << nu << ", x=" << x;
        throw std::domain_error(os.str());
    }
}

}  // namespace

LegendrePair legendre_p_pair(double nu, double x) {
    check_argument(nu, x);
    if (nu < 0.0) nu = -nu - 1.0;  // P_nu = P_{-nu-1}
    if (nu < 2.0) return {hypergeometric_series(nu, x), hypergeometric_series(nu - 1.0, x)};
    const double mu = nu - std::floor(nu);
    double prev = hypergeometric_series(mu, x);
    double cur = hypergeometric_series(mu + 1.0, x);
    const int steps = static_cast<int>(std::floor(nu)) - 1;
    for (int i = 0; i < steps; ++i) {
        const double k = mu + 1.0 + i;
        const double next = ((2.0 * k + 1.0) * x * cur - k * prev) / (k + 1.0);
        prev = cur;
        cur = next;
    }
    return {cur, prev};
}

double legendre_p(double nu, double x) { return legendre_p_pair(nu, x).value; }

double legendre_p_derivative(double nu, double x) {
    if (nu < 0.0) nu = -nu - 1.0;
    if (x == 1.0) return 0.5 * nu * (nu + 1.0);
    const auto p = legendre_p_pair(nu, x);
    return nu * (x * p.value - p.previous) / (x * x - 1.0);
}

double gegenbauer(int l, double lambda, double x) {
    if (l < 0 || !(lambda > 0.0)) throw std::domain_error("gegenbauer requires l >= 0, lambda > 0");
    double prev = 1.0;
    if (l == 0) return prev;
    double cur = 2.0 * lambda * x;
    for (int k = 1; k < l; ++k) {
        const double next = (2.0 * (k + lambda) * x * cur - (k + 2.0 * lambda - 1.0) * prev) / (k + 1.0);
        prev = cur;
        cur = next;
    }
    return cur;
}

std::vector<double> legendre_degree_roots(double theta0, int count, double max_degree) {
    if (!(theta0 > 0.0 && theta0 < std::acos(-1.0))) throw std::domain_error("theta0 must lie in (0, pi)");
    const double x = std::cos(theta0);
    auto f = [x](double nu) { return legendre_p(nu, x); };
    constexpr double step = 0.25;
    std::vector<double> roots;
    double lo = 0.0, flo = f(lo);
    while (static_cast<int>(roots.size()) < count) {
        const double hi = lo + step;
        if (hi > max_degree) {
            std::ostringstream os;
            os << "only " << roots.size() << " Legendre degree roots below " << max_degree
               << " for theta0=" << theta0;
            throw NonConvergence(os.str());
        }
        const double fhi = f(hi);
        if (fhi == 0.0) {
            roots.push_back(hi);
        } else if (flo != 0.0 && (flo < 0.0) != (fhi < 0.0)) {
            // Illinois variant of regula falsi; bisect if it stalls.
            double a = lo, fa = flo, b = hi, fb = fhi;
            int side = 0;
            for (int it = 0; it < 200 && b - a > 1e-15 * b; ++it) {
                double c = (a * fb - b * fa) / (fb - fa);
                if (!(c > a && c < b) || it % 8 == 7) c = 0.5 * (a + b);
                const double fc = f(c);
                if (fc == 0.0) { a = b = c; break; }
                if ((fc < 0.0) == (fb < 0.0)) {
                    b = c; fb = fc;
                    if (side == -1) fa *= 0.5;
                    side = -1;
                } else {
                    a = c; fa = fc;
                    if (side == 1) fb *= 0.5;
                    side = 1;
                }
            }
            roots.push_back(std::abs(fa) < std::abs(fb) ? a : b);
        }
        lo = hi;
        flo = fhi;
    }
    return roots;
}

}  // namespace conexit
