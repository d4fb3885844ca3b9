#pragma once

#include <algorithm>
#include <cmath>
#include <functional>

#include "conexit/bm_exit.hpp"

namespace conexit::detail {

// Running sum of a mode series. Each term comes with an envelope bounding
// its magnitude; the sum stops once three consecutive envelopes fall below
// tol times the larger of |sum| and the largest term seen (the latter keeps
// cancelling sums from running forever).
class SeriesAccumulator {
public:
    explicit SeriesAccumulator(double tol) : tol_(tol) {}

    // Returns true when the series can stop.
    bool add(double term, double envelope) {
        sum_ += term;
        max_abs_ = std::max(max_abs_, std::abs(term));
        ++terms_;
        if (envelope > 0.0) {
            env_prev_ = env_last_;
            env_last_ = envelope;
        }
        const double ref = std::max(std::abs(sum_), max_abs_);
        small_run_ = envelope <= tol_ * ref ? small_run_ + 1 : 0;
        return small_run_ >= 3;
    }

    SeriesValue result(bool converged) const {
        SeriesValue v;
        v.value = sum_;
        v.terms = terms_;
        v.converged = converged;
        const double ratio = env_prev_ > 0.0 ? env_last_ / env_prev_ : 1.0;
        v.error = ratio < 1.0 ? env_last_ * ratio / (1.0 - ratio) : env_last_;
        return v;
    }

private:
    double tol_;
    double sum_ = 0.0, max_abs_ = 0.0;
    double env_prev_ = 0.0, env_last_ = 0.0;
    int terms_ = 0, small_run_ = 0;
};

inline int mode_limit(const Spectrum& s, const SeriesOptions& opt) {
    const int cap = opt.max_terms > 0 ? opt.max_terms : default_mode_cap(s.cone());
    return std::min(cap, s.size());
}

// Upper bound on P(tau < t) from the distance d to the boundary: some
// coordinate must move d / sqrt(n) first, and P(sup |W| >= a) <= 4 Phi(-a / sqrt t).
inline double early_exit_bound(int n, double d, double t) {
    return 2.0 * n * std::erfc(d / std::sqrt(2.0 * n * t));
}

// Radial exit density as a time integral of the joint exit law, each time t
// weighted by weight(t) <= weight_bound.
double radial_time_integral(const Spectrum& s, const PolarPoint& x, double r, const SeriesOptions& opt,
                            const std::function<double(double)>& weight, double weight_bound);

}  // namespace conexit::detail
