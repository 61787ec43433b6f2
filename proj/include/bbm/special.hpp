#pragma once

#include <cmath>
#include <limits>
#include <span>

namespace bbm {

/// Upper tail of the standard normal, P[N(0,1) > z].
double normal_tail(double z);

/// log P[N(0,1) > z], finite for every finite z (continued-fraction Mills
/// ratio once erfc would underflow).
double log_normal_tail(double z);

/// Mills ratio Q(z) / phi(z) for z >= 0.
double mills_ratio(double z);

/// log of the standard normal density.
inline double log_normal_density(double z) {
    return -0.5 * z * z - 0.5 * std::log(2.0 * 3.14159265358979323846);
}

/// log(exp(a) + exp(b)).
inline double log_add_exp(double a, double b) {
    if (a == -std::numeric_limits<double>::infinity()) return b;
    if (b == -std::numeric_limits<double>::infinity()) return a;
    const double hi = a > b ? a : b;
    const double lo = a > b ? b : a;
    return hi + std::log1p(std::exp(lo - hi));
}

/// log(sum exp(terms)), scaled by the largest term.
double log_sum_exp(std::span<const double> terms);

}  // namespace bbm
