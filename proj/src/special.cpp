#include "bbm/special.hpp"

#include <algorithm>
#include <numbers>

namespace bbm {

namespace {
// Above this, erfc loses relative accuracy to underflow well before 1e-12
// matters; the continued fraction is converged to machine precision here.
constexpr double kContinuedFractionFrom = 8.0;
constexpr int kContinuedFractionDepth = 120;
}  // namespace

double normal_tail(double z) { return 0.5 * std::erfc(z / std::numbers::sqrt2); }

double mills_ratio(double z) {
    if (z < kContinuedFractionFrom) {
        return normal_tail(z) / std::exp(log_normal_density(z));
    }
    // Q(z)/phi(z) = 1/(z + 1/(z + 2/(z + 3/(z + ...)))), evaluated bottom-up.
    double tail = 0.0;
    for (int k = kContinuedFractionDepth; k >= 1; --k) tail = k / (z + tail);
    return 1.0 / (z + tail);
}

double log_normal_tail(double z) {
    if (std::isnan(z)) return z;
    if (z == std::numeric_limits<double>::infinity()) return -std::numeric_limits<double>::infinity();
    if (z < 0.0) return std::log1p(-normal_tail(-z));
    if (z < kContinuedFractionFrom) return std::log(normal_tail(z));
    return log_normal_density(z) + std::log(mills_ratio(z));
}

double log_sum_exp(std::span<const double> terms) {
    if (terms.empty()) return -std::numeric_limits<double>::infinity();
    const double top = *std::max_element(terms.begin(), terms.end());
    if (!std::isfinite(top)) return top;
    double sum = 0.0;
    for (double t : terms) sum += std::exp(t - top);
    return top + std::log(sum);
}

}  // namespace bbm
