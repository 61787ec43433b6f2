#include "bbm/variance_profile.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "bbm/errors.hpp"

namespace bbm {

VarianceProfile::VarianceProfile(std::vector<double> breakpoints, std::vector<double> sigma_sq)
    : breakpoints_(std::move(breakpoints)), sigma_sq_(std::move(sigma_sq)) {
    if (sigma_sq_.empty()) throw ConfigError("variance profile needs at least one interval");
    if (breakpoints_.size() == sigma_sq_.size()) breakpoints_.push_back(kForever);
    if (breakpoints_.size() != sigma_sq_.size() + 1)
        throw ConfigError("variance profile: breakpoints must number intervals or intervals + 1");
    if (breakpoints_.front() != 0.0) throw ConfigError("variance profile must start at time 0");
    for (std::size_t i = 1; i < breakpoints_.size(); ++i) {
        if (!(breakpoints_[i] > breakpoints_[i - 1]))
            throw ConfigError("variance profile breakpoints must be strictly increasing");
    }
    for (double v : sigma_sq_) {
        if (!(v > 0.0) || !std::isfinite(v))
            throw ConfigError("variance profile rates must be positive and finite");
    }
}

VarianceProfile VarianceProfile::homogeneous() { return VarianceProfile({0.0}, {1.0}); }

VarianceProfile VarianceProfile::two_phase(double sigma1, double sigma2, double switch_time) {
    if (!(switch_time > 0.0)) return VarianceProfile({0.0}, {sigma2 * sigma2});
    return VarianceProfile({0.0, switch_time}, {sigma1 * sigma1, sigma2 * sigma2});
}

VarianceProfile VarianceProfile::normalized_two_phase(double sigma1, double horizon) {
    if (!(sigma1 > 0.0) || !(sigma1 < std::sqrt(2.0)))
        throw ConfigError("two-phase profile needs 0 < sigma1 < sqrt(2)");
    const double sigma2 = std::sqrt(2.0 - sigma1 * sigma1);
    return two_phase(sigma1, sigma2, horizon / 2.0);
}

double VarianceProfile::rate_at(double s) const {
    if (s < 0.0 || s >= end()) throw DomainError("variance profile queried outside its coverage");
    const auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), s);
    return sigma_sq_[static_cast<std::size_t>(it - breakpoints_.begin()) - 1];
}

double VarianceProfile::integrated(double a, double b) const {
    if (b < a) throw DomainError("integration bounds reversed");
    if (a < 0.0 || b > end()) throw DomainError("variance profile integrated outside its coverage");
    double total = 0.0;
    for (std::size_t i = 0; i < sigma_sq_.size(); ++i) {
        const double lo = std::max(a, breakpoints_[i]);
        const double hi = std::min(b, breakpoints_[i + 1]);
        if (hi > lo) total += sigma_sq_[i] * (hi - lo);
    }
    return total;
}

bool VarianceProfile::is_normalized(double t) const {
    if (!(t > 0.0) || !covers(t)) return false;
    return std::abs(integrated(0.0, t) - t) <= 1e-12 * t;
}

std::string VarianceProfile::describe() const {
    std::string out = "breakpoints:";
    char buf[64];
    for (std::size_t i = 0; i < breakpoints_.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%s%.17g", i ? ";" : "", breakpoints_[i]);
        out += buf;
    }
    out += "|sigma_sq:";
    for (std::size_t i = 0; i < sigma_sq_.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%s%.17g", i ? ";" : "", sigma_sq_[i]);
        out += buf;
    }
    return out;
}

}  // namespace bbm
