#include "bbm/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "bbm/quadrature.hpp"
#include "bbm/special.hpp"

namespace bbm {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

double gaussian_tail_exact(double a, double sigma) {
    if (!(sigma > 0.0)) throw DomainError("gaussian tail needs sigma > 0");
    return normal_tail(a / sigma);
}

double log_gaussian_tail_exact(double a, double sigma) {
    if (!(sigma > 0.0)) throw DomainError("gaussian tail needs sigma > 0");
    return log_normal_tail(a / sigma);
}

double gaussian_tail_asymptotic(double a, double sigma) {
    if (!(sigma > 0.0)) throw DomainError("gaussian tail needs sigma > 0");
    if (!(a > 0.0)) throw DomainError("asymptotic gaussian tail needs a > 0");
    const double z = a / sigma;
    return std::exp(-0.5 * z * z) / (std::sqrt(2.0 * std::numbers::pi) * z);
}

double log_expected_high_points_exact(const AlphaParams& p, double t) {
    if (!(t > 0.0)) throw DomainError("expected high-point count needs t > 0");
    return t + log_gaussian_tail_exact(p.delta() * t, std::sqrt(t));
}

double log_expected_high_points_asymptotic(const AlphaParams& p, double t) {
    if (!(t > 1.0)) throw DomainError("asymptotic high-point count needs t > 1");
    const double delta = p.delta();
    return -std::log(delta * std::sqrt(2.0 * std::numbers::pi)) + (1.0 - 0.5 * delta * delta) * t -
           0.5 * std::log(t);
}

double log_conditional_expected_count(const ParticleSnapshot& snapshot_r, const AlphaParams& p, double t) {
    const double r = snapshot_r.time;
    if (!(r < t)) throw DomainError("conditional expectation needs snapshot time < t");
    const double level = p.delta() * t;
    const double sd = std::sqrt(t - r);
    std::vector<double> terms;
    terms.reserve(snapshot_r.size());
    for (double x : snapshot_r.positions) terms.push_back(log_normal_tail((level - x) / sd));
    return (t - r) + log_sum_exp(terms);
}

double bridge_crossing_prob(double d0, double d1, double length) {
    if (!(length > 0.0)) throw DomainError("bridge length must be positive");
    if (d0 < 0.0 || d1 < 0.0) throw DomainError("bridge endpoint distances must be non-negative");
    return std::exp(-2.0 * d0 * d1 / length);
}

double log_localization_bound(const AlphaParams& p, double eps, double r, double t) {
    if (!(r > 0.0 && r < t)) throw DomainError("localization bound needs 0 < r < t");
    if (!(eps > 0.0)) throw DomainError("localization bound needs eps > 0");
    return log_expected_high_points_exact(p, t) - r * eps * eps / 4.0;
}

double default_epsilon(const AlphaParams& p) {
    const double delta = p.delta();
    const double gap = 1.0 - 0.5 * delta * delta;
    const double growth_bound = gap / (2.0 / delta + delta);
    const double decay_bound = gap / delta;
    return 0.5 * std::min(growth_bound, decay_bound);
}

bool epsilon_admissible(const AlphaParams& p, double eps) {
    const double delta = p.delta();
    return eps > 0.0 && eps * (2.0 / delta + delta) < 1.0 - 0.5 * delta * delta &&
           0.5 * delta * delta - 1.0 + delta * eps < 0.0;
}

void PairBoundConfig::validate() const {
    if (!(t > 0.0)) throw DomainError("pair bound needs t > 0");
    if (!(r >= 0.0 && r <= t)) throw DomainError("pair bound needs 0 <= r <= t");
    if (!epsilon_admissible(alpha, eps)) throw DomainError("pair bound: eps violates the admissibility constraints");
    if (!(rel_tol > 0.0) || max_subdivisions < 1) throw DomainError("pair bound: bad quadrature settings");
}

double log_pair_count_bound(const PairBoundConfig& cfg) {
    cfg.validate();
    const double t = cfg.t;
    if (cfg.r >= t) return kNegInf;

    const double delta = cfg.alpha.delta();
    const double slope = delta + cfg.eps;
    const double target = delta * t;
    // Everything is integrated relative to (E Z_alpha(t))^2, the natural size
    // of the answer, so the integrand stays O(1) even when e^(2t) overflows.
    const double scale = 2.0 * log_expected_high_points_exact(cfg.alpha, t);
    const double inner_tol = cfg.rel_tol * 0.1;

    bool inner_failed = false;
    auto inner = [&](double gamma) {
        const double spread = std::sqrt(t - gamma);
        const double log_prefactor = 2.0 * t - gamma - scale - 0.5 * std::log(2.0 * std::numbers::pi * gamma);
        auto integrand = [&](double y) {
            const double log_q = log_normal_tail((target - y) / spread);
            return std::exp(log_prefactor - 0.5 * y * y / gamma + 2.0 * log_q);
        };
        const double upper = slope * gamma;
        std::vector<double> knots = {kNegInf};
        for (double c : {cfg.split_threshold(), target}) {
            if (c < upper) knots.push_back(c);
        }
        std::sort(knots.begin() + 1, knots.end());
        knots.push_back(upper);
        const auto res = integrate_piecewise(integrand, knots, inner_tol, cfg.max_subdivisions);
        if (!res.converged) inner_failed = true;
        return res.value;
    };

    std::vector<double> knots = {cfg.r};
    const double kink = cfg.split_threshold() / slope;
    if (kink > cfg.r && kink < t) knots.push_back(kink);
    knots.push_back(t);

    const auto res = integrate_piecewise(inner, knots, cfg.rel_tol, cfg.max_subdivisions);
    const double value = res.value;
    const double error = res.error;
    const bool converged = res.converged;
    if (!converged || inner_failed) {
        const double lo = value - error > 0.0 ? std::log(value - error) : kNegInf;
        throw ConvergenceError("pair-count quadrature did not reach relative tolerance " +
                                   std::to_string(cfg.rel_tol),
                               scale + lo, scale + std::log(value + error));
    }
    return scale + std::log(value);
}

double fit_decay_rate(const std::vector<double>& r_values, const std::vector<double>& estimates) {
    if (r_values.size() != estimates.size() || r_values.size() < 2)
        throw DomainError("decay fit needs at least two matching points");
    const double n = static_cast<double>(r_values.size());
    double mr = 0.0, ml = 0.0;
    for (std::size_t i = 0; i < r_values.size(); ++i) {
        if (!(estimates[i] > 0.0)) throw DomainError("decay fit needs positive estimates");
        mr += r_values[i];
        ml += std::log(estimates[i]);
    }
    mr /= n;
    ml /= n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < r_values.size(); ++i) {
        sxy += (r_values[i] - mr) * (std::log(estimates[i]) - ml);
        sxx += (r_values[i] - mr) * (r_values[i] - mr);
    }
    return -sxy / sxx;
}

}  // namespace bbm
