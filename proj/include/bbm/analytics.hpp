#pragma once

#include <cstddef>
#include <vector>

#include "bbm/functionals.hpp"
#include "bbm/process.hpp"

namespace bbm {

/// P[N(0, sigma^2) > a] through erfc. Throws DomainError for sigma <= 0.
double gaussian_tail_exact(double a, double sigma);
/// log of gaussian_tail_exact, finite far into the tail.
double log_gaussian_tail_exact(double a, double sigma);

/// (2 pi)^(-1/2) (sigma/a) exp(-a^2 / (2 sigma^2)): the leading tail term,
/// an upper bound for every a > 0. Throws DomainError for a <= 0 or sigma <= 0.
double gaussian_tail_asymptotic(double a, double sigma);

/// log E Z_alpha(t) = t + log P[N(0, t) >= delta t]. Throws DomainError for t <= 0.
double log_expected_high_points_exact(const AlphaParams& p, double t);
inline double expected_high_points_exact(const AlphaParams& p, double t) {
    return std::exp(log_expected_high_points_exact(p, t));
}

/// log of (delta sqrt(2 pi))^-1 exp[(1 - delta^2/2) t - log(t)/2].
/// Throws DomainError for t <= 1.
double log_expected_high_points_asymptotic(const AlphaParams& p, double t);

/// log E[Z_alpha(t) | F_r] for the time-r snapshot:
/// log sum_i e^(t-r) P[N(0, t-r) >= delta t - x_i(r)].
/// Throws DomainError unless snapshot.time < t.
double log_conditional_expected_count(const ParticleSnapshot& snapshot_r, const AlphaParams& p, double t);

/// exp(-2 d0 d1 / length) for a unit-rate bridge. Throws DomainError for
/// length <= 0 or negative distances.
double bridge_crossing_prob(double d0, double d1, double length);

/// log E Z_alpha(t) - r eps^2 / 4.
double log_localization_bound(const AlphaParams& p, double eps, double r, double t);

/// Half the smaller of the two admissible-epsilon bounds
/// eps (2/delta + delta) < 1 - delta^2/2 and delta^2/2 - 1 + delta eps < 0.
double default_epsilon(const AlphaParams& p);
/// Both admissible-epsilon constraints hold strictly.
bool epsilon_admissible(const AlphaParams& p, double eps);

struct PairBoundConfig {
    AlphaParams alpha;
    double eps;
    double r;
    double t;
    double rel_tol = 1e-6;
    std::size_t max_subdivisions = 400;

    /// Throws DomainError unless 0 <= r <= t, t > 0 and eps is admissible.
    void validate() const;
    /// Splitting threshold (delta - eps) t of the inner integral.
    double split_threshold() const { return (alpha.delta() - eps) * t; }
    /// 3 eps / (delta + eps).
    double delta_split() const { return 3.0 * eps / (alpha.delta() + eps); }
};

/// log of the integral over gamma in [r, t] of
///   e^(2t - gamma) * int_{-inf}^{(delta+eps) gamma} phi_gamma(y) Q((delta t - y)/sqrt(t - gamma))^2 dy,
/// an upper bound for the expected number of unordered same-ancestor pairs
/// of localized high points. Returns -infinity when r == t.
/// Throws ConvergenceError (log-domain bracket) if the tolerance is not met.
double log_pair_count_bound(const PairBoundConfig& cfg);

// Decay of a non-negative statistic along an r-grid, with the fitted rate
// kappa = -d log(estimate) / dr.
struct DecayFit {
    std::vector<double> r_values;
    std::vector<double> estimates;
    double fitted_rate = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    /// Theoretical admissible range kappa < 1 - delta^2/2.
    double admissible_upper = 0.0;
};

/// Least-squares slope of log(estimates) against r, negated.
double fit_decay_rate(const std::vector<double>& r_values, const std::vector<double>& estimates);

}  // namespace bbm
