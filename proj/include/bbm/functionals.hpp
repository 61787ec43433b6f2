#pragma once

#include <cstdint>
#include <iosfwd>
#include <numbers>
#include <vector>

#include "bbm/process.hpp"

namespace bbm {

// High-point level alpha in (0, sqrt 2). Only alpha is stored; the slope
// delta = sqrt2 - alpha and the matched sigma1 = delta / sqrt2 are derived on
// demand so they can never drift apart.
class AlphaParams {
public:
    /// Throws DomainError unless 0 < alpha < sqrt 2.
    explicit AlphaParams(double alpha);

    /// The matching alpha = sqrt2 (1 - sigma1). Throws DomainError unless 0 < sigma1 < 1.
    static AlphaParams from_sigma1(double sigma1);

    double alpha() const noexcept { return alpha_; }
    double delta() const noexcept { return std::numbers::sqrt2 - alpha_; }
    double sigma1() const noexcept { return delta() / std::numbers::sqrt2; }
    /// Y_alpha has a finite second moment (delta < 1).
    bool sq_integrable() const noexcept { return delta() < 1.0; }

private:
    double alpha_;
};

enum class Centering { kpp, rem, none };

/// sqrt2 t - 3/(2 sqrt2) log t. Throws DomainError for t <= 0.
double centering_kpp(double t);
/// sqrt2 t - 1/(2 sqrt2) log t. Throws DomainError for t <= 0.
double centering_rem(double t);

/// Sum of (sqrt2 t - x) exp(-sqrt2 (sqrt2 t - x)). Signed; scaled by the
/// largest exponent before summation.
double derivative_martingale(const ParticleSnapshot& s);

/// log of Y_alpha(t) = sum exp(-t (1 + delta^2/2) + delta x).
double log_mckean_martingale(const ParticleSnapshot& s, const AlphaParams& p);
double mckean_martingale(const ParticleSnapshot& s, const AlphaParams& p);

/// sum exp(-t (1 + sigma1^2) + sqrt2 sigma1 x); same value, bit for bit, as
/// mckean_martingale at the matched alpha. Throws DomainError unless 0 < sigma1 < 1.
double mckean_martingale_sigma(const ParticleSnapshot& s, double sigma1);

/// #{k : x_k >= delta t}.
std::uint64_t high_point_count(const ParticleSnapshot& s, const AlphaParams& p);

struct LocalizedCounts {
    std::uint64_t z_le = 0;  // high points whose lineage stayed below the barrier
    std::uint64_t z_gt = 0;  // high points whose lineage crossed it
};

/// Throws ConfigError if the snapshot carries no barrier flags.
LocalizedCounts localized_counts(const ParticleSnapshot& s, const AlphaParams& p);

double max_position(const ParticleSnapshot& s);
double recentered_max(const ParticleSnapshot& s, Centering centering);

// Functionals of one run, one entry per checkpoint. Per-alpha series are
// indexed [alpha][checkpoint].
struct MartingaleTrace {
    std::vector<double> alphas;
    std::vector<double> times;
    std::vector<std::uint64_t> n;
    std::vector<double> max;
    std::vector<double> derivative;
    std::vector<std::vector<double>> mckean;
    std::vector<std::vector<std::uint64_t>> count;
    std::vector<std::vector<std::uint64_t>> count_le;
    std::vector<std::vector<std::uint64_t>> count_gt;
    std::vector<double> max_kpp;  // NaN at t = 0
    std::vector<double> max_rem;  // NaN at t = 0
};

/// Without barrier flags the barrier is treated as unreachable (count_gt = 0).
MartingaleTrace make_trace(const std::vector<ParticleSnapshot>& snapshots, const std::vector<AlphaParams>& alphas);

/// `time,n,max,z_derivative,y_alpha_<a>,count_<a>,count_le_<a>,count_gt_<a>,...,max_kpp,max_rem`
void write_trace_csv(std::ostream& out, const MartingaleTrace& trace);

}  // namespace bbm
