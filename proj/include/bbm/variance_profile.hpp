#pragma once

#include <limits>
#include <string>
#include <vector>

namespace bbm {

// Piecewise-constant diffusion rate sigma^2(s). Interval i is
// [breakpoints[i], breakpoints[i+1]) with rate sigma_sq[i]; the last entry of
// breakpoints is the end of coverage and may be +infinity.
class VarianceProfile {
public:
    static constexpr double kForever = std::numeric_limits<double>::infinity();

    /// Throws ConfigError on invalid input.
    VarianceProfile(std::vector<double> breakpoints, std::vector<double> sigma_sq);

    /// Standard BBM: rate 1 forever.
    static VarianceProfile homogeneous();

    /// Rate sigma1^2 on [0, switch_time), sigma2^2 afterwards.
    static VarianceProfile two_phase(double sigma1, double sigma2, double switch_time);

    /// Two phases switching at horizon / 2 with sigma1^2/2 + sigma2^2/2 = 1.
    static VarianceProfile normalized_two_phase(double sigma1, double horizon);

    const std::vector<double>& breakpoints() const noexcept { return breakpoints_; }
    const std::vector<double>& sigma_sq() const noexcept { return sigma_sq_; }
    std::size_t intervals() const noexcept { return sigma_sq_.size(); }

    double end() const noexcept { return breakpoints_.back(); }
    bool covers(double horizon) const noexcept { return horizon <= end(); }

    /// Rate at time s, right-continuous at breakpoints.
    double rate_at(double s) const;

    /// Integral of sigma^2 over [a, b].
    double integrated(double a, double b) const;

    /// Integral over [0, t] equals t to within 1e-12 relative.
    bool is_normalized(double t) const;

    /// Compact single-line description used in file headers.
    std::string describe() const;

private:
    std::vector<double> breakpoints_;
    std::vector<double> sigma_sq_;
};

}  // namespace bbm
