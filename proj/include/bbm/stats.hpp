#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace bbm {

// Welford accumulator; merge() uses the Chan et al. pairwise update.
class RunningStats {
public:
    void push(double x) noexcept;
    void merge(const RunningStats& other) noexcept;

    std::size_t count() const noexcept { return n_; }
    double mean() const noexcept { return n_ ? mean_ : std::numeric_limits<double>::quiet_NaN(); }
    /// Unbiased sample variance.
    double variance() const noexcept;
    double standard_error() const noexcept;

private:
    std::size_t n_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

/// Linear-interpolation quantile of a sample (Hyndman-Fan type 7), q in [0, 1].
double quantile(std::vector<double> values, double q);
double median(std::vector<double> values);

/// Pearson correlation coefficient.
double pearson(std::span<const double> x, std::span<const double> y);

struct LinearFit {
    double intercept = 0.0;
    double slope = 0.0;
};
LinearFit least_squares(std::span<const double> x, std::span<const double> y);

/// Pearson chi-square statistic of observed vs expected bin counts.
double chi_square_statistic(std::span<const double> observed, std::span<const double> expected);
/// Upper tail of the chi-square distribution with k degrees of freedom.
double chi_square_survival(double statistic, double dof);

}  // namespace bbm
