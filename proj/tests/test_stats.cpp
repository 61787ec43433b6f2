#include <doctest.h>

#include <cmath>
#include <vector>

#include "bbm/rng.hpp"
#include "bbm/stats.hpp"

using namespace bbm;

TEST_CASE("running stats match two-pass formulas") {
    const std::vector<double> x{1.5, -2.0, 3.25, 8.0, 0.0, 4.5};
    RunningStats s;
    for (double v : x) s.push(v);
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= x.size();
    double ss = 0.0;
    for (double v : x) ss += (v - mean) * (v - mean);
    CHECK(s.count() == x.size());
    CHECK(s.mean() == doctest::Approx(mean).epsilon(1e-14));
    CHECK(s.variance() == doctest::Approx(ss / (x.size() - 1)).epsilon(1e-14));
    CHECK(s.standard_error() == doctest::Approx(std::sqrt(ss / (x.size() - 1) / x.size())).epsilon(1e-14));
}

TEST_CASE("merging running stats equals pushing everything") {
    CounterRng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        RunningStats all, a, b;
        const int na = static_cast<int>(rng.uniform() * 40), nb = static_cast<int>(rng.uniform() * 40);
        for (int i = 0; i < na + nb; ++i) {
            const double v = rng.normal() * 3 + 1;
            all.push(v);
            (i < na ? a : b).push(v);
        }
        a.merge(b);
        CHECK(a.count() == all.count());
        if (all.count() > 0) CHECK(a.mean() == doctest::Approx(all.mean()).epsilon(1e-12));
        if (all.count() > 1) CHECK(a.variance() == doctest::Approx(all.variance()).epsilon(1e-10));
    }
}

TEST_CASE("type-7 quantiles") {
    const std::vector<double> x{4, 1, 3, 2};
    CHECK(quantile(x, 0.0) == 1.0);
    CHECK(quantile(x, 1.0) == 4.0);
    CHECK(median(x) == 2.5);
    CHECK(quantile(x, 0.25) == doctest::Approx(1.75));
    CHECK(quantile({7.0}, 0.3) == 7.0);
}

TEST_CASE("pearson and least squares") {
    const std::vector<double> x{0, 1, 2, 3, 4};
    std::vector<double> y;
    for (double v : x) y.push_back(2.0 - 0.5 * v);
    CHECK(pearson(x, y) == doctest::Approx(-1.0));
    const auto fit = least_squares(x, y);
    CHECK(fit.slope == doctest::Approx(-0.5));
    CHECK(fit.intercept == doctest::Approx(2.0));
}

TEST_CASE("chi-square survival against closed forms") {
    for (double x : {0.1, 0.5, 3.0, 30.0, 60.0}) {
        CHECK(chi_square_survival(x, 1.0) == doctest::Approx(std::erfc(std::sqrt(x / 2))).epsilon(1e-12));
        CHECK(chi_square_survival(x, 2.0) == doctest::Approx(std::exp(-x / 2)).epsilon(1e-12));
        CHECK(chi_square_survival(x, 4.0) == doctest::Approx(std::exp(-x / 2) * (1 + x / 2)).epsilon(1e-12));
    }
    CHECK(chi_square_statistic(std::vector<double>{10, 20}, std::vector<double>{15, 15}) == doctest::Approx(10.0 / 3));
}
