#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "bbm/functionals.hpp"
#include "bbm/process.hpp"
#include "bbm/rng.hpp"

using namespace bbm;

namespace {

constexpr double kSqrt2 = std::numbers::sqrt2;
constexpr double kE = std::numbers::e;

ParticleSnapshot snap(double t, std::vector<double> xs) {
    ParticleSnapshot s;
    s.time = t;
    s.positions = std::move(xs);
    return s;
}

// Random snapshot for property checks: n particles spread around sqrt2 t.
ParticleSnapshot random_snapshot(CounterRng& rng) {
    const double t = 0.1 + 12.0 * rng.uniform();
    const auto n = 1 + static_cast<std::size_t>(rng.uniform() * 300);
    std::vector<double> xs;
    for (std::size_t i = 0; i < n; ++i) xs.push_back(kSqrt2 * t * rng.uniform() + 2.0 * rng.normal());
    return snap(t, xs);
}

}  // namespace

TEST_CASE("alpha parameters") {
    const AlphaParams p(1.0);
    CHECK(p.delta() == doctest::Approx(0.4142136));
    CHECK(p.sigma1() == doctest::Approx(0.2928932));
    CHECK(p.sq_integrable());
    CHECK_FALSE(AlphaParams(0.3).sq_integrable());
    CHECK_THROWS_AS(AlphaParams{0.0}, DomainError);
    CHECK_THROWS_AS(AlphaParams{kSqrt2}, DomainError);
    CHECK_THROWS_AS(AlphaParams::from_sigma1(1.0), DomainError);
    CHECK(AlphaParams::from_sigma1(0.25).alpha() == doctest::Approx(kSqrt2 * 0.75));
}

// Reference values below were evaluated independently at 30 significant digits.

TEST_CASE("centerings") {
    CHECK(centering_kpp(1.0) == doctest::Approx(kSqrt2).epsilon(1e-15));
    CHECK(std::abs(centering_kpp(100.0) - 136.536835636764064) < 1e-12);
    CHECK(std::abs(centering_kpp(kE) - 2.78357085637929554) < 1e-14);
    CHECK(centering_rem(1.0) == doctest::Approx(kSqrt2).epsilon(1e-15));
    CHECK(std::abs(centering_rem(100.0) - 139.793182703794358) < 1e-12);
    CHECK(std::abs(centering_rem(kE) - 3.49067763756584306) < 1e-14);
    CHECK_THROWS_AS(centering_kpp(0.0), DomainError);
    CHECK_THROWS_AS(centering_rem(-1.0), DomainError);
}

TEST_CASE("derivative martingale") {
    CHECK(derivative_martingale(snap(0.0, {0.0})) == 0.0);
    CHECK(derivative_martingale(snap(3.0, {kSqrt2 * 3.0})) == 0.0);
    CHECK(std::abs(derivative_martingale(snap(1.0, {0.0, kSqrt2})) - 0.191392993020821848) < 1e-15);
    // Particles above sqrt2 t contribute negative terms.
    CHECK(derivative_martingale(snap(1.0, {3.0})) < 0.0);
}

TEST_CASE("McKean martingale") {
    CHECK(mckean_martingale(snap(0.0, {0.0}), AlphaParams(0.7)) == 1.0);
    CHECK(std::abs(mckean_martingale(snap(1.0, {2.0}), AlphaParams(1.0)) - 0.773090382521869108) < 1e-15);
    CHECK(mckean_martingale_sigma(snap(0.0, {0.0}), 0.3) == 1.0);
    CHECK(std::abs(mckean_martingale_sigma(snap(1.0, {kSqrt2}), 0.5) - 0.778800783071404868) < 1e-15);
    CHECK_THROWS_AS(mckean_martingale_sigma(snap(1.0, {0.0}), 1.0), DomainError);

    // At t=15 individual terms underflow while the sum is O(1).
    std::vector<double> xs(1000000, -40.0);
    xs.push_back(centering_kpp(15.0));
    const auto big = snap(15.0, xs);
    CHECK(std::isfinite(mckean_martingale(big, AlphaParams(1.0))));
    const double d = kSqrt2 - 1.0;
    const double drift = -15.0 * (1.0 + 0.5 * d * d);
    const double lead = drift + d * centering_kpp(15.0);
    const double rest = drift + d * -40.0 + std::log(1e6);
    const double expect = std::max(lead, rest) + std::log1p(std::exp(-std::abs(lead - rest)));
    CHECK(log_mckean_martingale(big, AlphaParams(1.0)) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("property: sigma and alpha parametrizations agree bit for bit") {
    CounterRng rng(101);
    for (int i = 0; i < 200; ++i) {
        const auto s = random_snapshot(rng);
        const double sigma1 = 0.01 + 0.98 * rng.uniform();
        const AlphaParams matched(kSqrt2 * (1.0 - sigma1));
        CHECK(mckean_martingale_sigma(s, sigma1) == mckean_martingale(s, matched));
    }
}

TEST_CASE("high-point counts") {
    CHECK(high_point_count(snap(0.0, {0.0}), AlphaParams(1.0)) == 1);
    CHECK(high_point_count(snap(2.0, {1.0, 0.5, -0.3}), AlphaParams(1.0)) == 1);
    // The threshold is inclusive.
    CHECK(high_point_count(snap(2.0, {2.0 * AlphaParams(1.0).delta()}), AlphaParams(1.0)) == 1);
}

TEST_CASE("property: counts are non-decreasing in alpha and localized counts add up") {
    CounterRng rng(202);
    for (int i = 0; i < 200; ++i) {
        auto s = random_snapshot(rng);
        // Larger alpha lowers the threshold (sqrt2 - alpha) t.
        std::uint64_t prev = 0;
        for (double a = 0.05; a < 1.41; a += 0.05) {
            const auto c = high_point_count(s, AlphaParams(a));
            CHECK(c >= prev);
            prev = c;
        }
        CHECK_THROWS_AS(localized_counts(s, AlphaParams(1.0)), ConfigError);
        std::vector<std::uint8_t> flags;
        for (std::size_t k = 0; k < s.size(); ++k) flags.push_back(rng.uniform() < 0.4);
        s.barrier_exceeded = flags;
        const AlphaParams p(0.2 + rng.uniform());
        const auto lc = localized_counts(s, p);
        CHECK(lc.z_le + lc.z_gt == high_point_count(s, p));
    }
}

TEST_CASE("recentered maximum") {
    CHECK(recentered_max(snap(0.0, {0.0}), Centering::none) == 0.0);
    CHECK(std::abs(recentered_max(snap(kE, {1.0, 2.0, 3.0}), Centering::kpp) - 0.216429143620704462) < 1e-14);
    CounterRng rng(303);
    for (int i = 0; i < 50; ++i) {
        const auto s = random_snapshot(rng);
        CHECK(recentered_max(s, Centering::none) ==
              doctest::Approx(recentered_max(s, Centering::kpp) + centering_kpp(s.time)).epsilon(1e-13));
        CHECK(recentered_max(s, Centering::none) ==
              doctest::Approx(recentered_max(s, Centering::rem) + centering_rem(s.time)).epsilon(1e-13));
    }
}

TEST_CASE("martingale trace") {
    SimConfig c;
    c.horizon = 4.0;
    c.checkpoints = {0.0, 1.0, 2.0, 3.0};
    c.seed = 8;
    c.barrier = BarrierSpec{1.0, 0.6};
    const auto snaps = simulate(c, VarianceProfile::homogeneous());
    const auto trace = make_trace(snaps, {AlphaParams(0.8), AlphaParams(1.2)});
    REQUIRE(trace.times.size() == 5);
    CHECK(std::isnan(trace.max_kpp[0]));
    for (std::size_t i = 0; i < trace.times.size(); ++i) {
        CHECK(trace.n[i] == snaps[i].size());
        for (std::size_t a = 0; a < 2; ++a) CHECK(trace.count[a][i] == trace.count_le[a][i] + trace.count_gt[a][i]);
    }
    std::ostringstream out;
    write_trace_csv(out, trace);
    const std::string text = out.str();
    CHECK(text.substr(0, text.find('\n')) ==
          "time,n,max,z_derivative,y_alpha_0.8,count_0.8,count_le_0.8,count_gt_0.8,"
          "y_alpha_1.2,count_1.2,count_le_1.2,count_gt_1.2,max_kpp,max_rem");
    CHECK(std::count(text.begin(), text.end(), '\n') == 6);
}
