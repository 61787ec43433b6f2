#include <doctest.h>

#include <cmath>

#include "bbm/experiments.hpp"
#include "bbm/report_io.hpp"
#include "bbm/stats.hpp"

using namespace bbm;

namespace {

ExperimentConfig small(const std::string& name, std::vector<double> t, std::vector<double> r, std::uint64_t replicas) {
    ExperimentConfig c;
    c.name = name;
    c.times = std::move(t);
    c.r_values = std::move(r);
    c.replicas = replicas;
    c.seed = 5;
    c.parallelism = 3;
    return c;
}

}  // namespace

TEST_CASE("labels") {
    CHECK(label("rho", {{"a", 1.0}, {"t", 14.0}}) == "rho[a=1;t=14]");
    CHECK(label("x", {}) == "x");
}

TEST_CASE("config validation") {
    CHECK_THROWS_AS(run_experiment(small("slln", {5}, {5}, 2)), ConfigError);
    CHECK_THROWS_AS(run_experiment(small("slln", {5}, {1, 2}, 2)), ConfigError);
    CHECK_THROWS_AS(run_experiment(small("slln", {5}, {2}, 0)), ConfigError);
    CHECK_THROWS_AS(run_experiment(small("decorrelation", {8}, {3, 2}, 2)), ConfigError);
    CHECK_THROWS_AS(run_experiment(small("localization", {8}, {0}, 2)), ConfigError);
    auto c = small("pair-count", {8}, {2}, 2);
    c.eps = 0.5;
    CHECK_THROWS_AS(run_experiment(c), ConfigError);
    c = small("onset", {8}, {2}, 2);
    c.alphas = {1.5};
    CHECK_THROWS_AS(run_experiment(c), ConfigError);
    CHECK_THROWS_AS(run_experiment(small("trace", {}, {}, 2)), ConfigError);
    CHECK_THROWS_AS(run_experiment(small("nonsense", {5}, {1}, 2)), ConfigError);
}

TEST_CASE("aggregates are recomputed from rows") {
    const auto rep = run_experiment(small("slln", {5}, {2}, 40));
    REQUIRE(rep.rows.size() == 40);
    for (std::size_t i = 0; i < rep.rows.size(); ++i) CHECK(rep.rows[i].replica_id == i);
    const auto col = rep.column(label("y_t", {{"a", 1}, {"t", 5}}));
    RunningStats s;
    for (double v : col) s.push(v);
    const auto& agg = rep.aggregate(label("y_t", {{"a", 1}, {"t", 5}}));
    CHECK(agg.count == 40);
    CHECK(agg.mean == doctest::Approx(s.mean()).epsilon(1e-14));
    CHECK(agg.variance == doctest::Approx(s.variance()).epsilon(1e-12));
    CHECK(agg.quantiles[2] == median(col));
    CHECK(rep.summary_value(label("median_rho", {{"a", 1}, {"t", 5}})) ==
          median(rep.column(label("rho", {{"a", 1}, {"t", 5}}))));
}

TEST_CASE("results do not depend on the worker count") {
    auto c = small("decorrelation", {6}, {1, 2, 3}, 12);
    c.parallelism = 1;
    const auto a = report_to_json(run_experiment(c));
    c.parallelism = 5;
    CHECK(report_to_json(run_experiment(c)) == a);
}

TEST_CASE("merge") {
    auto whole = small("slln", {5}, {2}, 100);
    auto first = whole, second = whole;
    first.replicas = 50;
    second.replicas = 50;
    second.first_replica = 50;
    const auto full = run_experiment(whole);
    const auto a = run_experiment(first);
    const auto b = run_experiment(second);
    CHECK(report_to_json(merge({a, b})) == report_to_json(full));
    CHECK(report_to_json(merge({b, a})) == report_to_json(full));
    CHECK(report_to_json(merge({a})) == report_to_json(a));
    CHECK_THROWS_AS(merge({a, a}), ConfigError);
    auto other = second;
    other.seed = 6;
    CHECK_THROWS_AS(merge({a, run_experiment(other)}), ConfigError);
    CHECK_THROWS_AS(merge({}), ConfigError);
}

TEST_CASE("failed replicas are counted and excluded") {
    auto c = small("slln", {9}, {2}, 30);
    c.max_particles = 3000;  // E n(9) is about 8100
    const auto rep = run_experiment(c);
    CHECK(rep.failed_replicas.size() > 0);
    CHECK(rep.rows.size() > 0);
    CHECK(rep.rows.size() + rep.failed_replicas.size() == 30);
    CHECK(rep.aggregates.front().count == rep.rows.size());
    for (auto id : rep.failed_replicas) {
        for (const auto& row : rep.rows) CHECK(row.replica_id != id);
    }
}

TEST_CASE("onset with r=0 is exact") {
    const auto rep = run_experiment(small("onset", {10, 50}, {0}, 5));
    for (double t : {10.0, 50.0}) {
        for (double v : rep.column(label("R", {{"a", 1}, {"t", t}, {"r", 0}}))) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("localization with an unreachable barrier") {
    auto c = small("localization", {6}, {2, 4}, 10);
    c.eps = 1e6;
    const auto rep = run_experiment(c);
    for (double r : {2.0, 4.0}) {
        for (double v : rep.column(label("z_gt_over_ez", {{"a", 1}, {"r", r}}))) CHECK(v == 0.0);
        const auto le = rep.column(label("z_le_over_ez", {{"a", 1}, {"r", r}}));
        const auto all = rep.column(label("z_over_ez", {{"a", 1}, {"r", r}}));
        CHECK(le == all);
    }
}

TEST_CASE("localization counts shrink as the barrier starts later") {
    auto c = small("localization", {7}, {1, 3, 5}, 20);
    const auto rep = run_experiment(c);
    const auto g1 = rep.column(label("z_gt_over_ez", {{"a", 1}, {"r", 1}}));
    const auto g3 = rep.column(label("z_gt_over_ez", {{"a", 1}, {"r", 3}}));
    const auto g5 = rep.column(label("z_gt_over_ez", {{"a", 1}, {"r", 5}}));
    for (std::size_t i = 0; i < g1.size(); ++i) {
        CHECK(g3[i] <= g1[i]);
        CHECK(g5[i] <= g3[i]);
    }
}

TEST_CASE("pair counts") {
    const auto rep = run_experiment(small("pair-count", {7}, {2, 4}, 20));
    const auto p2 = rep.column(label("pairs", {{"a", 1}, {"r", 2}}));
    const auto p4 = rep.column(label("pairs", {{"a", 1}, {"r", 4}}));
    const auto z4 = rep.column(label("z_le", {{"a", 1}, {"r", 4}}));
    for (std::size_t i = 0; i < p2.size(); ++i) {
        CHECK(p4[i] <= z4[i] * (z4[i] - 1) / 2);
        CHECK(p2[i] >= 0.0);
    }
    CHECK(rep.summary_value(label("bound_pairs", {{"a", 1}, {"r", 2}})) >
          rep.summary_value(label("bound_pairs", {{"a", 1}, {"r", 4}})));
}

TEST_CASE("two-speed maxima") {
    auto c = small("rem-collapse", {5, 7}, {}, 30);
    c.sigma1 = 0.6;
    const auto rep = run_experiment(c);
    CHECK(rep.summary_value("sigma2") == doctest::Approx(std::sqrt(2 - 0.36)));
    CHECK(rep.summary_value(label("gap", {{"t", 7}})) > 0.0);

    // Equal speeds: the recentered maximum stays in a fixed band. A 400-replica
    // pilot (seed 5) puts the median near -1.5 at t=8 and t=11.
    auto h = small("rem-collapse", {8, 11, 14}, {}, 40);
    h.sigma1 = 1.0;
    const auto hom = run_experiment(h);
    double lo = INFINITY, hi = -INFINITY;
    for (double t : {8.0, 11.0, 14.0}) {
        const double m = hom.summary_value(label("median_forward_minus_m_kpp", {{"t", t}}));
        lo = std::min(lo, m);
        hi = std::max(hi, m);
        CHECK(hom.summary_value(label("gap", {{"t", t}})) == 0.0);
    }
    CHECK(lo > -2.5);
    CHECK(hi < -0.5);
    CHECK(hi - lo < 0.5);
}

TEST_CASE("martingale trace increments are centred") {
    ExperimentConfig c;
    c.name = "trace";
    c.checkpoints = {0, 2, 4, 6};
    c.alphas = {1.0};
    c.replicas = 1000;
    c.seed = 9;
    c.parallelism = 2;
    const auto run = run_martingale_trace(c);
    CHECK(run.traces.size() == 1000);
    RunningStats y6, dy;
    for (double v : run.report.column(label("y", {{"a", 1}, {"t", 6}}))) y6.push(v);
    for (double v : run.report.column(label("dy", {{"a", 1}, {"from", 4}, {"to", 6}}))) dy.push(v);
    CHECK(std::abs(y6.mean() - 1.0) < 4 * y6.standard_error());
    CHECK(std::abs(dy.mean()) < 4 * dy.standard_error());
}

TEST_CASE("json report layout") {
    const auto rep = run_experiment(small("decorrelation", {6}, {1, 2}, 8));
    const auto json = report_to_json(rep);
    for (const char* key : {"\"experiment\"", "\"config\"", "\"columns\"", "\"rows\"", "\"aggregates\"", "\"summary\"",
                            "\"decay_fit\"", "\"failures\"", "\"seed\"", "\"wallclock\": null"})
        CHECK(json.find(key) != std::string::npos);
    CHECK(json.find("parallelism") == std::string::npos);
    const auto csv = rows_to_csv(rep);
    CHECK(csv.substr(0, csv.find('\n')) == "replica_id,D[a=1;r=1],D[a=1;r=2]");
}
