#include "bbm/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <numbers>
#include <set>
#include <thread>

#include "bbm/rng.hpp"
#include "bbm/stats.hpp"

namespace bbm {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr std::array<double, 3> kDeviationLevels = {0.25, 0.5, 1.0};
constexpr double kExceedanceLevel = 0.5;
constexpr int kBootstrapResamples = 1000;
constexpr std::uint32_t kDomainBootstrap = 0x424f4f54u;  // "BOOT"

using RowFn = std::function<std::vector<double>(std::uint64_t)>;

std::vector<double> sorted_unique(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

double max_of(const std::vector<double>& v) { return *std::max_element(v.begin(), v.end()); }
double min_of(const std::vector<double>& v) { return *std::min_element(v.begin(), v.end()); }

std::vector<AlphaParams> alpha_params(const ExperimentConfig& cfg) {
    std::vector<AlphaParams> out;
    for (double a : cfg.alphas) out.emplace_back(a);
    return out;
}

SimConfig sim_config(const ExperimentConfig& cfg, std::uint64_t replica, double horizon,
                     std::vector<double> checkpoints) {
    SimConfig sc;
    sc.horizon = horizon;
    sc.checkpoints = std::move(checkpoints);
    sc.seed = cfg.seed;
    sc.replica_id = replica;
    sc.max_particles = cfg.max_particles;
    return sc;
}

const ParticleSnapshot& at_time(const std::vector<ParticleSnapshot>& snaps, double time) {
    for (const auto& s : snaps) {
        if (s.time == time) return s;
    }
    throw ConfigError("internal: no snapshot at requested time");
}

// Runs fn for every replica on a pool of workers. Rows land in slots indexed
// by replica, so the outcome is independent of scheduling.
void run_rows(const ExperimentConfig& cfg, AggregateReport& report, const RowFn& fn) {
    const auto start = std::chrono::steady_clock::now();
    const std::uint64_t n = cfg.replicas;
    std::vector<std::optional<std::vector<double>>> slots(n);
    std::vector<std::uint8_t> failed(n, 0);
    std::atomic<std::uint64_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;

    auto worker = [&] {
        while (true) {
            const std::uint64_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                slots[i] = fn(cfg.first_replica + i);
            } catch (const PopulationCapError&) {
                failed[i] = 1;
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                next.store(n);
            }
        }
    };
    const unsigned workers = static_cast<unsigned>(std::min<std::uint64_t>(std::max(1u, cfg.parallelism), n));
    std::vector<std::thread> pool;
    for (unsigned w = 1; w < workers; ++w) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);

    for (std::uint64_t i = 0; i < n; ++i) {
        if (failed[i]) report.failed_replicas.push_back(cfg.first_replica + i);
        else report.rows.push_back({cfg.first_replica + i, std::move(*slots[i])});
    }
    report.wallclock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

AggregateReport new_report(const ExperimentConfig& cfg, std::string experiment) {
    AggregateReport report;
    report.experiment = std::move(experiment);
    report.config = cfg;
    report.config.name = report.experiment;
    return report;
}

// ---- per-experiment summaries (pure functions of config + rows) ----

void summarize_slln(AggregateReport& rep) {
    const auto& cfg = rep.config;
    for (double a : cfg.alphas) {
        for (double t : cfg.times) {
            const auto rho = rep.column(label("rho", {{"a", a}, {"t", t}}));
            const auto z = rep.column(label("z_over_ez", {{"a", a}, {"t", t}}));
            const auto yr = rep.column(label("y_r", {{"a", a}, {"t", t}}));
            rep.summary.emplace_back(label("median_rho", {{"a", a}, {"t", t}}), median(rho));
            rep.summary.emplace_back(label("iqr_rho", {{"a", a}, {"t", t}}), quantile(rho, 0.75) - quantile(rho, 0.25));
            rep.summary.emplace_back(label("median_z_over_ez", {{"a", a}, {"t", t}}), median(z));
            rep.summary.emplace_back(label("corr_z_y_r", {{"a", a}, {"t", t}}), pearson(z, yr));
        }
    }
}

void summarize_onset(AggregateReport& rep) {
    const auto& cfg = rep.config;
    for (double a : cfg.alphas) {
        for (double r : cfg.r_values) {
            for (double t : cfg.times) {
                auto ratio = rep.column(label("R", {{"a", a}, {"t", t}, {"r", r}}));
                for (double& v : ratio) v = std::abs(v - 1.0);
                rep.summary.emplace_back(label("median_abs_R_minus_1", {{"a", a}, {"t", t}, {"r", r}}),
                                         median(ratio));
            }
        }
    }
}

void summarize_decorrelation(AggregateReport& rep) {
    const auto& cfg = rep.config;
    const auto r_grid = sorted_unique(cfg.r_values);
    for (double a : cfg.alphas) {
        std::vector<std::vector<double>> deviations;
        std::vector<double> variances;
        for (double r : r_grid) {
            deviations.push_back(rep.column(label("D", {{"a", a}, {"r", r}})));
            RunningStats st;
            for (double d : deviations.back()) st.push(d);
            variances.push_back(st.variance());
            rep.summary.emplace_back(label("var_D", {{"a", a}, {"r", r}}), st.variance());
            for (double c : kDeviationLevels) {
                const auto& dev = deviations.back();
                const double hits = static_cast<double>(
                    std::count_if(dev.begin(), dev.end(), [c](double d) { return std::abs(d) > c; }));
                rep.summary.emplace_back(label("prob_abs_D_gt", {{"a", a}, {"r", r}, {"c", c}}),
                                         dev.empty() ? kNaN : hits / static_cast<double>(dev.size()));
            }
        }
        const AlphaParams params(a);
        DecayFit fit;
        fit.r_values = r_grid;
        fit.estimates = variances;
        fit.admissible_upper = 1.0 - 0.5 * params.delta() * params.delta();
        const bool fittable = r_grid.size() >= 2 && rep.rows.size() >= 2 &&
                              std::all_of(variances.begin(), variances.end(), [](double v) { return v > 0.0; });
        if (fittable) {
            fit.fitted_rate = fit_decay_rate(r_grid, variances);
            // Percentile bootstrap over replicas; resample b draws from its own
            // stream so the interval is a function of (seed, rows) only.
            std::vector<double> rates;
            const std::size_t n = rep.rows.size();
            for (int b = 0; b < kBootstrapResamples; ++b) {
                CounterRng rng(derive_key(cfg.seed, static_cast<std::uint64_t>(b), kDomainBootstrap));
                std::vector<std::size_t> pick(n);
                for (auto& p : pick) p = static_cast<std::size_t>(rng.uniform() * static_cast<double>(n));
                std::vector<double> boot;
                for (const auto& dev : deviations) {
                    RunningStats st;
                    for (std::size_t p : pick) st.push(dev[p]);
                    boot.push_back(st.variance());
                }
                if (std::all_of(boot.begin(), boot.end(), [](double v) { return v > 0.0; }))
                    rates.push_back(fit_decay_rate(r_grid, boot));
            }
            fit.ci_low = quantile(rates, 0.025);
            fit.ci_high = quantile(rates, 0.975);
        } else {
            fit.fitted_rate = fit.ci_low = fit.ci_high = kNaN;
        }
        rep.summary.emplace_back(label("kappa_hat", {{"a", a}}), fit.fitted_rate);
        rep.summary.emplace_back(label("kappa_ci_low", {{"a", a}}), fit.ci_low);
        rep.summary.emplace_back(label("kappa_ci_high", {{"a", a}}), fit.ci_high);
        rep.summary.emplace_back(label("kappa_admissible_upper", {{"a", a}}), fit.admissible_upper);
        rep.decay_fits.emplace_back(label("var_D", {{"a", a}}), std::move(fit));
    }
}

void summarize_localization(AggregateReport& rep) {
    const auto& cfg = rep.config;
    for (double a : cfg.alphas) {
        const AlphaParams params(a);
        const double eps = cfg.eps_for(params);
        const double t = cfg.times.front();
        for (double r : cfg.r_values) {
            const auto gt = rep.column(label("z_gt_over_ez", {{"a", a}, {"r", r}}));
            RunningStats st;
            for (double v : gt) st.push(v);
            const double bound = std::exp(log_localization_bound(params, eps, r, t) -
                                          log_expected_high_points_exact(params, t));
            const double exceed = static_cast<double>(
                std::count_if(gt.begin(), gt.end(), [](double v) { return v >= kExceedanceLevel; }));
            rep.summary.emplace_back(label("mean_gt_ratio", {{"a", a}, {"r", r}}), st.mean());
            rep.summary.emplace_back(label("se_gt_ratio", {{"a", a}, {"r", r}}), st.standard_error());
            rep.summary.emplace_back(label("bound_gt_ratio", {{"a", a}, {"r", r}}), bound);
            rep.summary.emplace_back(label("prob_gt_exceeds", {{"a", a}, {"r", r}, {"c", kExceedanceLevel}}),
                                     gt.empty() ? kNaN : exceed / static_cast<double>(gt.size()));
            rep.summary.emplace_back(label("prob_gt_bound", {{"a", a}, {"r", r}, {"c", kExceedanceLevel}}),
                                     bound / kExceedanceLevel);
        }
        rep.summary.emplace_back(label("eps", {{"a", a}}), eps);
    }
}

void summarize_pair_count(AggregateReport& rep) {
    const auto& cfg = rep.config;
    for (double a : cfg.alphas) {
        const AlphaParams params(a);
        const double eps = cfg.eps_for(params);
        const double t = cfg.times.front();
        const double log_ez = log_expected_high_points_exact(params, t);
        for (double r : cfg.r_values) {
            const auto pairs = rep.column(label("pairs", {{"a", a}, {"r", r}}));
            RunningStats st;
            for (double v : pairs) st.push(v);
            const double log_bound = log_pair_count_bound({params, eps, r, t});
            rep.summary.emplace_back(label("mean_pairs", {{"a", a}, {"r", r}}), st.mean());
            rep.summary.emplace_back(label("se_pairs", {{"a", a}, {"r", r}}), st.standard_error());
            rep.summary.emplace_back(label("bound_pairs", {{"a", a}, {"r", r}}), std::exp(log_bound));
            rep.summary.emplace_back(label("mean_pairs_normalized", {{"a", a}, {"r", r}}),
                                     st.mean() / std::exp(2.0 * log_ez));
            rep.summary.emplace_back(label("bound_pairs_normalized", {{"a", a}, {"r", r}}),
                                     std::exp(log_bound - 2.0 * log_ez));
        }
        rep.summary.emplace_back(label("eps", {{"a", a}}), eps);
    }
}

void summarize_rem(AggregateReport& rep) {
    const auto& cfg = rep.config;
    const double s1 = cfg.sigma1;
    const double s2 = std::sqrt(2.0 - s1 * s1);
    std::vector<double> ts, med_fwd, med_swp;
    for (double t : cfg.times) {
        const double mf = median(rep.column(label("max_forward", {{"t", t}})));
        const double ms = median(rep.column(label("max_swapped", {{"t", t}})));
        ts.push_back(t);
        med_fwd.push_back(mf);
        med_swp.push_back(ms);
        rep.summary.emplace_back(label("median_max_forward", {{"t", t}}), mf);
        rep.summary.emplace_back(label("median_max_swapped", {{"t", t}}), ms);
        rep.summary.emplace_back(label("gap", {{"t", t}}), mf - ms);
        rep.summary.emplace_back(label("median_forward_minus_m_kpp", {{"t", t}}), mf - centering_kpp(t));
        rep.summary.emplace_back(label("median_forward_minus_m_rem", {{"t", t}}), mf - centering_rem(t));
        rep.summary.emplace_back(label("median_swapped_minus_m_kpp", {{"t", t}}), ms - centering_kpp(t));
    }
    const double rem_slope = std::numbers::sqrt2;
    const double superposed_slope = std::numbers::sqrt2 * (s1 + s2) / 2.0;
    rep.summary.emplace_back("sigma2", s2);
    if (ts.size() >= 2) {
        rep.summary.emplace_back("slope_forward", least_squares(ts, med_fwd).slope);
        rep.summary.emplace_back("slope_swapped", least_squares(ts, med_swp).slope);
    }
    // The ordering with the smaller first-phase variance collapses to the REM level.
    rep.summary.emplace_back("slope_target_forward", s1 < s2 ? rem_slope : superposed_slope);
    rep.summary.emplace_back("slope_target_swapped", s1 < s2 ? superposed_slope : rem_slope);
}

// ---- per-replica computations ----

void check_alphas(const ExperimentConfig& cfg) {
    if (cfg.alphas.empty()) throw ConfigError(cfg.name + ": at least one alpha is required");
    for (double a : cfg.alphas) {
        if (!(a > 0.0 && a < std::numbers::sqrt2)) throw ConfigError(cfg.name + ": every alpha must lie in (0, sqrt 2)");
    }
}

void check_eps(const ExperimentConfig& cfg) {
    if (!cfg.eps) return;
    if (!(*cfg.eps > 0.0) || !std::isfinite(*cfg.eps)) throw ConfigError(cfg.name + ": eps must be positive and finite");
}

}  // namespace

std::string label(const std::string& name, std::initializer_list<std::pair<const char*, double>> keys) {
    if (keys.size() == 0) return name;
    std::string out = name + "[";
    bool first = true;
    char buf[48];
    for (const auto& [k, v] : keys) {
        std::snprintf(buf, sizeof buf, "%s%s=%g", first ? "" : ";", k, v);
        out += buf;
        first = false;
    }
    return out + "]";
}

void ExperimentConfig::validate() const {
    if (replicas < 1) throw ConfigError("replicas must be >= 1");
    if (max_particles < 1) throw ConfigError("max_particles must be >= 1");
    for (double t : times) {
        if (!(t > 0.0) || !std::isfinite(t)) throw ConfigError(name + ": every t must be positive and finite");
    }
    for (double r : r_values) {
        if (!(r >= 0.0) || !std::isfinite(r)) throw ConfigError(name + ": every r must be finite and >= 0");
    }
    check_eps(*this);

    auto need_times = [&] {
        if (times.empty()) throw ConfigError(name + ": at least one t is required");
    };
    auto need_r = [&] {
        if (r_values.empty()) throw ConfigError(name + ": at least one r is required");
    };
    auto r_below_t = [&] {
        if (max_of(r_values) >= min_of(times)) throw ConfigError(name + ": every r must be < t");
    };

    if (name == "slln") {
        check_alphas(*this);
        need_times();
        need_r();
        if (r_values.size() != 1) throw ConfigError("slln: exactly one r is required");
        r_below_t();
    } else if (name == "onset") {
        check_alphas(*this);
        need_times();
        need_r();
        r_below_t();
    } else if (name == "decorrelation") {
        check_alphas(*this);
        need_times();
        need_r();
        if (times.size() != 1) throw ConfigError("decorrelation: exactly one t is required");
        for (std::size_t i = 1; i < r_values.size(); ++i) {
            if (!(r_values[i] > r_values[i - 1])) throw ConfigError("decorrelation: r-grid must be strictly increasing");
        }
        r_below_t();
    } else if (name == "localization" || name == "pair-count") {
        check_alphas(*this);
        need_times();
        need_r();
        if (times.size() != 1) throw ConfigError(name + ": exactly one t is required");
        r_below_t();
        for (double r : r_values) {
            if (!(r > 0.0)) throw ConfigError(name + ": barrier start r must be > 0");
        }
        if (name == "pair-count") {
            for (double a : alphas) {
                const AlphaParams p(a);
                if (!epsilon_admissible(p, eps_for(p)))
                    throw ConfigError("pair-count: eps violates the admissibility constraints");
            }
        }
    } else if (name == "rem-collapse") {
        need_times();
        if (!(sigma1 > 0.0 && sigma1 < std::numbers::sqrt2)) throw ConfigError("rem-collapse: sigma1 must lie in (0, sqrt 2)");
    } else if (name == "trace") {
        check_alphas(*this);
        if (checkpoints.size() < 4) throw ConfigError("trace: at least 4 checkpoints are required");
        for (double c : checkpoints) {
            if (!(c >= 0.0) || !std::isfinite(c)) throw ConfigError("trace: checkpoints must be finite and >= 0");
        }
    } else {
        throw ConfigError("unknown experiment '" + name + "'");
    }
}

std::size_t AggregateReport::column_index(const std::string& name) const {
    const auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end()) throw ConfigError("no column '" + name + "'");
    return static_cast<std::size_t>(it - columns.begin());
}

std::vector<double> AggregateReport::column(const std::string& name) const {
    const std::size_t c = column_index(name);
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& row : rows) out.push_back(row.values[c]);
    return out;
}

double AggregateReport::summary_value(const std::string& name) const {
    for (const auto& [k, v] : summary) {
        if (k == name) return v;
    }
    throw ConfigError("no summary entry '" + name + "'");
}

const Aggregate& AggregateReport::aggregate(const std::string& name) const { return aggregates[column_index(name)]; }

void finalize(AggregateReport& rep) {
    std::sort(rep.rows.begin(), rep.rows.end(),
              [](const ReplicaRow& a, const ReplicaRow& b) { return a.replica_id < b.replica_id; });
    std::sort(rep.failed_replicas.begin(), rep.failed_replicas.end());
    rep.aggregates.clear();
    rep.summary.clear();
    rep.decay_fits.clear();
    for (std::size_t c = 0; c < rep.columns.size(); ++c) {
        RunningStats st;
        std::vector<double> values;
        for (const auto& row : rep.rows) {
            if (std::isnan(row.values[c])) continue;
            st.push(row.values[c]);
            values.push_back(row.values[c]);
        }
        Aggregate agg;
        agg.count = st.count();
        agg.mean = st.mean();
        agg.variance = st.variance();
        agg.std_error = st.standard_error();
        std::sort(values.begin(), values.end());
        for (std::size_t q = 0; q < Aggregate::kLevels.size(); ++q)
            agg.quantiles[q] = quantile(values, Aggregate::kLevels[q]);
        rep.aggregates.push_back(agg);
    }
    if (rep.rows.empty()) return;
    const std::string& e = rep.experiment;
    if (e == "slln") summarize_slln(rep);
    else if (e == "onset") summarize_onset(rep);
    else if (e == "decorrelation") summarize_decorrelation(rep);
    else if (e == "localization") summarize_localization(rep);
    else if (e == "pair-count") summarize_pair_count(rep);
    else if (e == "rem-collapse") summarize_rem(rep);
}

AggregateReport run_slln(const ExperimentConfig& in) {
    ExperimentConfig cfg = in;
    cfg.name = "slln";
    cfg.validate();
    const auto alphas = alpha_params(cfg);
    const double r = cfg.r_values.front();
    const double horizon = max_of(cfg.times);
    std::vector<double> checkpoints = cfg.times;
    checkpoints.push_back(r);

    AggregateReport rep = new_report(cfg, "slln");
    for (double a : cfg.alphas) {
        for (double t : cfg.times) {
            for (const char* c : {"z_over_ez", "y_t", "y_r", "cond_over_ez", "rho"})
                rep.columns.push_back(label(c, {{"a", a}, {"t", t}}));
        }
    }
    run_rows(cfg, rep, [&](std::uint64_t replica) {
        const auto snaps = simulate(sim_config(cfg, replica, horizon, checkpoints), VarianceProfile::homogeneous());
        const auto& snap_r = at_time(snaps, r);
        std::vector<double> row;
        for (const auto& p : alphas) {
            const double y_r = mckean_martingale(snap_r, p);
            for (double t : cfg.times) {
                const auto& snap_t = at_time(snaps, t);
                const double log_ez = log_expected_high_points_exact(p, t);
                const double z = static_cast<double>(high_point_count(snap_t, p)) / std::exp(log_ez);
                const double y_t = mckean_martingale(snap_t, p);
                const double cond = std::exp(log_conditional_expected_count(snap_r, p, t) - log_ez);
                row.insert(row.end(), {z, y_t, y_r, cond, z / y_t});
            }
        }
        return row;
    });
    finalize(rep);
    return rep;
}

AggregateReport run_onset(const ExperimentConfig& in) {
    ExperimentConfig cfg = in;
    cfg.name = "onset";
    cfg.validate();
    const auto alphas = alpha_params(cfg);
    const auto r_grid = cfg.r_values;
    const double horizon = max_of(r_grid);

    AggregateReport rep = new_report(cfg, "onset");
    for (double a : cfg.alphas) {
        for (double r : r_grid) {
            rep.columns.push_back(label("y_r", {{"a", a}, {"r", r}}));
            for (double t : cfg.times) rep.columns.push_back(label("R", {{"a", a}, {"t", t}, {"r", r}}));
        }
    }
    run_rows(cfg, rep, [&](std::uint64_t replica) {
        const auto snaps = simulate(sim_config(cfg, replica, horizon, r_grid), VarianceProfile::homogeneous());
        std::vector<double> row;
        for (const auto& p : alphas) {
            for (double r : r_grid) {
                const auto& snap_r = at_time(snaps, r);
                const double log_y = log_mckean_martingale(snap_r, p);
                row.push_back(std::exp(log_y));
                for (double t : cfg.times) {
                    const double log_ratio = log_conditional_expected_count(snap_r, p, t) -
                                             log_expected_high_points_exact(p, t) - log_y;
                    row.push_back(std::exp(log_ratio));
                }
            }
        }
        return row;
    });
    finalize(rep);
    return rep;
}

AggregateReport run_decorrelation(const ExperimentConfig& in) {
    ExperimentConfig cfg = in;
    cfg.name = "decorrelation";
    cfg.validate();
    const auto alphas = alpha_params(cfg);
    const double t = cfg.times.front();

    AggregateReport rep = new_report(cfg, "decorrelation");
    for (double a : cfg.alphas) {
        for (double r : cfg.r_values) rep.columns.push_back(label("D", {{"a", a}, {"r", r}}));
    }
    run_rows(cfg, rep, [&](std::uint64_t replica) {
        const auto snaps = simulate(sim_config(cfg, replica, t, cfg.r_values), VarianceProfile::homogeneous());
        const auto& snap_t = at_time(snaps, t);
        std::vector<double> row;
        for (const auto& p : alphas) {
            const double log_ez = log_expected_high_points_exact(p, t);
            const double z = static_cast<double>(high_point_count(snap_t, p));
            for (double r : cfg.r_values) {
                const double cond = std::exp(log_conditional_expected_count(at_time(snaps, r), p, t));
                row.push_back((z - cond) / std::exp(log_ez));
            }
        }
        return row;
    });
    finalize(rep);
    return rep;
}

namespace {

// One barrier run per (alpha, r). Every run records all r values as
// checkpoints, so positions are identical across runs of a replica and only
// the barrier start differs.
template <class PerRun>
std::vector<double> barrier_runs(const ExperimentConfig& cfg, std::uint64_t replica,
                                 const std::vector<AlphaParams>& alphas, PerRun&& per_run) {
    const double t = cfg.times.front();
    std::vector<double> row;
    for (const auto& p : alphas) {
        for (double r : cfg.r_values) {
            SimConfig sc = sim_config(cfg, replica, t, cfg.r_values);
            sc.barrier = BarrierSpec{r, p.delta() + cfg.eps_for(p)};
            const auto snaps = simulate(sc, VarianceProfile::homogeneous());
            per_run(p, r, snaps, row);
        }
    }
    return row;
}

}  // namespace

AggregateReport run_localization(const ExperimentConfig& in) {
    ExperimentConfig cfg = in;
    cfg.name = "localization";
    cfg.validate();
    const auto alphas = alpha_params(cfg);
    const double t = cfg.times.front();

    AggregateReport rep = new_report(cfg, "localization");
    for (double a : cfg.alphas) {
        for (double r : cfg.r_values) {
            for (const char* c : {"z_over_ez", "z_le_over_ez", "z_gt_over_ez"})
                rep.columns.push_back(label(c, {{"a", a}, {"r", r}}));
        }
    }
    run_rows(cfg, rep, [&](std::uint64_t replica) {
        return barrier_runs(cfg, replica, alphas,
                            [&](const AlphaParams& p, double, const std::vector<ParticleSnapshot>& snaps,
                                std::vector<double>& row) {
                                const auto& snap_t = at_time(snaps, t);
                                const double ez = expected_high_points_exact(p, t);
                                const auto loc = localized_counts(snap_t, p);
                                row.push_back(static_cast<double>(loc.z_le + loc.z_gt) / ez);
                                row.push_back(static_cast<double>(loc.z_le) / ez);
                                row.push_back(static_cast<double>(loc.z_gt) / ez);
                            });
    });
    finalize(rep);
    return rep;
}

AggregateReport run_pair_count(const ExperimentConfig& in) {
    ExperimentConfig cfg = in;
    cfg.name = "pair-count";
    cfg.validate();
    const auto alphas = alpha_params(cfg);
    const double t = cfg.times.front();

    AggregateReport rep = new_report(cfg, "pair-count");
    for (double a : cfg.alphas) {
        for (double r : cfg.r_values) {
            rep.columns.push_back(label("pairs", {{"a", a}, {"r", r}}));
            rep.columns.push_back(label("z_le", {{"a", a}, {"r", r}}));
        }
    }
    run_rows(cfg, rep, [&](std::uint64_t replica) {
        return barrier_runs(cfg, replica, alphas,
                            [&](const AlphaParams& p, double r, const std::vector<ParticleSnapshot>& snaps,
                                std::vector<double>& row) {
                                const auto& snap_t = at_time(snaps, t);
                                const double level = p.delta() * t;
                                const auto& flags = *snap_t.barrier_exceeded;
                                double pairs = 0.0;
                                double z_le = 0.0;
                                for (const auto& group : split_by_ancestor(snap_t, r)) {
                                    double c = 0.0;
                                    for (std::uint32_t k : group) {
                                        if (snap_t.positions[k] >= level && !flags[k]) c += 1.0;
                                    }
                                    pairs += 0.5 * c * (c - 1.0);
                                    z_le += c;
                                }
                                row.push_back(pairs);
                                row.push_back(z_le);
                            });
    });
    finalize(rep);
    return rep;
}

AggregateReport run_rem_collapse(const ExperimentConfig& in) {
    ExperimentConfig cfg = in;
    cfg.name = "rem-collapse";
    cfg.validate();
    const double s1 = cfg.sigma1;
    const double s2 = std::sqrt(2.0 - s1 * s1);

    AggregateReport rep = new_report(cfg, "rem-collapse");
    for (double t : cfg.times) {
        rep.columns.push_back(label("max_forward", {{"t", t}}));
        rep.columns.push_back(label("max_swapped", {{"t", t}}));
    }
    run_rows(cfg, rep, [&](std::uint64_t replica) {
        std::vector<double> row;
        for (double t : cfg.times) {
            // Both orderings share the replica stream.
            const auto sc = sim_config(cfg, replica, t, {});
            const auto fwd = simulate(sc, VarianceProfile::two_phase(s1, s2, t / 2.0));
            const auto swp = simulate(sc, VarianceProfile::two_phase(s2, s1, t / 2.0));
            row.push_back(max_position(fwd.back()));
            row.push_back(max_position(swp.back()));
        }
        return row;
    });
    finalize(rep);
    return rep;
}

TraceRun run_martingale_trace(const ExperimentConfig& in) {
    ExperimentConfig cfg = in;
    cfg.name = "trace";
    cfg.validate();
    const auto alphas = alpha_params(cfg);
    const auto checkpoints = sorted_unique(cfg.checkpoints);
    const double horizon = checkpoints.back();

    TraceRun out;
    AggregateReport& rep = out.report;
    rep = new_report(cfg, "trace");
    for (double c : checkpoints) rep.columns.push_back(label("z_derivative", {{"t", c}}));
    for (double a : cfg.alphas) {
        for (double c : checkpoints) rep.columns.push_back(label("y", {{"a", a}, {"t", c}}));
        for (double c : checkpoints) {
            if (c > 0.0) rep.columns.push_back(label("z_over_ez", {{"a", a}, {"t", c}}));
        }
        for (std::size_t i = 1; i < checkpoints.size(); ++i)
            rep.columns.push_back(label("dy", {{"a", a}, {"from", checkpoints[i - 1]}, {"to", checkpoints[i]}}));
    }

    std::vector<std::optional<MartingaleTrace>> traces(cfg.replicas);
    run_rows(cfg, rep, [&](std::uint64_t replica) {
        const auto snaps = simulate(sim_config(cfg, replica, horizon, checkpoints), VarianceProfile::homogeneous());
        MartingaleTrace tr = make_trace(snaps, alphas);
        std::vector<double> row(tr.derivative.begin(), tr.derivative.end());
        for (std::size_t a = 0; a < alphas.size(); ++a) {
            row.insert(row.end(), tr.mckean[a].begin(), tr.mckean[a].end());
            for (std::size_t i = 0; i < checkpoints.size(); ++i) {
                if (checkpoints[i] > 0.0)
                    row.push_back(static_cast<double>(tr.count[a][i]) /
                                  expected_high_points_exact(alphas[a], checkpoints[i]));
            }
            for (std::size_t i = 1; i < checkpoints.size(); ++i) row.push_back(tr.mckean[a][i] - tr.mckean[a][i - 1]);
        }
        traces[replica - cfg.first_replica] = std::move(tr);
        return row;
    });
    for (auto& tr : traces) {
        if (tr) out.traces.push_back(std::move(*tr));
    }
    finalize(rep);
    return out;
}

AggregateReport run_experiment(const ExperimentConfig& cfg) {
    if (cfg.name == "slln") return run_slln(cfg);
    if (cfg.name == "onset") return run_onset(cfg);
    if (cfg.name == "decorrelation") return run_decorrelation(cfg);
    if (cfg.name == "localization") return run_localization(cfg);
    if (cfg.name == "pair-count") return run_pair_count(cfg);
    if (cfg.name == "rem-collapse") return run_rem_collapse(cfg);
    if (cfg.name == "trace") return run_martingale_trace(cfg).report;
    throw ConfigError("unknown experiment '" + cfg.name + "'");
}

namespace {

bool same_setup(const ExperimentConfig& a, const ExperimentConfig& b) {
    return a.name == b.name && a.alphas == b.alphas && a.times == b.times && a.r_values == b.r_values &&
           a.eps == b.eps && a.sigma1 == b.sigma1 && a.checkpoints == b.checkpoints && a.seed == b.seed &&
           a.max_particles == b.max_particles;
}

}  // namespace

AggregateReport merge(const std::vector<AggregateReport>& reports) {
    if (reports.empty()) throw ConfigError("merge needs at least one report");
    AggregateReport out = reports.front();
    std::set<std::uint64_t> seen;
    auto claim = [&seen](std::uint64_t id) {
        if (!seen.insert(id).second) throw ConfigError("merge: replica " + std::to_string(id) + " appears twice");
    };
    for (const auto& row : out.rows) claim(row.replica_id);
    for (std::uint64_t id : out.failed_replicas) claim(id);

    for (std::size_t i = 1; i < reports.size(); ++i) {
        const auto& rep = reports[i];
        if (rep.experiment != out.experiment || !same_setup(rep.config, out.config) || rep.columns != out.columns)
            throw ConfigError("merge: reports come from different experiment setups");
        for (const auto& row : rep.rows) {
            claim(row.replica_id);
            out.rows.push_back(row);
        }
        for (std::uint64_t id : rep.failed_replicas) {
            claim(id);
            out.failed_replicas.push_back(id);
        }
        out.config.first_replica = std::min(out.config.first_replica, rep.config.first_replica);
        out.config.replicas += rep.config.replicas;
        out.wallclock_seconds += rep.wallclock_seconds;
    }
    finalize(out);
    return out;
}

}  // namespace bbm
