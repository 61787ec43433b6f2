#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "bbm/analytics.hpp"
#include "bbm/functionals.hpp"
#include "bbm/process.hpp"

namespace bbm {

// Monte Carlo harness. Every experiment runs replicas
// first_replica .. first_replica + replicas - 1; replica i is simulated from
// the stream keyed by (seed, i) and nothing else, so results do not depend on
// the worker count or on how a replica range is split across runs.

struct ExperimentConfig {
    std::string name;
    std::vector<double> alphas{1.0};
    /// Horizons t. Onset treats them analytically; rem-collapse fits a slope over them.
    std::vector<double> times;
    /// Conditioning / barrier times r.
    std::vector<double> r_values;
    /// Barrier offset; defaults to default_epsilon(alpha) per alpha.
    std::optional<double> eps;
    /// First-phase standard deviation for rem-collapse.
    double sigma1 = 0.6;
    /// Trace checkpoints.
    std::vector<double> checkpoints;
    std::uint64_t replicas = 1;
    std::uint64_t first_replica = 0;
    std::uint64_t seed = 42;
    /// Worker threads; never affects results.
    unsigned parallelism = 1;
    std::size_t max_particles = std::size_t{1} << 26;

    double eps_for(const AlphaParams& a) const { return eps.value_or(default_epsilon(a)); }
    /// Throws ConfigError.
    void validate() const;
};

struct ReplicaRow {
    std::uint64_t replica_id = 0;
    std::vector<double> values;  // parallel to AggregateReport::columns

    bool operator==(const ReplicaRow&) const = default;
};

struct Aggregate {
    static constexpr std::array<double, 5> kLevels = {0.05, 0.25, 0.5, 0.75, 0.95};

    std::size_t count = 0;
    double mean = 0.0;
    double variance = 0.0;
    double std_error = 0.0;
    std::array<double, 5> quantiles{};
};

struct AggregateReport {
    std::string experiment;
    ExperimentConfig config;
    std::vector<std::string> columns;
    /// Completed replicas, ascending replica id.
    std::vector<ReplicaRow> rows;
    /// Replicas aborted by the population cap; excluded from every statistic.
    std::vector<std::uint64_t> failed_replicas;
    /// One entry per column, recomputed from rows.
    std::vector<Aggregate> aggregates;
    /// Experiment-specific derived statistics, recomputed from rows.
    std::vector<std::pair<std::string, double>> summary;
    std::vector<std::pair<std::string, DecayFit>> decay_fits;
    double wallclock_seconds = 0.0;

    std::size_t column_index(const std::string& name) const;
    std::vector<double> column(const std::string& name) const;
    double summary_value(const std::string& name) const;
    const Aggregate& aggregate(const std::string& name) const;
};

/// `name[k1=v1;k2=v2]` with %g-formatted values (CSV-safe).
std::string label(const std::string& name, std::initializer_list<std::pair<const char*, double>> keys);

AggregateReport run_slln(const ExperimentConfig& cfg);
AggregateReport run_onset(const ExperimentConfig& cfg);
AggregateReport run_decorrelation(const ExperimentConfig& cfg);
AggregateReport run_localization(const ExperimentConfig& cfg);
AggregateReport run_pair_count(const ExperimentConfig& cfg);
AggregateReport run_rem_collapse(const ExperimentConfig& cfg);

struct TraceRun {
    std::vector<MartingaleTrace> traces;  // one per completed replica, same order as rows
    AggregateReport report;
};
TraceRun run_martingale_trace(const ExperimentConfig& cfg);

/// Dispatch on cfg.name: slln, onset, decorrelation, localization,
/// pair-count, rem-collapse, trace.
AggregateReport run_experiment(const ExperimentConfig& cfg);

/// Recomputes aggregates, summary and decay fits from rows.
void finalize(AggregateReport& report);

/// Concatenates disjoint replica ranges of the same experiment and
/// re-finalizes in ascending replica order; equals the report of a single
/// run over the union. Throws ConfigError on mismatched configs or
/// overlapping replica ids.
AggregateReport merge(const std::vector<AggregateReport>& reports);

}  // namespace bbm
