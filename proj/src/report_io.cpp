#include "bbm/report_io.hpp"

#include <cstdio>
#include <fstream>

#include <json.hpp>

namespace bbm {

namespace {

using nlohmann::ordered_json;

ordered_json config_json(const ExperimentConfig& c) {
    ordered_json j;
    j["name"] = c.name;
    j["alphas"] = c.alphas;
    j["times"] = c.times;
    j["r_values"] = c.r_values;
    j["eps"] = c.eps ? ordered_json(*c.eps) : ordered_json(nullptr);
    j["sigma1"] = c.sigma1;
    j["checkpoints"] = c.checkpoints;
    j["replicas"] = c.replicas;
    j["first_replica"] = c.first_replica;
    j["seed"] = c.seed;
    j["max_particles"] = c.max_particles;
    return j;
}

ordered_json aggregate_json(const Aggregate& a) {
    ordered_json q;
    const char* names[] = {"q05", "q25", "q50", "q75", "q95"};
    for (std::size_t i = 0; i < a.quantiles.size(); ++i) q[names[i]] = a.quantiles[i];
    return {{"count", a.count}, {"mean", a.mean}, {"variance", a.variance}, {"std_error", a.std_error}, {"quantiles", q}};
}

}  // namespace

std::string report_to_json(const AggregateReport& rep, bool include_wallclock, const std::string& rows_sidecar) {
    ordered_json j;
    j["experiment"] = rep.experiment;
    j["config"] = config_json(rep.config);
    j["columns"] = rep.columns;
    if (rows_sidecar.empty()) {
        ordered_json rows = ordered_json::array();
        for (const auto& row : rep.rows) {
            ordered_json r;
            r["replica_id"] = row.replica_id;
            r["values"] = row.values;
            rows.push_back(std::move(r));
        }
        j["rows"] = std::move(rows);
    } else {
        j["rows"] = ordered_json::array();
        j["rows_sidecar"] = rows_sidecar;
    }
    ordered_json aggs = ordered_json::object();
    for (std::size_t c = 0; c < rep.columns.size() && c < rep.aggregates.size(); ++c)
        aggs[rep.columns[c]] = aggregate_json(rep.aggregates[c]);
    j["aggregates"] = std::move(aggs);
    ordered_json summary = ordered_json::object();
    for (const auto& [k, v] : rep.summary) summary[k] = v;
    j["summary"] = std::move(summary);
    if (!rep.decay_fits.empty()) {
        ordered_json fits = ordered_json::object();
        for (const auto& [k, f] : rep.decay_fits) {
            fits[k] = {{"r_values", f.r_values},       {"estimates", f.estimates},
                       {"fitted_rate", f.fitted_rate}, {"ci", {f.ci_low, f.ci_high}},
                       {"admissible_upper", f.admissible_upper}};
        }
        j["decay_fit"] = std::move(fits);
    }
    j["failures"] = {{"count", rep.failed_replicas.size()}, {"replica_ids", rep.failed_replicas}};
    j["seed"] = rep.config.seed;
    j["wallclock"] = include_wallclock ? ordered_json(rep.wallclock_seconds) : ordered_json(nullptr);
    return j.dump(2) + "\n";
}

std::string rows_to_csv(const AggregateReport& rep) {
    std::string out = "replica_id";
    for (const auto& c : rep.columns) out += "," + c;
    out += "\n";
    char buf[40];
    for (const auto& row : rep.rows) {
        out += std::to_string(row.replica_id);
        for (double v : row.values) {
            std::snprintf(buf, sizeof buf, ",%.17g", v);
            out += buf;
        }
        out += "\n";
    }
    return out;
}

std::filesystem::path write_report(const std::filesystem::path& dir, const std::string& stem,
                                   const AggregateReport& rep, bool include_wallclock) {
    std::filesystem::create_directories(dir);
    std::string sidecar;
    if (rep.rows.size() > kInlineRowLimit) {
        sidecar = stem + "_rows.csv";
        std::ofstream(dir / sidecar) << rows_to_csv(rep);
    }
    const auto path = dir / (stem + ".json");
    std::ofstream(path) << report_to_json(rep, include_wallclock, sidecar);
    return path;
}

}  // namespace bbm
