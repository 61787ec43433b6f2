#include "bbm/process.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "bbm/rng.hpp"

namespace bbm {

namespace {

constexpr std::uint32_t kNoLabel = std::numeric_limits<std::uint32_t>::max();

struct Frame {
    double time;
    double position;
    std::uint64_t key;
    std::uint8_t flagged;
};

// A time at which every lineage must stop and draw a fresh increment.
struct CriticalTime {
    double time;
    int checkpoint;  // index into the resolved checkpoints, or -1
};

std::vector<CriticalTime> critical_times(const std::vector<double>& checkpoints,
                                         const VarianceProfile& profile,
                                         const std::optional<BarrierSpec>& barrier, double horizon) {
    std::vector<double> times = checkpoints;
    for (double b : profile.breakpoints()) {
        if (b > 0.0 && b < horizon) times.push_back(b);
    }
    if (barrier) times.push_back(barrier->start_time);
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());

    std::vector<CriticalTime> out;
    out.reserve(times.size());
    for (double t : times) {
        const auto it = std::lower_bound(checkpoints.begin(), checkpoints.end(), t);
        const int k = (it != checkpoints.end() && *it == t) ? static_cast<int>(it - checkpoints.begin()) : -1;
        out.push_back({t, k});
    }
    return out;
}

}  // namespace

std::vector<double> SimConfig::resolved_checkpoints() const {
    std::vector<double> out = checkpoints;
    out.push_back(horizon);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

void SimConfig::validate() const {
    if (!(horizon >= 0.0) || !std::isfinite(horizon)) throw ConfigError("horizon must be finite and >= 0");
    for (double c : checkpoints) {
        if (!(c >= 0.0 && c <= horizon))
            throw ConfigError("checkpoint " + std::to_string(c) + " outside [0, horizon]");
    }
    if (max_particles < 1) throw ConfigError("max_particles must be >= 1");
    if (barrier) {
        if (!(barrier->start_time >= 0.0)) throw ConfigError("barrier start must be >= 0");
        if (!(barrier->start_time < horizon)) throw ConfigError("barrier start must precede the horizon");
        if (!std::isfinite(barrier->slope)) throw ConfigError("barrier slope must be finite");
    }
}

std::vector<ParticleSnapshot> simulate(const SimConfig& config, const VarianceProfile& profile) {
    config.validate();
    if (!profile.covers(config.horizon)) throw ConfigError("variance profile does not cover the horizon");

    const double horizon = config.horizon;
    const std::vector<double> checkpoints = config.resolved_checkpoints();
    const std::size_t n_checkpoints = checkpoints.size();
    const std::vector<CriticalTime> critical = critical_times(checkpoints, profile, config.barrier, horizon);
    const bool has_barrier = config.barrier.has_value();
    const double barrier_start = has_barrier ? config.barrier->start_time : 0.0;
    const double barrier_slope = has_barrier ? config.barrier->slope : 0.0;

    std::vector<ParticleSnapshot> snapshots(n_checkpoints);
    std::vector<std::vector<std::vector<std::uint32_t>>> labels(n_checkpoints);
    for (std::size_t k = 0; k < n_checkpoints; ++k) {
        snapshots[k].time = checkpoints[k];
        snapshots[k].provenance = {config.seed, config.replica_id};
        if (has_barrier) snapshots[k].barrier_exceeded.emplace();
        labels[k].resize(k + 1);
    }

    // Depth-first traversal; labels_stack holds n_checkpoints entries per frame.
    std::vector<Frame> stack;
    std::vector<std::uint32_t> labels_stack;
    std::vector<std::uint32_t> current(n_checkpoints, kNoLabel);
    stack.push_back({0.0, 0.0, replica_key(config.seed, config.replica_id), 0});
    labels_stack.insert(labels_stack.end(), n_checkpoints, kNoLabel);

    while (!stack.empty()) {
        const Frame frame = stack.back();
        stack.pop_back();
        std::copy(labels_stack.end() - static_cast<std::ptrdiff_t>(n_checkpoints), labels_stack.end(),
                  current.begin());
        labels_stack.resize(labels_stack.size() - n_checkpoints);

        CounterRng rng(frame.key);
        const double death = frame.time + rng.exponential() / SimConfig::kBranchingRate;
        const bool branches = death < horizon;
        const double end = branches ? death : horizon;

        double now = frame.time;
        double x = frame.position;
        std::uint8_t flagged = frame.flagged;
        std::uint64_t segment = 0;

        auto advance = [&](double to) {
            const double dt = to - now;
            const double rate = profile.rate_at(now);
            const double next = x + std::sqrt(rate * dt) * rng.normal();
            if (has_barrier && !flagged && now >= barrier_start) {
                const double d0 = barrier_slope * now - x;
                const double d1 = barrier_slope * to - next;
                // Addressed by segment so the draw does not depend on which
                // earlier segments needed one.
                if (d0 <= 0.0 || d1 <= 0.0 ||
                    uniform_at(frame.key, segment) < bridge_crossing_probability(d0, d1, dt, rate))
                    flagged = 1;
            }
            ++segment;
            now = to;
            x = next;
        };

        auto ci = std::lower_bound(critical.begin(), critical.end(), frame.time,
                                   [](const CriticalTime& c, double t) { return c.time < t; });
        for (; ci != critical.end() && ci->time <= end; ++ci) {
            if (ci->time > now) advance(ci->time);
            if (ci->checkpoint < 0 || (branches && ci->time >= death)) continue;

            const auto k = static_cast<std::size_t>(ci->checkpoint);
            ParticleSnapshot& snap = snapshots[k];
            const auto index = static_cast<std::uint32_t>(snap.positions.size());
            if (snap.positions.size() >= config.max_particles) throw PopulationCapError(ci->time, config.max_particles);
            snap.positions.push_back(x);
            if (has_barrier) snap.barrier_exceeded->push_back(flagged);
            current[k] = index;
            for (std::size_t j = 0; j <= k; ++j) labels[k][j].push_back(current[j]);
        }
        if (end > now) advance(end);

        if (branches) {
            const auto keys = child_keys(frame.key);
            for (int child = 1; child >= 0; --child) {
                stack.push_back({end, x, keys[static_cast<std::size_t>(child)], flagged});
                labels_stack.insert(labels_stack.end(), current.begin(), current.end());
            }
        }
    }

    for (std::size_t k = 0; k < n_checkpoints; ++k) {
        for (std::size_t j = 0; j <= k; ++j)
            snapshots[k].ancestor_at.emplace(checkpoints[j], std::move(labels[k][j]));
    }
    return snapshots;
}

std::vector<std::vector<std::uint32_t>> split_by_ancestor(const ParticleSnapshot& snapshot, double r) {
    if (r > snapshot.time) throw ConfigError("split_by_ancestor: r exceeds the snapshot time");
    const auto it = snapshot.ancestor_at.find(r);
    if (it == snapshot.ancestor_at.end())
        throw ConfigError("time " + std::to_string(r) + " was not recorded; add it to the checkpoints");
    const auto& ancestor = it->second;
    std::uint32_t n_groups = 0;
    for (std::uint32_t a : ancestor) n_groups = std::max(n_groups, a + 1);
    std::vector<std::vector<std::uint32_t>> groups(n_groups);
    for (std::uint32_t i = 0; i < ancestor.size(); ++i) groups[ancestor[i]].push_back(i);
    return groups;
}

}  // namespace bbm
