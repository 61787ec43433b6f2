#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "bbm/errors.hpp"
#include "bbm/variance_profile.hpp"

namespace bbm {

/// The line s -> slope * s, watched on [start_time, horizon].
struct BarrierSpec {
    double start_time = 0.0;
    double slope = 0.0;
};

struct SimConfig {
    double horizon = 0.0;
    /// Snapshot times; the horizon is added if missing.
    std::vector<double> checkpoints;
    std::optional<BarrierSpec> barrier;
    std::uint64_t seed = 0;
    std::uint64_t replica_id = 0;
    std::size_t max_particles = std::size_t{1} << 26;

    static constexpr double kBranchingRate = 1.0;

    /// Sorted, de-duplicated checkpoints with the horizon appended.
    std::vector<double> resolved_checkpoints() const;
    /// Throws ConfigError.
    void validate() const;
};

struct RngProvenance {
    std::uint64_t seed = 0;
    std::uint64_t replica_id = 0;

    bool operator==(const RngProvenance&) const = default;
};

// Particles alive at one instant, in depth-first genealogical order (the
// first child's subtree before the second's).
struct ParticleSnapshot {
    double time = 0.0;
    std::vector<double> positions;
    /// For every recorded checkpoint r <= time: index of each particle's
    /// ancestor within the snapshot taken at r. Includes r == time (identity).
    std::map<double, std::vector<std::uint32_t>> ancestor_at;
    /// Lineage crossed the barrier somewhere in [start_time, time].
    std::optional<std::vector<std::uint8_t>> barrier_exceeded;
    RngProvenance provenance;

    std::size_t size() const noexcept { return positions.size(); }

    bool operator==(const ParticleSnapshot&) const = default;
};

/// One snapshot per resolved checkpoint, in increasing time.
/// Throws ConfigError, PopulationCapError.
std::vector<ParticleSnapshot> simulate(const SimConfig& config, const VarianceProfile& profile);

/// Particle indices grouped by their ancestor alive at r; groups[i] holds the
/// descendants of particle i of the time-r snapshot, in snapshot order.
/// Throws ConfigError if r was not a checkpoint of the run.
std::vector<std::vector<std::uint32_t>> split_by_ancestor(const ParticleSnapshot& snapshot, double r);

/// Crossing probability of a bridge with the given endpoint distances below a line.
inline double bridge_crossing_probability(double start_dist, double end_dist, double duration,
                                          double variance_rate) {
    if (start_dist <= 0.0 || end_dist <= 0.0) return 1.0;
    return std::exp(-2.0 * start_dist * end_dist / (variance_rate * duration));
}

/// Samples whether a Brownian bridge (rate variance_rate, given length) whose
/// endpoints sit start_dist and end_dist below a straight line touches it.
/// Endpoints on or above the line cross with certainty, without drawing.
template <class Rng>
bool sample_barrier_crossing(double start_dist, double end_dist, double duration,
                             double variance_rate, Rng& rng) {
    if (!(duration > 0.0)) throw DomainError("barrier crossing needs a positive duration");
    if (!(variance_rate > 0.0)) throw DomainError("barrier crossing needs a positive variance rate");
    if (start_dist <= 0.0 || end_dist <= 0.0) return true;
    return rng.uniform() < bridge_crossing_probability(start_dist, end_dist, duration, variance_rate);
}

}  // namespace bbm
