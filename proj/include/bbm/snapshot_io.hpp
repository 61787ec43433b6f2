#pragma once

#include <iosfwd>
#include <optional>

#include "bbm/process.hpp"

namespace bbm {

/// Fixed 8-line `#` header describing the run, then
/// `particle_id,position,ancestor_at_<r>...,barrier_exceeded` rows.
/// Reals use 17 significant digits, so a read-back is bit-exact.
void write_snapshot_csv(std::ostream& out, const ParticleSnapshot& snapshot, double horizon,
                        const VarianceProfile& profile, const std::optional<BarrierSpec>& barrier);

/// Inverse of write_snapshot_csv. Throws ConfigError on malformed input.
ParticleSnapshot read_snapshot_csv(std::istream& in);

}  // namespace bbm
