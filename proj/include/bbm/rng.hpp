#pragma once

#include <array>
#include <cstdint>

namespace bbm {

/// Philox4x32-10 block function (Salmon et al., SC'11).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key) noexcept;

/// 64-bit stream key derived from a parent key and a 64-bit label.
/// Distinct (parent, label, domain) triples give statistically independent keys.
std::uint64_t derive_key(std::uint64_t parent, std::uint64_t label, std::uint32_t domain) noexcept;

/// Both child keys of a binary split, from a single Philox block.
std::array<std::uint64_t, 2> child_keys(std::uint64_t parent) noexcept;

/// Root key of one replica.
std::uint64_t replica_key(std::uint64_t master_seed, std::uint64_t replica_id) noexcept;

/// Uniform in the open interval (0, 1) addressed directly by (key, index).
double uniform_at(std::uint64_t key, std::uint64_t index) noexcept;

// Counter-based stream: state is (key, counter) only, so a stream is a pure
// function of its key and never depends on what other streams consumed.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t key) noexcept : key_(key) {}

    std::uint64_t next_u64() noexcept;
    /// Open interval (0, 1).
    double uniform() noexcept;
    double exponential() noexcept;
    double normal() noexcept;

    std::uint64_t key() const noexcept { return key_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    std::array<std::uint64_t, 2> buf_{};
    int buffered_ = 0;
    double spare_normal_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace bbm
