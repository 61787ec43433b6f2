#include "bbm/rng.hpp"

#include <cmath>
#include <numbers>

namespace bbm {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

constexpr std::uint32_t kDomainChildren = 0x43484c44u;  // "CHLD"
constexpr std::uint32_t kDomainReplica = 0x5245504cu;   // "REPL"
constexpr std::uint32_t kDomainStream = 0x5354524du;    // "STRM"
constexpr std::uint32_t kDomainAddress = 0x41444452u;   // "ADDR"

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

inline std::array<std::uint32_t, 2> split_key(std::uint64_t k) {
    return {static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
}

inline std::uint64_t join(std::uint32_t lo, std::uint32_t hi) {
    return static_cast<std::uint64_t>(lo) | (static_cast<std::uint64_t>(hi) << 32);
}

inline double to_open_unit(std::uint64_t bits) {
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> c,
                                        std::array<std::uint32_t, 2> k) noexcept {
    for (int round = 0; round < 10; ++round) {
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kMul0, c[0], hi0, lo0);
        mulhilo(kMul1, c[2], hi1, lo1);
        c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
        k[0] += kWeyl0;
        k[1] += kWeyl1;
    }
    return c;
}

std::uint64_t derive_key(std::uint64_t parent, std::uint64_t label, std::uint32_t domain) noexcept {
    const auto out = philox4x32(
        {static_cast<std::uint32_t>(label), static_cast<std::uint32_t>(label >> 32), 0u, domain},
        split_key(parent));
    return join(out[0], out[1]);
}

std::array<std::uint64_t, 2> child_keys(std::uint64_t parent) noexcept {
    const auto out = philox4x32({0u, 0u, 0u, kDomainChildren}, split_key(parent));
    return {join(out[0], out[1]), join(out[2], out[3])};
}

std::uint64_t replica_key(std::uint64_t master_seed, std::uint64_t replica_id) noexcept {
    return derive_key(master_seed, replica_id, kDomainReplica);
}

double uniform_at(std::uint64_t key, std::uint64_t index) noexcept {
    const auto out = philox4x32(
        {static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32), 1u, kDomainAddress},
        split_key(key));
    return to_open_unit(join(out[0], out[1]));
}

std::uint64_t CounterRng::next_u64() noexcept {
    if (buffered_ == 0) {
        const auto out = philox4x32({static_cast<std::uint32_t>(counter_),
                                     static_cast<std::uint32_t>(counter_ >> 32), 2u, kDomainStream},
                                    split_key(key_));
        ++counter_;
        buf_ = {join(out[0], out[1]), join(out[2], out[3])};
        buffered_ = 2;
    }
    return buf_[2 - buffered_--];
}

double CounterRng::uniform() noexcept { return to_open_unit(next_u64()); }

double CounterRng::exponential() noexcept { return -std::log(uniform()); }

double CounterRng::normal() noexcept {
    if (has_spare_) {
        has_spare_ = false;
        return spare_normal_;
    }
    // Box-Muller; both variates are used.
    const double radius = std::sqrt(-2.0 * std::log(uniform()));
    const double angle = 2.0 * std::numbers::pi * uniform();
    spare_normal_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
}

}  // namespace bbm
