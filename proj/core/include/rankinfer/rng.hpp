/**
 * @file rng.hpp
 * @brief Counter-based Philox4x32-10 streams.
 *
 * A stream is addressed by (seed, stream id); draws are a pure function of
 * (seed, stream id, position), so Monte Carlo work can be split across
 * threads in any order and still give bit-identical results.
 */
#pragma once

#include <array>
#include <cstdint>

namespace rankinfer {

/// One Philox4x32-10 block: 4 output words for a 128-bit counter and 64-bit key.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// splitmix64 finalizer; used to derive child seeds.
std::uint64_t splitmix64(std::uint64_t x);

/// Seed for a (a, b) sub-stream of `seed`, e.g. (cell, replication).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

class RandomStream {
public:
    RandomStream(std::uint64_t seed, std::uint64_t stream);

    std::uint32_t next_u32();
    std::uint64_t next_u64();
    /// Uniform on the open interval (0, 1), 53-bit resolution.
    double uniform();
    /// Standard normal via Box-Muller.
    double normal();
    /// Poisson by inversion; large means are split into a sum of chunks of mean <= 16.
    std::uint64_t poisson(double mean);

private:
    void refill();

    std::array<std::uint32_t, 2> key_;
    std::uint64_t stream_;
    std::uint64_t block_ = 0;
    std::array<std::uint32_t, 4> buf_{};
    int pos_ = 4;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

} // namespace rankinfer
