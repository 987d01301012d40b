#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>

namespace roprec {

/// Philox4x32-10 block function (Salmon et al., "Parallel random numbers: as
/// easy as 1, 2, 3"). Maps a 128-bit counter and 64-bit key to 128 random bits.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// Mixes a seed with a list of indices into an independent 64-bit seed
/// (splitmix64 finalizer chain). Used to derive per-cell / per-trial seeds.
std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> path);

/// Sequential view of one Philox substream.
///
/// The key is the 64-bit seed; the counter is (block, stream, substream_lo,
/// substream_hi). Two streams differing in any of (seed, stream, substream)
/// never share a counter, so draws for measurement j can be generated
/// independently of measurement j-1.
class CounterStream {
public:
    CounterStream(std::uint64_t seed, std::uint32_t stream, std::uint64_t substream);

    std::uint64_t next_u64();
    /// Uniform on the open interval (0, 1), 53-bit resolution.
    double uniform();
    /// Standard normal via Box-Muller; pairs are cached.
    double normal();

private:
    void refill();

    std::array<std::uint32_t, 2> key_;
    std::array<std::uint32_t, 4> counter_;
    std::array<std::uint32_t, 4> block_{};
    int used_ = 4;
    double spare_normal_ = 0.0;
    bool has_spare_ = false;
};

/// Stream tags. Keeping them distinct keeps betas, gammas, noise, truths, and
/// solver initializations statistically independent under one seed.
namespace streams {
inline constexpr std::uint32_t kBeta = 1;
inline constexpr std::uint32_t kGamma = 2;
inline constexpr std::uint32_t kNoise = 3;
inline constexpr std::uint32_t kTruth = 4;
inline constexpr std::uint32_t kSolverInit = 5;
inline constexpr std::uint32_t kRubTrial = 6;
inline constexpr std::uint32_t kCorruption = 7;
} // namespace streams

} // namespace roprec
