#pragma once

#include "zz/cloud.hpp"

#include <array>
#include <cstdint>

namespace zz {

/// Philox4x32-10 counter-based generator (Salmon et al., Random123).
///
/// The 64-bit key is the seed; the 128-bit counter is split into a 64-bit
/// stream id (high words) and a 64-bit block index (low words). Each block
/// yields four 32-bit words, consumed as two 64-bit values. Streams with
/// different ids never overlap, and the output depends only on
/// (seed, stream, position), so results are platform independent as long
/// as the floating-point transforms below are.
class Rng {
public:
    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

    static std::array<std::uint32_t, 4> philox(std::array<std::uint32_t, 4> counter,
                                               std::array<std::uint32_t, 2> key);

    std::uint64_t next_u64();
    /// 53-bit uniform in [0, 1).
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n);
    /// Standard normal via Box-Muller (one output per two uniforms).
    double normal();
    /// Uniform on the closed unit disk: radius sqrt(u), angle 2*pi*v.
    Complex unit_disk();
    /// Uniform on the unit circle.
    Complex unit_circle();

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream() const { return stream_; }

    /// SplitMix64 finalizer; used to derive independent seeds.
    static std::uint64_t mix(std::uint64_t x);

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t block_ = 0;
    std::array<std::uint32_t, 4> buffer_{};
    int used_ = 4;
};

}  // namespace zz
