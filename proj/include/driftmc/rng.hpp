#pragma once

#include <array>
#include <cstdint>

#include "driftmc/normal.hpp"

namespace driftmc {

/// Philox4x32-10 counter-based bijection (Salmon et al.). Stateless: the
/// output is a pure function of (counter, key).
struct Philox4x32 {
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static Counter generate(Counter ctr, Key key) {
        for (int round = 0; round < 10; ++round) {
            if (round > 0) {
                key[0] += 0x9E3779B9u;
                key[1] += 0xBB67AE85u;
            }
            const std::uint64_t p0 = std::uint64_t{0xD2511F53u} * ctr[0];
            const std::uint64_t p1 = std::uint64_t{0xCD9E8D57u} * ctr[2];
            ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0],
                   static_cast<std::uint32_t>(p1),
                   static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1],
                   static_cast<std::uint32_t>(p0)};
        }
        return ctr;
    }
};

/// Standard normal draws for one substream of a seeded family. Substream
/// `stream` (a path index) is independent of every other substream, so paths
/// can be generated in any order or on any thread.
class NormalStream {
public:
    NormalStream(std::uint64_t seed, std::uint64_t stream)
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
          stream_lo_(static_cast<std::uint32_t>(stream)),
          stream_hi_(static_cast<std::uint32_t>(stream >> 32)) {}

    double next() {
        if (pos_ == 4) refill();
        return buffer_[pos_++];
    }

private:
    void refill() {
        const auto bits = Philox4x32::generate(
            {static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
             stream_lo_, stream_hi_},
            key_);
        ++block_;
        constexpr double scale = 1.0 / 4294967296.0;
        for (int i = 0; i < 4; ++i) buffer_[i] = norm_inv((bits[i] + 0.5) * scale);
        pos_ = 0;
    }

    Philox4x32::Key key_;
    std::uint32_t stream_lo_;
    std::uint32_t stream_hi_;
    std::uint64_t block_ = 0;
    std::array<double, 4> buffer_{};
    int pos_ = 4;
};

}  // namespace driftmc
