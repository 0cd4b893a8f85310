#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <utility>

namespace sgl {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
/// Output is a pure function of (key, counter), so any draw can be
/// regenerated from its coordinates without replaying a stream.
class Philox4x32 {
public:
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static Counter generate(Counter ctr, Key key) noexcept {
        for (int round = 0; round < 10; ++round) {
            if (round > 0) {
                key[0] += kWeyl0;
                key[1] += kWeyl1;
            }
            const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
            const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
            const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
            const auto lo0 = static_cast<std::uint32_t>(p0);
            const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
            const auto lo1 = static_cast<std::uint32_t>(p1);
            ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        }
        return ctr;
    }

private:
    static constexpr std::uint32_t kMul0 = 0xD2511F53u;
    static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
};

/// Random stream addressed by (seed, trajectory, step). Each block index
/// inside a step yields two independent standard normals.
class StreamKey {
public:
    constexpr StreamKey(std::uint64_t seed, std::uint64_t trajectory) noexcept
        : seed_(seed), trajectory_(trajectory) {}

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t trajectory() const noexcept { return trajectory_; }

    /// Four raw 32-bit words for (step, block).
    Philox4x32::Counter raw(std::uint64_t step, std::uint32_t block) const noexcept {
        // The trajectory id uses 32 bits of the counter and the upper 32 bits of the
        // key, so ids beyond 2^32 still map to distinct streams.
        const Philox4x32::Counter ctr{static_cast<std::uint32_t>(step),
                                      static_cast<std::uint32_t>(step >> 32),
                                      static_cast<std::uint32_t>(trajectory_), block};
        const Philox4x32::Key key{static_cast<std::uint32_t>(seed_),
                                  static_cast<std::uint32_t>(seed_ >> 32) ^
                                      static_cast<std::uint32_t>(trajectory_ >> 32)};
        return Philox4x32::generate(ctr, key);
    }

    /// Two uniforms in (0, 1) with 53-bit resolution.
    std::pair<double, double> uniforms(std::uint64_t step, std::uint32_t block) const noexcept {
        const auto w = raw(step, block);
        return {to_open_unit(w[0], w[1]), to_open_unit(w[2], w[3])};
    }

    /// Two standard normals via Box-Muller; bitwise reproducible because it only
    /// uses log/sqrt/cos/sin of deterministic inputs.
    std::pair<double, double> normals(std::uint64_t step, std::uint32_t block) const noexcept {
        const auto [u1, u2] = uniforms(step, block);
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * std::numbers::pi * u2;
        return {r * std::cos(theta), r * std::sin(theta)};
    }

private:
    static double to_open_unit(std::uint32_t hi, std::uint32_t lo) noexcept {
        const std::uint64_t bits = ((std::uint64_t{hi} << 32) | lo) >> 11;
        return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
    }

    std::uint64_t seed_;
    std::uint64_t trajectory_;
};

/// Sequential convenience wrapper over a StreamKey for code that just wants
/// "the next normal" (test generators, Monte Carlo helpers).
class NormalSequence {
public:
    NormalSequence(std::uint64_t seed, std::uint64_t trajectory, std::uint64_t step = 0)
        : key_(seed, trajectory), step_(step) {}

    double next() noexcept {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        auto [z0, z1] = key_.normals(step_, block_);
        advance();
        spare_ = z1;
        has_spare_ = true;
        return z0;
    }

    double uniform() noexcept {
        auto [u0, u1] = key_.uniforms(step_, block_);
        (void)u1;
        advance();
        return u0;
    }

private:
    void advance() noexcept {
        if (++block_ == 0) ++step_;
    }

    StreamKey key_;
    std::uint64_t step_;
    std::uint32_t block_ = 0;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace sgl
