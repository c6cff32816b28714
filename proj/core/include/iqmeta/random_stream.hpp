#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <optional>

namespace iqmeta {

/// Philox4x32-10 block: encrypts `counter` under `key`.
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> counter,
                                           std::array<std::uint32_t, 2> key) noexcept;

/// Counter-based random stream.
///
/// A stream is identified by (seed, substream). Draws are a pure function of
/// that pair and the draw position, so streams for different
/// (cell, replication) pairs can be created and consumed in any order, on any
/// thread, with identical results. Satisfies UniformRandomBitGenerator.
class RandomStream {
public:
    using result_type = std::uint64_t;

    RandomStream(std::uint64_t seed, std::uint64_t substream) noexcept;

    /// Stream for replication `replication` of grid cell `cell`.
    static RandomStream for_replication(std::uint64_t seed, std::uint32_t cell,
                                        std::uint32_t replication) noexcept {
        return {seed, (std::uint64_t{cell} << 32) | replication};
    }

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept {
        return std::numeric_limits<result_type>::max();
    }

    result_type operator()() noexcept;

    /// Uniform on the open interval (0, 1).
    double uniform() noexcept;

    /// Standard normal variate (Box-Muller; the second value of each pair is
    /// cached).
    double standard_normal() noexcept;

private:
    void refill() noexcept;

    std::array<std::uint32_t, 2> key_;
    std::uint64_t substream_;
    std::uint64_t block_ = 0;
    std::array<std::uint32_t, 4> buffer_{};
    int buffered_ = 0;  // 32-bit words left in buffer_
    std::optional<double> spare_normal_;
};

}  // namespace iqmeta
