#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace imcmc {

/// Philox4x32-10 block function. Pure function of
/// (counter, key); this is the only source of randomness in the library.
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> counter,
                                           std::array<std::uint32_t, 2> key) noexcept;

/// Counter-based random stream.
///
/// Stream (seed, stream_id) maps to key = seed and counter words 2..3 =
/// stream_id; words 0..1 count 128-bit blocks. Distinct (seed, stream_id)
/// pairs therefore never share a block, and the output is identical across
/// platforms. Each block yields two 64-bit variates, consumed in order.
///
/// Satisfies std::uniform_random_bit_generator, but library code only uses
/// the explicit helpers below so that variate consumption stays documented.
class RngStream {
public:
    using result_type = std::uint64_t;

    RngStream() = default;
    RngStream(std::uint64_t seed, std::uint64_t stream_id) noexcept;

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept {
        return std::numeric_limits<result_type>::max();
    }

    /// One raw 64-bit variate.
    result_type operator()() noexcept { return next_u64(); }
    result_type next_u64() noexcept;

    /// Uniform on [0, 1) with 53 random bits. Consumes one variate.
    double uniform() noexcept;

    /// Uniform on {0, ..., n-1} via 128-bit multiply (bias <= n / 2^64).
    /// Consumes one variate.
    std::uint64_t uniform_index(std::uint64_t n) noexcept;

    /// Standard normal by Box-Muller. Consumes two variates per call; the
    /// second normal of the pair is discarded so consumption is fixed.
    double normal() noexcept;

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t stream_id() const noexcept { return stream_id_; }
    /// Number of 64-bit variates consumed so far.
    std::uint64_t position() const noexcept { return position_; }

    friend bool operator==(const RngStream&, const RngStream&) = default;

private:
    void refill() noexcept;

    std::uint64_t seed_ = 0;
    std::uint64_t stream_id_ = 0;
    std::uint64_t block_ = 0;
    std::uint64_t position_ = 0;
    std::array<std::uint64_t, 2> buffer_{};
    int buffered_ = 0;
};

/// Injective splitting (master_seed, replication_index) -> stream.
RngStream derive_stream(std::uint64_t master_seed, std::uint64_t replication_index) noexcept;

}  // namespace imcmc
