#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

namespace batchsched {

/// SplitMix64 finalizer. Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Counter-based generator: the i-th output of stream (seed, stream_id) is a
/// pure function of (seed, stream_id, i). Independent streams never share
/// state, so parallel workers stay reproducible regardless of scheduling.
///
/// Satisfies UniformRandomBitGenerator. The uniform/normal helpers are
/// implemented here rather than through <random> distributions so results are
/// identical across standard library implementations.
class CounterRng {
public:
    using result_type = std::uint64_t;

    CounterRng() = default;
    explicit CounterRng(std::uint64_t seed, std::uint64_t stream_id = 0)
        : key_(mix64(mix64(seed) ^ (stream_id * 0xd1b54a32d192ed03ULL + 0x632be59bd9b4e019ULL))) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept {
        return mix64(key_ ^ mix64(counter_++));
    }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() noexcept {
        return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [lo, hi] (inclusive). Multiply-shift; bias < 2^-32 for
    /// the small ranges used here.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) noexcept {
        const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
        const auto r = static_cast<unsigned __int128>((*this)()) * span;
        return lo + static_cast<std::int64_t>(r >> 64);
    }

    /// Standard normal via Box-Muller (one value per call).
    double normal() noexcept {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
    }

    std::uint64_t key() const noexcept { return key_; }
    std::uint64_t counter() const noexcept { return counter_; }
    void restore(std::uint64_t key, std::uint64_t counter) noexcept {
        key_ = key;
        counter_ = counter;
    }

    bool operator==(const CounterRng&) const = default;

private:
    std::uint64_t key_ = mix64(0);
    std::uint64_t counter_ = 0;
};

} // namespace batchsched
