#pragma once

// Portable seeded random streams.
//
// Every random draw in the library goes through `moce::Rng`, a SplitMix64
// generator. SplitMix64 is counter based: the k-th output of a stream seeded
// with s is mix(s + k * 0x9E3779B97F4A7C15), so any implementation in any
// language reproduces the same sequence from the same integer seed.
//
// Derived quantities are specified bit-for-bit as well:
//   uniform()       (next() >> 11) * 2^-53, in [0, 1)
//   below(k)        rejection: draw x until x >= (2^64 - k) mod k, return x mod k
//   normal()        Box-Muller on u1 = ((next() >> 11) + 1) * 2^-53,
//                   u2 = (next() >> 11) * 2^-53; returns r cos(t), then r sin(t)
//   sample(pool,k)  partial Fisher-Yates: for i in [0,k) swap(i, i + below(m - i))
//
// Independent streams are keyed with derive_seed(base, stream, tag).

#include "moce/core.hpp"

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>

namespace moce {

inline constexpr const char* kRngName = "splitmix64";

constexpr std::uint64_t splitmix64_mix(std::uint64_t z) noexcept
{
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;

/// Seed of stream `stream` (e.g. a replicate index) under `base`, further
/// separated by a purpose `tag`. Distinct (stream, tag) pairs give unrelated streams.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream,
                                    std::uint64_t tag = 0) noexcept
{
    const std::uint64_t s = splitmix64_mix(base ^ splitmix64_mix((stream + 1) * kGoldenGamma));
    return splitmix64_mix(s + (tag + 1) * kGoldenGamma);
}

class Rng {
public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t seed) noexcept : state_(seed) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return ~result_type{0}; }
    result_type operator()() noexcept { return next(); }

    std::uint64_t next() noexcept
    {
        state_ += kGoldenGamma;
        return splitmix64_mix(state_);
    }

    double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, k). k must be positive.
    std::uint64_t below(std::uint64_t k) noexcept
    {
        const std::uint64_t threshold = (0 - k) % k;
        std::uint64_t x = next();
        while (x < threshold) x = next();
        return x % k;
    }

    double normal() noexcept
    {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = static_cast<double>((next() >> 11) + 1) * 0x1.0p-53;
        const double u2 = static_cast<double>(next() >> 11) * 0x1.0p-53;
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double t = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(t);
        has_spare_ = true;
        return r * std::cos(t);
    }

    /// Student t with `df` degrees of freedom, built from normals only.
    double student_t(int df) noexcept
    {
        const double z = normal();
        double chi2 = 0.0;
        for (int i = 0; i < df; ++i) {
            const double g = normal();
            chi2 += g * g;
        }
        return z / std::sqrt(chi2 / df);
    }

    /// `k` distinct elements of `pool`, in draw order.
    template <class T>
    std::vector<T> sample(std::span<const T> pool, std::size_t k)
    {
        detail::require(k <= pool.size(), "sample: k exceeds pool size");
        std::vector<T> work(pool.begin(), pool.end());
        const std::size_t m = work.size();
        for (std::size_t i = 0; i < k; ++i) {
            const auto j = i + static_cast<std::size_t>(below(m - i));
            std::swap(work[i], work[j]);
        }
        work.resize(k);
        return work;
    }

private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace moce
