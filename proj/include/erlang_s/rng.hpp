#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace erlangs {

/// SplitMix64 finalizer; used only to derive well-separated stream seeds.
[[nodiscard]] constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Seed of replication `index` under base seed `seed`.
[[nodiscard]] constexpr std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t index) noexcept
{
    return splitmix64(splitmix64(seed) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

/// mt19937_64 with hand-rolled variate generation: the standard library's
/// distributions are implementation-defined, the engine is not.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform on (0, 1), 53 random bits, never 0.
    double uniform() noexcept
    {
        return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
    }

    double exponential(double rate) noexcept { return -std::log(uniform()) / rate; }

    bool bernoulli(double p) noexcept { return uniform() < p; }

private:
    std::mt19937_64 engine_;
};

}  // namespace erlangs
