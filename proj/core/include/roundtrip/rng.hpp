#pragma once

#include "roundtrip/matrix.hpp"

#include <cstddef>
#include <cstdint>
#include <span>

namespace roundtrip {

/// Well-known consumers of randomness. Each gets its own substream so that
/// adding draws in one place never shifts another consumer's sequence.
enum class Stream : std::uint64_t {
    Init = 1,
    LatentNoise = 2,
    DataShuffle = 3,
    Proposal = 4,
    Split = 5,
    Simulation = 6,
    Validation = 7,
};

/// xoshiro256** generator seeded through splitmix64.
///
/// The output sequence is fully specified here (including the Gaussian and
/// gamma transforms) rather than delegated to <random> distributions, whose
/// algorithms differ between standard library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t seed() const noexcept { return seed_; }

    /// Independent generator derived from (seed, key) only; the state of
    /// `*this` is neither used nor advanced.
    Rng substream(std::uint64_t key) const;
    Rng substream(Stream s) const { return substream(static_cast<std::uint64_t>(s)); }

    std::uint64_t next_u64() noexcept;
    /// Uniform on [0, 1) with 53 bits of resolution.
    double uniform01() noexcept;
    /// Uniform on [lo, hi).
    double uniform(double lo, double hi) noexcept;
    /// Uniform integer on [0, n). n must be positive.
    std::size_t below(std::size_t n) noexcept;
    double gaussian() noexcept;
    /// Gamma(shape, 1), Marsaglia-Tsang.
    double gamma(double shape);
    double chi_squared(double dof);

    template <typename T>
    void shuffle(std::span<T> items) noexcept {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::swap(items[i - 1], items[below(i)]);
        }
    }

private:
    std::uint64_t seed_;
    std::uint64_t state_[4];
    bool has_spare_ = false;
    double spare_ = 0.0;
};

Matrix rng_gaussian(Rng& rng, std::size_t rows, std::size_t cols);
Matrix rng_uniform(Rng& rng, double lo, double hi, std::size_t rows, std::size_t cols);
double rng_chi_squared(Rng& rng, double dof);

} // namespace roundtrip
