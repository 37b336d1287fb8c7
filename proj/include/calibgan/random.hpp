#ifndef CALIBGAN_RANDOM_HPP
#define CALIBGAN_RANDOM_HPP

#include <cstdint>
#include <optional>
#include <vector>

#include "matrix.hpp"

/**
 * @file random.hpp
 * @brief Seeded, bit-reproducible random number generation.
 */

namespace calibgan {

/**
 * Counter-based SplitMix64 generator.
 *
 * The i-th raw output (i = 1, 2, ...) is `mix64(seed + i * 0x9E3779B97F4A7C15)`, where `mix64` is the
 * SplitMix64 finalizer. The state is therefore just `(seed, counter)`, plus one cached normal deviate
 * from the Box-Muller pair. All derived quantities (uniforms, bounded integers, normals) are computed
 * here rather than by `<random>` distributions, whose output is implementation-defined.
 */
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : seed_(seed) {}

    std::uint64_t next_u64();

    /** Uniform in [0, 1) with 53 bits of resolution. */
    double uniform();

    /** Uniform integer in [0, n), unbiased (Lemire's method with rejection). `n` must be positive. */
    std::uint64_t below(std::uint64_t n);

    /** Standard normal deviate via Box-Muller. */
    double normal();

    /**
     * Independent stream keyed by `stream`; the parent is not advanced.
     * Used to give each consumer (weight init, minibatch sampling, protocol repeats) its own sequence.
     */
    Rng derive(std::uint64_t stream) const;

    std::uint64_t seed() const { return seed_; }
    std::uint64_t counter() const { return counter_; }
    std::optional<double> cached_normal() const { return spare_; }

    /** Rebuild a generator at an exact position, e.g. from a checkpoint. */
    static Rng restore(std::uint64_t seed, std::uint64_t counter, std::optional<double> spare);

    bool operator==(const Rng&) const = default;

private:
    std::uint64_t seed_ = 0;
    std::uint64_t counter_ = 0;
    std::optional<double> spare_;
};

/** The SplitMix64 output finalizer. */
std::uint64_t mix64(std::uint64_t x);

/**
 * Indices for drawing `n` items from a population of `population`.
 * Without replacement (partial Fisher-Yates) when `n <= population`, with replacement otherwise.
 */
std::vector<std::size_t> sample_indices(std::size_t population, std::size_t n, Rng& rng);

/**
 * Draw `n` rows of `a` using `sample_indices()`.
 * Throws `DomainError` if `a` has no rows or `n == 0`.
 */
Matrix sample_rows(const Matrix& a, std::size_t n, Rng& rng);

/** I.i.d. normal entries, filled row-major. `std == 0` yields a constant matrix; negative `std` throws `DomainError`. */
Matrix gaussian_matrix(std::size_t rows, std::size_t cols, double mean, double std, Rng& rng);

}

#endif
