#include "calibgan/random.hpp"
#include "calibgan/error.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

namespace calibgan {

namespace {

constexpr std::uint64_t golden_gamma = 0x9E3779B97F4A7C15ULL;

}

std::uint64_t mix64(std::uint64_t x) {
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::uint64_t Rng::next_u64() {
    ++counter_;
    return mix64(seed_ + counter_ * golden_gamma);
}

double Rng::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t Rng::below(std::uint64_t n) {
    if (n == 0) {
        throw DomainError("Rng::below: empty range");
    }
    // Lemire: multiply-high, rejecting the biased low region.
    std::uint64_t x = next_u64();
    unsigned __int128 m = static_cast<unsigned __int128>(x) * n;
    auto low = static_cast<std::uint64_t>(m);
    if (low < n) {
        const std::uint64_t threshold = (0 - n) % n;
        while (low < threshold) {
            x = next_u64();
            m = static_cast<unsigned __int128>(x) * n;
            low = static_cast<std::uint64_t>(m);
        }
    }
    return static_cast<std::uint64_t>(m >> 64);
}

double Rng::normal() {
    if (spare_) {
        const double out = *spare_;
        spare_.reset();
        return out;
    }
    double u1 = 0;
    do {
        u1 = uniform();
    } while (u1 == 0.0);
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    return radius * std::cos(angle);
}

Rng Rng::derive(std::uint64_t stream) const {
    return Rng(mix64(seed_ ^ mix64(stream + golden_gamma)));
}

Rng Rng::restore(std::uint64_t seed, std::uint64_t counter, std::optional<double> spare) {
    Rng out(seed);
    out.counter_ = counter;
    out.spare_ = spare;
    return out;
}

std::vector<std::size_t> sample_indices(std::size_t population, std::size_t n, Rng& rng) {
    if (population == 0) {
        throw DomainError("sample_indices: empty population");
    }
    if (n == 0) {
        throw DomainError("sample_indices: sample size must be at least 1");
    }

    std::vector<std::size_t> out;
    if (n > population) {
        out.resize(n);
        for (auto& idx : out) {
            idx = static_cast<std::size_t>(rng.below(population));
        }
        return out;
    }

    std::vector<std::size_t> pool(population);
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    for (std::size_t i = 0; i < n; ++i) {
        const auto j = i + static_cast<std::size_t>(rng.below(population - i));
        std::swap(pool[i], pool[j]);
    }
    pool.resize(n);
    return pool;
}

Matrix sample_rows(const Matrix& a, std::size_t n, Rng& rng) {
    if (a.rows() == 0) {
        throw DomainError("sample_rows: input matrix has no rows");
    }
    const auto idx = sample_indices(a.rows(), n, rng);
    return gather_rows(a, idx);
}

Matrix gaussian_matrix(std::size_t rows, std::size_t cols, double mean, double std, Rng& rng) {
    if (!(std >= 0.0)) {
        throw DomainError("gaussian_matrix: standard deviation must be non-negative, got " + std::to_string(std));
    }
    Matrix out(rows, cols, mean);
    if (std == 0.0) {
        return out;
    }
    for (auto& x : out.values()) {
        x = mean + std * rng.normal();
    }
    return out;
}

}
