#ifndef CALIBGAN_SYNTHETIC_HPP
#define CALIBGAN_SYNTHETIC_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "dataset.hpp"
#include "json.hpp"
#include "random.hpp"

/**
 * @file synthetic.hpp
 * @brief Paired source/target batches with a known batch effect, for benchmarking calibration.
 */

namespace calibgan {

/** Gaussian mixture component with diagonal covariance. */
struct MixtureComponent {
    double weight = 1.0;
    std::vector<double> mean;
    std::vector<double> variance;
};

enum class Nonlinearity { none, tanh_warp };

std::string to_string(Nonlinearity kind);
Nonlinearity parse_nonlinearity(const std::string& name);

/**
 * Batch effect applied to source points: `y = scale * x + shift` per feature, then,
 * for `tanh_warp`, `y + warp_strength * tanh(y)` per feature (monotone, hence invertible).
 */
struct Distortion {
    std::vector<double> shift;
    std::vector<double> scale;
    Nonlinearity nonlinearity = Nonlinearity::none;
    double warp_strength = 0.2;

    Matrix apply(const Matrix& x) const;
    Matrix invert(const Matrix& y) const;

    nlohmann::json to_json() const;
    static Distortion from_json(const nlohmann::json& doc);
};

struct SyntheticSpec {
    std::size_t dim = 25;
    std::vector<MixtureComponent> components;
    Distortion distortion;
    std::size_t source_rows = 5000;
    std::size_t target_rows = 5000;
    std::uint64_t seed = 1;

    /**
     * Throws `ConfigError` naming the offending field: weights must be positive and sum to 1,
     * vectors must have length `dim`, variances and scales must be positive.
     */
    void validate() const;

    nlohmann::json to_json() const;

    /** Missing or mistyped fields throw `ConfigError` naming the field. */
    static SyntheticSpec from_json(const nlohmann::json& doc);
};

/**
 * Default benchmark: 25 features, 3 mixture components, 5000 rows per batch,
 * shift of 2 on every feature and a uniform 20% scale-up.
 * Component means and variances are drawn from `seed`.
 */
SyntheticSpec default_synthetic_spec(std::uint64_t seed = 1);

Matrix sample_mixture(const std::vector<MixtureComponent>& components, std::size_t dim, std::size_t rows, Rng& rng);

struct SyntheticPair {
    BatchDataset source;
    BatchDataset target;
    Distortion ground_truth;
};

/**
 * Target rows are plain mixture samples; source rows are independent mixture samples pushed through
 * the distortion. Deterministic in `spec.seed`.
 */
SyntheticPair generate_synthetic_pair(const SyntheticSpec& spec);

}

#endif
