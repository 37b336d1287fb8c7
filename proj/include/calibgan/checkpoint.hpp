#ifndef CALIBGAN_CHECKPOINT_HPP
#define CALIBGAN_CHECKPOINT_HPP

#include <filesystem>
#include <optional>
#include <string>

#include "dataset.hpp"
#include "json.hpp"
#include "trainer.hpp"

/**
 * @file checkpoint.hpp
 * @brief JSON checkpoints holding both networks, optimizer moments and sampler position.
 *
 * Layout (keys are emitted in sorted order, so equal states give byte-identical files):
 *
 *     {
 *       "schema": "calibgan.checkpoint", "schema_version": 1,
 *       "architecture": {"dim", "hidden_width", "blocks", "disc_hidden_width", "bn_epsilon", "bn_momentum"},
 *       "config": { ...TrainConfig... },
 *       "iteration": <completed iterations>,
 *       "generator":     {"parameters": {name: rows}, "buffers": {name: rows}},
 *       "discriminator": {"parameters": {name: rows}, "buffers": {name: rows}},
 *       "optimizer": {"generator": {"steps", "m": {name: rows}, "v": {name: rows}}, "discriminator": {...}},
 *       "rng": {"seed", "counter", "cached_normal"},
 *       "standardization": null | {"mean", "std", "fitted_on"}
 *     }
 */

namespace calibgan {

inline constexpr const char* checkpoint_schema = "calibgan.checkpoint";
inline constexpr int checkpoint_schema_version = 1;

struct Checkpoint {
    TrainConfig config;
    GanState state;
    /** Feature scaling applied before training; used to map calibrated output back to original units. */
    std::optional<StandardizationParams> standardization;
    /** Generator chosen by monitoring, when it differs from the final training state. */
    std::optional<GeneratorNet> selected;
    std::size_t selected_iteration = 0;
};

/** The generator used for calibration: `selected` if present, else the final one. */
const GeneratorNet& calibration_generator(const Checkpoint& checkpoint);

nlohmann::json train_config_to_json(const TrainConfig& config);

/** Fields absent from `doc` keep their defaults; mistyped fields throw `ConfigError`. */
TrainConfig train_config_from_json(const nlohmann::json& doc, TrainConfig base = {});

nlohmann::json checkpoint_to_json(const Checkpoint& checkpoint);

/** Throws `ParseError` on a wrong schema tag, missing parameters or mismatched shapes. */
Checkpoint checkpoint_from_json(const nlohmann::json& doc);

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}

#endif
