#ifndef CALIBGAN_CLI_HPP
#define CALIBGAN_CLI_HPP

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"
#include "mmd.hpp"
#include "trainer.hpp"

/**
 * @file cli.hpp
 * @brief The `calibgan` command line: synth, train, calibrate, evaluate and pca subcommands.
 *
 * Settings resolve in three layers: built-in defaults, then an optional `--config` JSON file,
 * then explicit flags. Every command writes the resolved settings to `resolved_config.json`
 * in the output directory and appends a timestamped line to `run.log`; all other outputs are
 * pure functions of the settings and input files.
 *
 * Exit codes: 0 success, 1 runtime or data error, 2 usage or configuration error.
 */

namespace calibgan::cli {

struct RunConfig {
    std::string command;
    std::string source;
    std::string target;
    std::string calibrated;
    std::string model;
    /** Synthetic spec JSON for `synth`; empty means the built-in default. */
    std::string spec;
    std::string out_dir = ".";
    std::uint64_t seed = 1;
    TrainConfig train;
    /** Standardize with target statistics before training. */
    bool standardize = true;
    /** Comma-separated positive scales, or "median". */
    std::string kernel_scales = "median";
    std::size_t repeats = 100;
    std::size_t sample_size = 256;
    Estimator estimator = Estimator::biased;

    nlohmann::json to_json() const;
};

/** Apply the keys present in `doc` on top of `base`; unknown keys and wrong types throw `ConfigError`. */
RunConfig apply_config_json(RunConfig base, const nlohmann::json& doc);

/** Parse "median" (returns an empty spec) or a comma-separated scale list. */
KernelSpec parse_kernel_scales(const std::string& text);

int cmd_synth(const RunConfig& config, std::ostream& out);
int cmd_train(const RunConfig& config, std::ostream& out);
int cmd_calibrate(const RunConfig& config, std::ostream& out);
int cmd_evaluate(const RunConfig& config, std::ostream& out);
int cmd_pca(const RunConfig& config, std::ostream& out);

/** Full entry point; `args` excludes the program name. Never throws. */
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}

#endif
