#ifndef CALIBGAN_TRAINER_HPP
#define CALIBGAN_TRAINER_HPP

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "adam.hpp"
#include "matrix.hpp"
#include "mmd.hpp"
#include "networks.hpp"
#include "random.hpp"

/**
 * @file trainer.hpp
 * @brief Alternating adversarial training of the calibration generator.
 */

namespace calibgan {

struct TrainConfig {
    /** Rows drawn from each of source and target per iteration. */
    std::size_t batch_size = 256;
    std::size_t iterations = 2000;
    std::uint64_t seed = 1;
    std::size_t d_steps_per_g_step = 1;
    /** Record every `log_every`-th iteration, plus the first and the last. */
    std::size_t log_every = 1;

    std::size_t hidden_width = 64;
    std::size_t blocks = 2;
    std::size_t disc_hidden_width = 64;
    /** Start the generator as the identity map (zero closing layer in every residual branch). */
    bool identity_init = true;
    AdamOptions adam;
    BatchNormOptions batch_norm;

    /**
     * Evaluate the held-out monitor MMD every `mmd_every` iterations; 0 disables monitoring.
     * Monitor rows are split off both batches before training and never sampled into minibatches.
     */
    std::size_t mmd_every = 25;
    /** Stop once the monitor MMD has not improved for this many iterations; 0 disables early stopping. */
    std::size_t patience = 0;
    /** Rows held out per batch for monitoring, capped at a quarter of the batch. */
    std::size_t monitor_size = 500;
    /**
     * Return the generator with the lowest monitor MMD seen (the starting generator included)
     * instead of the last one. Has no effect without monitoring.
     */
    bool keep_best = true;

    /** Throws `ConfigError` for a batch size below 2, zero iterations or zero D steps. */
    void validate() const;
};

struct StepRecord {
    std::size_t iteration = 0;
    double d_loss = 0;
    double g_loss = 0;
    double mean_d_real = 0;
    double mean_d_fake = 0;
    std::optional<double> mmd2;
};

struct TrainLog {
    std::vector<StepRecord> records;
    std::size_t iterations_run = 0;
    bool stopped_early = false;
    /** Monitor MMD of the generator before the first step of this run, when monitoring. */
    std::optional<double> initial_mmd2;
    /** Iteration whose generator was returned as the selected one. */
    std::size_t selected_iteration = 0;

    /** Columns `iteration,c_d,c_g,mean_d_real,mean_d_fake,mmd2`; the last is empty when not computed. */
    std::string to_csv() const;
};

/** Everything that evolves during training. */
struct GanState {
    GeneratorNet generator;
    DiscriminatorNet discriminator;
    Adam generator_optimizer;
    Adam discriminator_optimizer;
    /** Stream used for minibatch sampling. */
    Rng sampler;
    /** Number of completed iterations. */
    std::size_t iteration = 0;

    /** Fresh networks for `dim` features, initialized from `config.seed`. */
    static GanState initialize(std::size_t dim, const TrainConfig& config);
};

/**
 * One iteration of alternating updates.
 *
 * 1. Draw `batch_size` rows from each of source and target.
 * 2. Discriminator phase: the generator maps the source rows (its parameters are not updated),
 *    the discriminator scores the stacked real and generated rows, and only the discriminator
 *    parameters take an Adam step on `discriminator_loss`.
 * 3. Generator phase: the updated discriminator rescores the same stacked batch and the
 *    non-saturating `generator_loss` is backpropagated through it into the generator; only the
 *    generator parameters take an Adam step and the discriminator gradients are discarded.
 *
 * Real and generated rows always pass through the discriminator together, so its batch-norm
 * layers see one joint set of minibatch statistics.
 * With `d_steps_per_g_step > 1` each extra discriminator step draws its own minibatch and the
 * generator phase reuses the last one.
 * Library errors raised inside the step are rethrown with the iteration number prepended.
 */
/** Called between the discriminator and generator phases of a step, e.g. to inspect parameters. */
using PhaseObserver = std::function<void(const GanState&)>;

StepRecord train_step(GanState& state, const Matrix& source, const Matrix& target, const TrainConfig& config,
                      const PhaseObserver& after_discriminator_phase = {});

struct TrainResult {
    /** Final training state, suitable for resuming. */
    GanState state;
    /** The generator to calibrate with: the best monitored one under `keep_best`, else the final one. */
    GeneratorNet selected;
    TrainLog log;
};

/** Monitor and training rows for one batch. */
struct HoldoutSplit {
    Matrix train;
    Matrix monitor;
};

/**
 * Split `min(monitor_size, rows / 4)` randomly chosen rows off `data` (at least 2 when possible).
 * Both parts keep the original row order.
 */
HoldoutSplit split_holdout(const Matrix& data, std::size_t monitor_size, Rng& rng);

/** Initialize and run `config.iterations` steps (or fewer, if early stopping triggers). */
TrainResult train(const Matrix& source, const Matrix& target, const TrainConfig& config);

/**
 * Continue from `state` until `config.iterations` iterations have completed in total.
 * The held-out split is recomputed from `config.seed`, so it matches the original run.
 */
TrainResult resume_training(GanState state, const Matrix& source, const Matrix& target, const TrainConfig& config);

/**
 * The calibration map: run the generator in inference mode, so each output row depends only on
 * the matching input row. Throws `ShapeError` if `source` does not have the generator's dimension.
 */
Matrix calibrate(const GeneratorNet& generator, const Matrix& source);

}

#endif
