#include "calibgan/trainer.hpp"
#include "calibgan/error.hpp"
#include "calibgan/losses.hpp"

#include <cstdio>
#include <limits>

namespace calibgan {

namespace {

enum Stream : std::uint64_t { generator_stream = 1, discriminator_stream = 2, minibatch_stream = 3, monitor_stream = 4 };

double column_mean(const Matrix& m) {
    return reduce_all(m, Stat::mean);
}

void check_data(const Matrix& source, const Matrix& target, std::size_t dim) {
    if (source.rows() == 0 || target.rows() == 0) {
        throw DomainError("training needs non-empty source and target (got " + source.shape_string() + " and " + target.shape_string() + ")");
    }
    if (source.cols() != target.cols()) {
        throw ShapeError("source " + source.shape_string() + " and target " + target.shape_string() + " differ in dimensionality");
    }
    if (source.cols() != dim) {
        throw ShapeError("data has " + std::to_string(source.cols()) + " features but the networks expect " + std::to_string(dim));
    }
}

template<typename E>
[[noreturn]] void rethrow_at(const E& e, std::size_t iteration) {
    throw E("iteration " + std::to_string(iteration) + ": " + e.what());
}

struct Minibatch {
    Matrix source;
    Matrix target;
};

Minibatch draw(GanState& state, const Matrix& source, const Matrix& target, std::size_t n) {
    Minibatch out;
    out.source = sample_rows(source, n, state.sampler);
    out.target = sample_rows(target, n, state.sampler);
    return out;
}

struct DiscriminatorPhase {
    double loss;
    double mean_real;
    double mean_fake;
};

DiscriminatorPhase discriminator_update(GanState& state, const Matrix& real, const Matrix& fake) {
    const std::size_t n = real.rows();
    auto& disc = state.discriminator;
    disc.zero_grad();
    const Matrix scores = disc.forward(vstack(real, fake), Mode::train);
    const Matrix d_real = slice_rows(scores, 0, n);
    const Matrix d_fake = slice_rows(scores, n, scores.rows());

    DiscriminatorPhase out{discriminator_loss(d_real, d_fake), column_mean(d_real), column_mean(d_fake)};
    disc.backward(vstack(discriminator_loss_grad_real(d_real), discriminator_loss_grad_fake(d_fake)));
    const auto params = disc.parameters();
    state.discriminator_optimizer.step(params);
    return out;
}

}

void TrainConfig::validate() const {
    if (batch_size < 2) {
        throw ConfigError("batch_size: must be at least 2 for batch normalization, got " + std::to_string(batch_size));
    }
    if (iterations < 1) {
        throw ConfigError("iterations: must be at least 1");
    }
    if (d_steps_per_g_step < 1) {
        throw ConfigError("d_steps_per_g_step: must be at least 1");
    }
    if (log_every < 1) {
        throw ConfigError("log_every: must be at least 1");
    }
    if (hidden_width < 1 || disc_hidden_width < 1) {
        throw ConfigError("hidden widths must be positive");
    }
    if (mmd_every > 0 && monitor_size < 2) {
        throw ConfigError("monitor_size: must be at least 2");
    }
    if (patience > 0 && mmd_every == 0) {
        throw ConfigError("patience: early stopping needs mmd_every > 0");
    }
}

std::string TrainLog::to_csv() const {
    std::string out = "iteration,c_d,c_g,mean_d_real,mean_d_fake,mmd2\n";
    char buffer[256];
    for (const auto& r : records) {
        std::snprintf(buffer, sizeof(buffer), "%zu,%.17g,%.17g,%.17g,%.17g,", r.iteration, r.d_loss, r.g_loss, r.mean_d_real, r.mean_d_fake);
        out += buffer;
        if (r.mmd2) {
            std::snprintf(buffer, sizeof(buffer), "%.17g", *r.mmd2);
            out += buffer;
        }
        out += '\n';
    }
    return out;
}

GanState GanState::initialize(std::size_t dim, const TrainConfig& config) {
    config.validate();
    const Rng root(config.seed);
    Rng g_rng = root.derive(generator_stream);
    Rng d_rng = root.derive(discriminator_stream);

    GeneratorOptions gopt;
    gopt.dim = dim;
    gopt.hidden = config.hidden_width;
    gopt.identity_init = config.identity_init;
    gopt.blocks = config.blocks;
    gopt.batch_norm = config.batch_norm;

    DiscriminatorOptions dopt;
    dopt.dim = dim;
    dopt.hidden = config.disc_hidden_width;
    dopt.batch_norm = config.batch_norm;

    return GanState{
        GeneratorNet(gopt, g_rng),
        DiscriminatorNet(dopt, d_rng),
        Adam(config.adam),
        Adam(config.adam),
        root.derive(minibatch_stream),
        0,
    };
}

StepRecord train_step(GanState& state, const Matrix& source, const Matrix& target, const TrainConfig& config,
                      const PhaseObserver& after_discriminator_phase) {
    const std::size_t iteration = state.iteration + 1;
    try {
        config.validate();
        check_data(source, target, state.generator.dim());

        Minibatch batch;
        Matrix fake;
        DiscriminatorPhase dphase{};
        for (std::size_t k = 0; k < config.d_steps_per_g_step; ++k) {
            batch = draw(state, source, target, config.batch_size);
            // Training-mode forward: caches are kept for the generator phase, no generator update here.
            fake = state.generator.forward(batch.source, Mode::train);
            dphase = discriminator_update(state, batch.target, fake);
        }
        if (after_discriminator_phase) {
            after_discriminator_phase(state);
        }

        // Generator phase on the last minibatch. The generator is unchanged since its forward pass,
        // so `fake` and the generator caches are exactly what a fresh forward would produce.
        const std::size_t n = batch.target.rows();
        auto& gen = state.generator;
        auto& disc = state.discriminator;
        gen.zero_grad();
        disc.zero_grad();
        // The scoring pass below must leave the discriminator as the discriminator phase left it,
        // running statistics included.
        std::vector<Matrix> disc_buffers;
        for (const auto& b : disc.buffers()) {
            disc_buffers.push_back(*b.value);
        }
        const Matrix scores = disc.forward(vstack(batch.target, fake), Mode::train);
        {
            auto buffers = disc.buffers();
            for (std::size_t i = 0; i < buffers.size(); ++i) {
                *buffers[i].value = disc_buffers[i];
            }
        }
        const Matrix d_fake = slice_rows(scores, n, scores.rows());
        const double g_loss = generator_loss(d_fake);

        // The discriminator's batch statistics are held fixed here: otherwise the generator could lower its
        // loss by spreading its output to inflate the pooled variance instead of moving toward the target.
        const Matrix upstream = vstack(Matrix(n, 1, 0.0), generator_loss_grad(d_fake));
        const Matrix grad_inputs = disc.backward(upstream, BatchStats::fixed);
        disc.zero_grad();
        gen.backward(slice_rows(grad_inputs, n, grad_inputs.rows()));
        const auto params = gen.parameters();
        state.generator_optimizer.step(params);

        state.iteration = iteration;
        StepRecord record;
        record.iteration = iteration;
        record.d_loss = dphase.loss;
        record.g_loss = g_loss;
        record.mean_d_real = dphase.mean_real;
        record.mean_d_fake = dphase.mean_fake;
        return record;
    } catch (const ConfigError&) {
        throw;
    } catch (const ShapeError& e) {
        rethrow_at(e, iteration);
    } catch (const NumericError& e) {
        rethrow_at(e, iteration);
    } catch (const DomainError& e) {
        rethrow_at(e, iteration);
    } catch (const StateError& e) {
        rethrow_at(e, iteration);
    }
}

HoldoutSplit split_holdout(const Matrix& data, std::size_t monitor_size, Rng& rng) {
    std::size_t n = std::min(monitor_size, data.rows() / 4);
    if (n < 2) {
        throw DomainError("cannot hold out monitor rows from a batch of " + std::to_string(data.rows()) + " rows");
    }
    std::vector<char> held(data.rows(), 0);
    for (std::size_t idx : sample_indices(data.rows(), n, rng)) {
        held[idx] = 1;
    }
    std::vector<std::size_t> train_idx, monitor_idx;
    for (std::size_t r = 0; r < data.rows(); ++r) {
        (held[r] ? monitor_idx : train_idx).push_back(r);
    }
    return {gather_rows(data, train_idx), gather_rows(data, monitor_idx)};
}

TrainResult resume_training(GanState state, const Matrix& source, const Matrix& target, const TrainConfig& config) {
    config.validate();
    check_data(source, target, state.generator.dim());
    require_finite(source, "source data");
    require_finite(target, "target data");

    const bool monitoring = config.mmd_every > 0;
    Matrix train_source = source;
    Matrix train_target = target;
    Matrix monitor_source, monitor_target;
    KernelSpec kernel;
    if (monitoring) {
        Rng rng = Rng(config.seed).derive(monitor_stream);
        auto s = split_holdout(source, config.monitor_size, rng);
        auto t = split_holdout(target, config.monitor_size, rng);
        train_source = std::move(s.train);
        monitor_source = std::move(s.monitor);
        train_target = std::move(t.train);
        monitor_target = std::move(t.monitor);
        kernel = median_heuristic(monitor_source, monitor_target, rng);
    }
    auto monitor_mmd = [&](const GeneratorNet& g) {
        return mmd2_estimate(calibrate(g, monitor_source), monitor_target, kernel);
    };

    TrainResult result{std::move(state), {}, {}};
    GanState& st = result.state;
    TrainLog& log = result.log;

    double best = std::numeric_limits<double>::infinity();
    std::size_t best_iteration = st.iteration;
    result.selected = st.generator;
    log.selected_iteration = st.iteration;
    if (monitoring) {
        best = monitor_mmd(st.generator);
        log.initial_mmd2 = best;
    }

    while (st.iteration < config.iterations) {
        StepRecord record = train_step(st, train_source, train_target, config);
        const std::size_t it = record.iteration;
        bool keep = it == 1 || it % config.log_every == 0 || it == config.iterations;

        if (monitoring && (it % config.mmd_every == 0 || it == config.iterations)) {
            const double value = monitor_mmd(st.generator);
            record.mmd2 = value;
            keep = true;
            if (value < best) {
                best = value;
                best_iteration = it;
                if (config.keep_best) {
                    result.selected = st.generator;
                    log.selected_iteration = it;
                }
            } else if (config.patience > 0 && it - best_iteration >= config.patience) {
                log.records.push_back(record);
                log.stopped_early = true;
                break;
            }
        }
        if (keep) {
            log.records.push_back(record);
        }
    }

    log.iterations_run = st.iteration;
    if (!monitoring || !config.keep_best) {
        result.selected = st.generator;
        log.selected_iteration = st.iteration;
    }
    return result;
}

TrainResult train(const Matrix& source, const Matrix& target, const TrainConfig& config) {
    config.validate();
    if (source.cols() != target.cols()) {
        throw ShapeError("source " + source.shape_string() + " and target " + target.shape_string() + " differ in dimensionality");
    }
    return resume_training(GanState::initialize(source.cols(), config), source, target, config);
}

Matrix calibrate(const GeneratorNet& generator, const Matrix& source) {
    if (source.cols() != generator.dim()) {
        throw ShapeError("calibrate: source " + source.shape_string() + " does not match the generator's " +
                         std::to_string(generator.dim()) + " features");
    }
    return generator.infer(source);
}

}
