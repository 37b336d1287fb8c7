#include "calibgan/cli.hpp"
#include "calibgan/checkpoint.hpp"
#include "calibgan/dataset.hpp"
#include "calibgan/error.hpp"
#include "calibgan/pca.hpp"
#include "calibgan/synthetic.hpp"

#include "CLI11.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

namespace calibgan::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_runtime = 1;
constexpr int exit_usage = 2;

// Stream keys under the run seed.
constexpr std::uint64_t kernel_stream = 11;
constexpr std::uint64_t protocol_stream = 12;

const std::set<std::string> run_keys = {
    "command", "source", "target", "calibrated", "model", "spec", "out_dir", "seed",
    "standardize", "kernel_scales", "repeats", "sample_size", "estimator",
};

const std::set<std::string> train_keys = {
    "batch_size", "iterations", "d_steps_per_g_step", "log_every", "hidden_width", "blocks",
    "disc_hidden_width", "learning_rate", "beta1", "beta2", "adam_epsilon", "weight_decay",
    "clip_value", "bn_epsilon", "bn_momentum", "mmd_every", "patience", "monitor_size",
    "keep_best", "identity_init",
};

template<typename T>
void read_key(const json& doc, const std::string& key, T& out) {
    if (!doc.contains(key)) {
        return;
    }
    try {
        out = doc.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("config key '" + key + "': wrong type");
    }
}

std::string timestamp() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buffer[32];
    std::strftime(buffer, sizeof(buffer), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buffer;
}

fs::path prepare_out_dir(const RunConfig& config) {
    fs::path dir(config.out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());
    }
    return dir;
}

// Record the resolved settings next to the outputs; only run.log carries wall-clock time.
void record_run(const RunConfig& config, const fs::path& dir) {
    write_json_atomic(dir / "resolved_config.json", config.to_json());
    std::ofstream log(dir / "run.log", std::ios::app);
    if (log) {
        log << timestamp() << " " << config.command << " completed\n";
    }
}

const std::string& require_path(const std::string& value, const char* flag) {
    if (value.empty()) {
        throw ConfigError(std::string("missing required option ") + flag);
    }
    return value;
}

BatchDataset load_input(const std::string& path, const char* flag, Role role) {
    return load_csv(require_path(path, flag), true, role);
}

json summary_json(const Summary& s) {
    return {{"min", s.min}, {"q1", s.q1}, {"median", s.median}, {"q3", s.q3}, {"max", s.max}, {"mean", s.mean}};
}

json report_json(const MmdReport& report) {
    return {
        {"values", report.values},
        {"summary", summary_json(report.summary)},
        {"with_replacement", report.with_replacement},
    };
}

std::string coords_csv(const Matrix& coords, const std::vector<std::string>& labels) {
    std::string out = "pc1,pc2,label\n";
    char buffer[96];
    for (std::size_t r = 0; r < coords.rows(); ++r) {
        std::snprintf(buffer, sizeof(buffer), "%.17g,%.17g,", coords(r, 0), coords(r, 1));
        out += buffer;
        out += labels[r];
        out += '\n';
    }
    return out;
}

struct PairProjection {
    PcaModel model;
    Matrix coords;
    std::vector<int> groups;
    Separation separation;
};

PairProjection project_pair(const Matrix& first, const Matrix& second) {
    if (first.cols() != second.cols()) {
        throw ShapeError("pca: inputs " + first.shape_string() + " and " + second.shape_string() + " differ in dimensionality");
    }
    PairProjection out;
    const Matrix pooled = vstack(first, second);
    out.model = pca_fit(pooled, 2);
    out.coords = pca_project(out.model, pooled);
    out.groups.assign(first.rows(), 0);
    out.groups.resize(pooled.rows(), 1);
    out.separation = label_separation(out.coords, out.groups);
    return out;
}

json projection_json(const PairProjection& p) {
    return {
        {"explained_variance", p.model.explained_variance},
        {"centroid_distance", p.separation.centroid_distance},
        {"within_std", p.separation.within_std},
        {"separation_ratio", p.separation.ratio},
    };
}

}

json RunConfig::to_json() const {
    json doc = train_config_to_json(train);
    doc["schema_version"] = 1;
    doc["command"] = command;
    doc["source"] = source;
    doc["target"] = target;
    doc["calibrated"] = calibrated;
    doc["model"] = model;
    doc["spec"] = spec;
    doc["out_dir"] = out_dir;
    doc["seed"] = seed;
    doc["standardize"] = standardize;
    doc["kernel_scales"] = kernel_scales;
    doc["repeats"] = repeats;
    doc["sample_size"] = sample_size;
    doc["estimator"] = to_string(estimator);
    return doc;
}

RunConfig apply_config_json(RunConfig base, const json& doc) {
    if (!doc.is_object()) {
        throw ConfigError("config file: expected a JSON object");
    }
    for (const auto& [key, value] : doc.items()) {
        if (key != "schema_version" && !run_keys.count(key) && !train_keys.count(key)) {
            throw ConfigError("config file: unknown key '" + key + "'");
        }
    }
    read_key(doc, "source", base.source);
    read_key(doc, "target", base.target);
    read_key(doc, "calibrated", base.calibrated);
    read_key(doc, "model", base.model);
    read_key(doc, "spec", base.spec);
    read_key(doc, "out_dir", base.out_dir);
    read_key(doc, "seed", base.seed);
    read_key(doc, "standardize", base.standardize);
    read_key(doc, "kernel_scales", base.kernel_scales);
    read_key(doc, "repeats", base.repeats);
    read_key(doc, "sample_size", base.sample_size);
    if (doc.contains("estimator")) {
        std::string name;
        read_key(doc, "estimator", name);
        base.estimator = parse_estimator(name);
    }
    base.train = train_config_from_json(doc, base.train);
    base.train.seed = base.seed;
    return base;
}

KernelSpec parse_kernel_scales(const std::string& text) {
    if (text == "median") {
        return {};
    }
    KernelSpec spec;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        try {
            std::size_t used = 0;
            const double v = std::stod(item, &used);
            if (used != item.size()) {
                throw std::invalid_argument(item);
            }
            spec.scales.push_back(v);
        } catch (const std::logic_error&) {
            throw ConfigError("--kernel-scales: '" + item + "' is not a number");
        }
    }
    try {
        spec.validate();
    } catch (const DomainError& e) {
        throw ConfigError(std::string("--kernel-scales: ") + e.what());
    }
    return spec;
}

int cmd_synth(const RunConfig& config, std::ostream& out) {
    SyntheticSpec spec;
    if (config.spec.empty()) {
        spec = default_synthetic_spec(config.seed);
    } else {
        json doc;
        try {
            doc = read_json(config.spec);
        } catch (const ParseError& e) {
            throw ConfigError(e.what());
        }
        spec = SyntheticSpec::from_json(doc);
        spec.seed = config.seed;
    }

    const auto pair = generate_synthetic_pair(spec);
    const fs::path dir = prepare_out_dir(config);
    save_csv(pair.source, dir / "source.csv");
    save_csv(pair.target, dir / "target.csv");
    write_json_atomic(dir / "ground_truth.json", {
        {"schema_version", 1},
        {"spec", spec.to_json()},
        {"distortion", pair.ground_truth.to_json()},
    });
    record_run(config, dir);
    out << "wrote " << pair.source.data.shape_string() << " source and " << pair.target.data.shape_string()
        << " target batches to " << dir.string() << "\n";
    return exit_ok;
}

int cmd_train(const RunConfig& config, std::ostream& out) {
    config.train.validate();
    const auto source = load_input(config.source, "--source", Role::source);
    const auto target = load_input(config.target, "--target", Role::target);
    if (source.data.cols() != target.data.cols()) {
        throw ShapeError("source " + source.data.shape_string() + " and target " + target.data.shape_string() +
                         " differ in dimensionality");
    }

    Checkpoint checkpoint;
    checkpoint.config = config.train;
    Matrix s = source.data;
    Matrix t = target.data;
    if (config.standardize) {
        checkpoint.standardization = fit_standardize(target);
        s = checkpoint.standardization->apply(s);
        t = checkpoint.standardization->apply(t);
    }

    auto result = train(s, t, config.train);
    checkpoint.state = std::move(result.state);
    if (result.log.selected_iteration != checkpoint.state.iteration) {
        checkpoint.selected = std::move(result.selected);
    }
    checkpoint.selected_iteration = result.log.selected_iteration;

    const fs::path dir = prepare_out_dir(config);
    save_checkpoint(checkpoint, dir / "model.json");
    write_file_atomic(dir / "train_log.csv", result.log.to_csv());
    record_run(config, dir);
    out << "trained " << result.log.iterations_run << " iterations" << (result.log.stopped_early ? " (early stop)" : "")
        << ", selected iteration " << result.log.selected_iteration << "; wrote " << (dir / "model.json").string() << "\n";
    return exit_ok;
}

int cmd_calibrate(const RunConfig& config, std::ostream& out) {
    const Checkpoint checkpoint = load_checkpoint(require_path(config.model, "--model"));
    const auto source = load_input(config.source, "--source", Role::source);
    const std::size_t dim = checkpoint.state.generator.dim();
    if (source.data.cols() != dim) {
        throw ShapeError("source " + source.data.shape_string() + " does not match the model's " + std::to_string(dim) + " features");
    }

    Matrix z = checkpoint.standardization ? checkpoint.standardization->apply(source.data) : source.data;
    Matrix mapped = calibrate(calibration_generator(checkpoint), z);
    if (checkpoint.standardization) {
        mapped = checkpoint.standardization->invert(mapped);
    }

    BatchDataset calibrated{std::move(mapped), source.feature_names, Role::calibrated, "calibrated " + source.provenance};
    const fs::path dir = prepare_out_dir(config);
    save_csv(calibrated, dir / "calibrated.csv");
    record_run(config, dir);
    out << "calibrated " << calibrated.data.rows() << " rows; wrote " << (dir / "calibrated.csv").string() << "\n";
    return exit_ok;
}

int cmd_evaluate(const RunConfig& config, std::ostream& out) {
    const auto source = load_input(config.source, "--source", Role::source);
    const auto target = load_input(config.target, "--target", Role::target);
    if (source.data.cols() != target.data.cols()) {
        throw ShapeError("source " + source.data.shape_string() + " and target " + target.data.shape_string() +
                         " differ in dimensionality");
    }

    const Rng root(config.seed);
    KernelSpec kernel = parse_kernel_scales(config.kernel_scales);
    if (kernel.scales.empty()) {
        Rng rng = root.derive(kernel_stream);
        kernel = median_heuristic(source.data, target.data, rng);
    }

    MmdProtocolOptions options;
    options.sample_size = config.sample_size;
    options.repeats = config.repeats;
    options.estimator = config.estimator;

    // The same protocol stream for both pairs gives paired subsamples of the target.
    const Rng protocol = root.derive(protocol_stream);
    const MmdReport raw = mmd_protocol(source.data, target.data, kernel, protocol, options);

    json doc;
    doc["schema_version"] = 1;
    doc["kernel"] = {{"scales", kernel.scales}, {"selection", config.kernel_scales == "median" ? "median" : "explicit"}};
    doc["estimator"] = to_string(config.estimator);
    doc["sample_size"] = config.sample_size;
    doc["repeats"] = config.repeats;
    doc["seed"] = config.seed;
    doc["pairs"]["raw"] = report_json(raw);

    std::string csv = "repeat,raw";
    std::optional<MmdReport> post;
    if (!config.calibrated.empty()) {
        const auto calibrated = load_input(config.calibrated, "--calibrated", Role::calibrated);
        if (calibrated.data.cols() != target.data.cols()) {
            throw ShapeError("calibrated " + calibrated.data.shape_string() + " and target " + target.data.shape_string() +
                             " differ in dimensionality");
        }
        post = mmd_protocol(calibrated.data, target.data, kernel, protocol, options);
        doc["pairs"]["calibrated"] = report_json(*post);
        doc["median_ratio"] = raw.summary.median > 0 ? post->summary.median / raw.summary.median : 0.0;
        csv += ",calibrated";
    }
    csv += '\n';
    char buffer[64];
    for (std::size_t r = 0; r < raw.values.size(); ++r) {
        csv += std::to_string(r);
        std::snprintf(buffer, sizeof(buffer), ",%.17g", raw.values[r]);
        csv += buffer;
        if (post) {
            std::snprintf(buffer, sizeof(buffer), ",%.17g", post->values[r]);
            csv += buffer;
        }
        csv += '\n';
    }

    const fs::path dir = prepare_out_dir(config);
    write_json_atomic(dir / "mmd_report.json", doc);
    write_file_atomic(dir / "mmd_repeats.csv", csv);
    record_run(config, dir);
    out << "median MMD^2 raw " << raw.summary.median;
    if (post) {
        out << ", calibrated " << post->summary.median;
    }
    out << "\n";
    return exit_ok;
}

int cmd_pca(const RunConfig& config, std::ostream& out) {
    const auto source = load_input(config.source, "--source", Role::source);
    const auto target = load_input(config.target, "--target", Role::target);
    const fs::path dir = prepare_out_dir(config);

    json summary;
    summary["schema_version"] = 1;

    const PairProjection pre = project_pair(source.data, target.data);
    std::vector<std::string> labels(source.data.rows(), "source");
    labels.resize(pre.coords.rows(), "target");
    write_file_atomic(dir / "pca_pre.csv", coords_csv(pre.coords, labels));
    summary["pre"] = projection_json(pre);
    out << "pre-calibration separation ratio " << pre.separation.ratio;

    if (!config.calibrated.empty()) {
        const auto calibrated = load_input(config.calibrated, "--calibrated", Role::calibrated);
        const PairProjection post = project_pair(calibrated.data, target.data);
        std::vector<std::string> post_labels(calibrated.data.rows(), "calibrated");
        post_labels.resize(post.coords.rows(), "target");
        write_file_atomic(dir / "pca_post.csv", coords_csv(post.coords, post_labels));
        summary["post"] = projection_json(post);
        out << ", post-calibration " << post.separation.ratio;
    }
    out << "\n";

    write_json_atomic(dir / "pca_summary.json", summary);
    record_run(config, dir);
    return exit_ok;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Adversarial batch-effect calibration for tabular data", "calibgan"};
    app.require_subcommand(1);

    struct Flags {
        std::string config_file;
        RunConfig values;
        std::string estimator = "biased";
        bool no_standardize = false;
    } flags;

    struct Command {
        CLI::App* app;
        std::map<std::string, CLI::Option*> options;
        bool given(const std::string& name) const {
            auto it = options.find(name);
            return it != options.end() && it->second->count() > 0;
        }
    };
    std::map<std::string, Command> commands;

    auto& v = flags.values;
    auto add = [&](const std::string& name, const std::string& help, std::initializer_list<std::string> opts) {
        Command cmd{app.add_subcommand(name, help), {}};
        cmd.options["config"] = cmd.app->add_option("--config", flags.config_file, "JSON config file; flags override it");
        cmd.options["out-dir"] = cmd.app->add_option("--out-dir", v.out_dir, "Output directory");
        cmd.options["seed"] = cmd.app->add_option("--seed", v.seed, "Random seed");
        for (const auto& o : opts) {
            if (o == "source") cmd.options[o] = cmd.app->add_option("--source", v.source, "Source batch CSV");
            if (o == "target") cmd.options[o] = cmd.app->add_option("--target", v.target, "Target batch CSV");
            if (o == "calibrated") cmd.options[o] = cmd.app->add_option("--calibrated", v.calibrated, "Calibrated source CSV");
            if (o == "model") cmd.options[o] = cmd.app->add_option("--model", v.model, "Checkpoint JSON");
            if (o == "spec") cmd.options[o] = cmd.app->add_option("--spec", v.spec, "Synthetic spec JSON");
            if (o == "train") {
                cmd.options["iterations"] = cmd.app->add_option("--iterations", v.train.iterations, "Training iterations");
                cmd.options["batch-size"] = cmd.app->add_option("--batch-size", v.train.batch_size, "Rows drawn per batch and iteration");
                cmd.options["hidden-width"] = cmd.app->add_option("--hidden-width", v.train.hidden_width, "Residual block width");
                cmd.options["blocks"] = cmd.app->add_option("--blocks", v.train.blocks, "Number of residual blocks");
                cmd.options["log-every"] = cmd.app->add_option("--log-every", v.train.log_every, "Log interval");
                cmd.options["mmd-every"] = cmd.app->add_option("--mmd-every", v.train.mmd_every, "Monitor MMD interval (0 = off)");
                cmd.options["patience"] = cmd.app->add_option("--patience", v.train.patience, "Early-stop patience (0 = off)");
                cmd.options["no-standardize"] = cmd.app->add_flag("--no-standardize", flags.no_standardize, "Train on raw feature values");
            }
            if (o == "mmd") {
                cmd.options["kernel-scales"] = cmd.app->add_option("--kernel-scales", v.kernel_scales, "Comma-separated scales or 'median'");
                cmd.options["repeats"] = cmd.app->add_option("--repeats", v.repeats, "Protocol repeats");
                cmd.options["sample-size"] = cmd.app->add_option("--sample-size", v.sample_size, "Rows per protocol subsample");
                cmd.options["estimator"] = cmd.app->add_option("--estimator", flags.estimator, "biased or unbiased")
                                               ->check(CLI::IsMember({"biased", "unbiased"}));
            }
        }
        commands[name] = cmd;
    };

    add("synth", "Generate a synthetic source/target pair", {"spec"});
    add("train", "Train the calibration generator", {"source", "target", "train"});
    add("calibrate", "Apply a trained generator to a source batch", {"source", "model"});
    add("evaluate", "Resampled MMD report before and after calibration", {"source", "target", "calibrated", "mmd"});
    add("pca", "Two-component PCA coordinates for plotting", {"source", "target", "calibrated"});

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return exit_ok;
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            out << app.help();
            return exit_ok;
        }
        err << "error: " << e.what() << "\n";
        return exit_usage;
    }

    std::string name;
    for (const auto& [key, cmd] : commands) {
        if (cmd.app->parsed()) {
            name = key;
        }
    }
    const Command& cmd = commands.at(name);

    try {
        RunConfig config;
        if (!flags.config_file.empty()) {
            json doc;
            try {
                doc = read_json(flags.config_file);
            } catch (const Error& e) {
                throw ConfigError(e.what());
            }
            config = apply_config_json(config, doc);
        }
        // Explicit flags win over the config file.
        if (cmd.given("out-dir")) config.out_dir = v.out_dir;
        if (cmd.given("seed")) config.seed = v.seed;
        if (cmd.given("source")) config.source = v.source;
        if (cmd.given("target")) config.target = v.target;
        if (cmd.given("calibrated")) config.calibrated = v.calibrated;
        if (cmd.given("model")) config.model = v.model;
        if (cmd.given("spec")) config.spec = v.spec;
        if (cmd.given("iterations")) config.train.iterations = v.train.iterations;
        if (cmd.given("batch-size")) config.train.batch_size = v.train.batch_size;
        if (cmd.given("hidden-width")) config.train.hidden_width = v.train.hidden_width;
        if (cmd.given("blocks")) config.train.blocks = v.train.blocks;
        if (cmd.given("log-every")) config.train.log_every = v.train.log_every;
        if (cmd.given("mmd-every")) config.train.mmd_every = v.train.mmd_every;
        if (cmd.given("patience")) config.train.patience = v.train.patience;
        if (cmd.given("no-standardize")) config.standardize = false;
        if (cmd.given("kernel-scales")) config.kernel_scales = v.kernel_scales;
        if (cmd.given("repeats")) config.repeats = v.repeats;
        if (cmd.given("sample-size")) config.sample_size = v.sample_size;
        if (cmd.given("estimator")) config.estimator = parse_estimator(flags.estimator);
        config.train.seed = config.seed;
        config.command = name;

        if (config.repeats == 0 || config.sample_size == 0) {
            throw ConfigError("--repeats and --sample-size must be positive");
        }
        parse_kernel_scales(config.kernel_scales);

        if (name == "synth") return cmd_synth(config, out);
        if (name == "train") return cmd_train(config, out);
        if (name == "calibrate") return cmd_calibrate(config, out);
        if (name == "evaluate") return cmd_evaluate(config, out);
        return cmd_pca(config, out);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return exit_usage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return exit_runtime;
    }
}

}
