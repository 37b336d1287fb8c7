#include "calibgan/checkpoint.hpp"
#include "calibgan/error.hpp"


namespace calibgan {

using nlohmann::json;

namespace {

template<typename T>
void read_field(const json& doc, const char* name, T& out) {
    if (!doc.contains(name)) {
        return;
    }
    try {
        out = doc.at(name).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(std::string(name) + ": wrong type");
    }
}

json named_matrices(const std::vector<ParamRef>& params) {
    json out = json::object();
    for (const auto& p : params) {
        out[p.name] = matrix_to_json(*p.value);
    }
    return out;
}

json named_buffers(const std::vector<BufferRef>& buffers) {
    json out = json::object();
    for (const auto& b : buffers) {
        out[b.name] = matrix_to_json(*b.value);
    }
    return out;
}

json moments(const Adam& adam, const std::vector<ParamRef>& params) {
    json m = json::object();
    json v = json::object();
    const auto& first = adam.first_moments();
    const auto& second = adam.second_moments();
    for (std::size_t i = 0; i < first.size() && i < params.size(); ++i) {
        m[params[i].name] = matrix_to_json(first[i]);
        v[params[i].name] = matrix_to_json(second[i]);
    }
    return {{"steps", adam.steps()}, {"m", m}, {"v", v}};
}

void load_into(Matrix& dest, const json& group, const std::string& name, const std::string& where) {
    if (!group.is_object() || !group.contains(name)) {
        throw ParseError("checkpoint: missing " + where + " '" + name + "'");
    }
    Matrix value = matrix_from_json(group.at(name), "checkpoint " + where + " '" + name + "'");
    if (!value.same_shape(dest)) {
        throw ParseError("checkpoint: " + where + " '" + name + "' has shape " + value.shape_string() + ", expected " + dest.shape_string());
    }
    dest = std::move(value);
}

void restore_adam(Adam& adam, const json& doc, const std::vector<ParamRef>& params, const std::string& which) {
    const std::size_t steps = doc.at("steps").get<std::size_t>();
    const json& m = doc.at("m");
    const json& v = doc.at("v");
    if (m.empty()) {
        adam.restore(steps, {}, {});
        return;
    }
    std::vector<Matrix> first, second;
    for (const auto& p : params) {
        Matrix mm(p.value->rows(), p.value->cols());
        Matrix vv(p.value->rows(), p.value->cols());
        load_into(mm, m, p.name, which + " first moment");
        load_into(vv, v, p.name, which + " second moment");
        first.push_back(std::move(mm));
        second.push_back(std::move(vv));
    }
    adam.restore(steps, std::move(first), std::move(second));
}

}

json train_config_to_json(const TrainConfig& c) {
    return {
        {"batch_size", c.batch_size},
        {"iterations", c.iterations},
        {"seed", c.seed},
        {"d_steps_per_g_step", c.d_steps_per_g_step},
        {"log_every", c.log_every},
        {"hidden_width", c.hidden_width},
        {"blocks", c.blocks},
        {"disc_hidden_width", c.disc_hidden_width},
        {"identity_init", c.identity_init},
        {"learning_rate", c.adam.learning_rate},
        {"beta1", c.adam.beta1},
        {"beta2", c.adam.beta2},
        {"adam_epsilon", c.adam.epsilon},
        {"weight_decay", c.adam.weight_decay},
        {"clip_value", c.adam.clip_value},
        {"bn_epsilon", c.batch_norm.epsilon},
        {"bn_momentum", c.batch_norm.momentum},
        {"mmd_every", c.mmd_every},
        {"patience", c.patience},
        {"monitor_size", c.monitor_size},
        {"keep_best", c.keep_best},
    };
}

TrainConfig train_config_from_json(const json& doc, TrainConfig c) {
    if (!doc.is_object()) {
        throw ConfigError("training config: expected a JSON object");
    }
    read_field(doc, "batch_size", c.batch_size);
    read_field(doc, "iterations", c.iterations);
    read_field(doc, "seed", c.seed);
    read_field(doc, "d_steps_per_g_step", c.d_steps_per_g_step);
    read_field(doc, "log_every", c.log_every);
    read_field(doc, "hidden_width", c.hidden_width);
    read_field(doc, "blocks", c.blocks);
    read_field(doc, "disc_hidden_width", c.disc_hidden_width);
    read_field(doc, "identity_init", c.identity_init);
    read_field(doc, "learning_rate", c.adam.learning_rate);
    read_field(doc, "beta1", c.adam.beta1);
    read_field(doc, "beta2", c.adam.beta2);
    read_field(doc, "adam_epsilon", c.adam.epsilon);
    read_field(doc, "weight_decay", c.adam.weight_decay);
    read_field(doc, "clip_value", c.adam.clip_value);
    read_field(doc, "bn_epsilon", c.batch_norm.epsilon);
    read_field(doc, "bn_momentum", c.batch_norm.momentum);
    read_field(doc, "mmd_every", c.mmd_every);
    read_field(doc, "patience", c.patience);
    read_field(doc, "monitor_size", c.monitor_size);
    read_field(doc, "keep_best", c.keep_best);
    return c;
}

json checkpoint_to_json(const Checkpoint& checkpoint) {
    // Parameter views need mutable networks; serialize from a copy.
    GanState state = checkpoint.state;
    const auto gparams = state.generator.parameters();
    const auto dparams = state.discriminator.parameters();
    const auto& gopt = state.generator.options();

    json doc;
    doc["schema"] = checkpoint_schema;
    doc["schema_version"] = checkpoint_schema_version;
    doc["architecture"] = {
        {"dim", gopt.dim},
        {"hidden_width", gopt.hidden},
        {"blocks", gopt.blocks},
        {"disc_hidden_width", state.discriminator.options().hidden},
        {"bn_epsilon", gopt.batch_norm.epsilon},
        {"bn_momentum", gopt.batch_norm.momentum},
    };
    doc["config"] = train_config_to_json(checkpoint.config);
    doc["iteration"] = state.iteration;
    doc["generator"] = {{"parameters", named_matrices(gparams)}, {"buffers", named_buffers(state.generator.buffers())}};
    doc["discriminator"] = {{"parameters", named_matrices(dparams)}, {"buffers", named_buffers(state.discriminator.buffers())}};
    doc["optimizer"] = {
        {"generator", moments(state.generator_optimizer, gparams)},
        {"discriminator", moments(state.discriminator_optimizer, dparams)},
    };
    const auto spare = state.sampler.cached_normal();
    doc["rng"] = {
        {"seed", state.sampler.seed()},
        {"counter", state.sampler.counter()},
        {"cached_normal", spare ? json(*spare) : json(nullptr)},
    };
    doc["standardization"] = checkpoint.standardization ? checkpoint.standardization->to_json() : json(nullptr);
    if (checkpoint.selected) {
        GeneratorNet selected = *checkpoint.selected;
        doc["selected_generator"] = {
            {"iteration", checkpoint.selected_iteration},
            {"parameters", named_matrices(selected.parameters())},
            {"buffers", named_buffers(selected.buffers())},
        };
    } else {
        doc["selected_generator"] = nullptr;
    }
    return doc;
}

Checkpoint checkpoint_from_json(const json& doc) {
    try {
        if (!doc.is_object() || doc.value("schema", std::string()) != checkpoint_schema) {
            throw ParseError("checkpoint: missing or unknown schema tag");
        }
        if (doc.at("schema_version").get<int>() != checkpoint_schema_version) {
            throw ParseError("checkpoint: unsupported schema_version " + doc.at("schema_version").dump());
        }

        Checkpoint out;
        out.config = train_config_from_json(doc.at("config"));
        const json& arch = doc.at("architecture");
        out.config.hidden_width = arch.at("hidden_width").get<std::size_t>();
        out.config.blocks = arch.at("blocks").get<std::size_t>();
        out.config.disc_hidden_width = arch.at("disc_hidden_width").get<std::size_t>();
        out.config.batch_norm.epsilon = arch.at("bn_epsilon").get<double>();
        out.config.batch_norm.momentum = arch.at("bn_momentum").get<double>();
        const std::size_t dim = arch.at("dim").get<std::size_t>();

        out.state = GanState::initialize(dim, out.config);
        auto& state = out.state;
        state.iteration = doc.at("iteration").get<std::size_t>();

        const auto gparams = state.generator.parameters();
        for (const auto& p : gparams) {
            load_into(*p.value, doc.at("generator").at("parameters"), p.name, "generator parameter");
        }
        for (const auto& b : state.generator.buffers()) {
            load_into(*b.value, doc.at("generator").at("buffers"), b.name, "generator buffer");
        }
        const auto dparams = state.discriminator.parameters();
        for (const auto& p : dparams) {
            load_into(*p.value, doc.at("discriminator").at("parameters"), p.name, "discriminator parameter");
        }
        for (const auto& b : state.discriminator.buffers()) {
            load_into(*b.value, doc.at("discriminator").at("buffers"), b.name, "discriminator buffer");
        }

        restore_adam(state.generator_optimizer, doc.at("optimizer").at("generator"), gparams, "generator");
        restore_adam(state.discriminator_optimizer, doc.at("optimizer").at("discriminator"), dparams, "discriminator");

        const json& rng = doc.at("rng");
        std::optional<double> spare;
        if (!rng.at("cached_normal").is_null()) {
            spare = rng.at("cached_normal").get<double>();
        }
        state.sampler = Rng::restore(rng.at("seed").get<std::uint64_t>(), rng.at("counter").get<std::uint64_t>(), spare);

        if (doc.contains("standardization") && !doc.at("standardization").is_null()) {
            out.standardization = StandardizationParams::from_json(doc.at("standardization"));
            if (out.standardization->mean.cols() != dim) {
                throw ParseError("checkpoint: standardization has " + std::to_string(out.standardization->mean.cols()) +
                                 " features, networks have " + std::to_string(dim));
            }
        }
        if (doc.contains("selected_generator") && !doc.at("selected_generator").is_null()) {
            const json& sel = doc.at("selected_generator");
            GeneratorNet g = state.generator;
            for (const auto& p : g.parameters()) {
                load_into(*p.value, sel.at("parameters"), p.name, "selected generator parameter");
            }
            for (const auto& b : g.buffers()) {
                load_into(*b.value, sel.at("buffers"), b.name, "selected generator buffer");
            }
            out.selected = std::move(g);
            out.selected_iteration = sel.at("iteration").get<std::size_t>();
        } else {
            out.selected_iteration = state.iteration;
        }
        return out;
    } catch (const json::exception& e) {
        throw ParseError(std::string("checkpoint: ") + e.what());
    } catch (const ConfigError& e) {
        throw ParseError(std::string("checkpoint: ") + e.what());
    }
}

const GeneratorNet& calibration_generator(const Checkpoint& checkpoint) {
    return checkpoint.selected ? *checkpoint.selected : checkpoint.state.generator;
}

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
    write_json_atomic(path, checkpoint_to_json(checkpoint));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    return checkpoint_from_json(read_json(path));
}

}
