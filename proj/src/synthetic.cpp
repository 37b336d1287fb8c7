#include "calibgan/synthetic.hpp"
#include "calibgan/error.hpp"

#include <cmath>

namespace calibgan {

std::string to_string(Nonlinearity kind) {
    return kind == Nonlinearity::none ? "none" : "tanh_warp";
}

Nonlinearity parse_nonlinearity(const std::string& name) {
    if (name == "none") return Nonlinearity::none;
    if (name == "tanh_warp") return Nonlinearity::tanh_warp;
    throw ConfigError("distortion.nonlinearity: unknown value '" + name + "', expected 'none' or 'tanh_warp'");
}

namespace {

void check_width(const Matrix& x, std::size_t expected, const char* what) {
    if (x.cols() != expected) {
        throw ShapeError(std::string(what) + ": data " + x.shape_string() + " does not match " + std::to_string(expected) + " features");
    }
}

// Solve y = u + a * tanh(u) for u; the map is strictly increasing for a > -1.
double unwarp(double y, double a) {
    double u = y;
    for (int it = 0; it < 100; ++it) {
        const double t = std::tanh(u);
        const double f = u + a * t - y;
        const double df = 1.0 + a * (1.0 - t * t);
        const double step = f / df;
        u -= step;
        if (std::abs(step) <= 1e-15 * (1.0 + std::abs(u))) {
            break;
        }
    }
    return u;
}

template<typename T>
T field(const nlohmann::json& doc, const std::string& name, const std::string& path) {
    if (!doc.is_object() || !doc.contains(name)) {
        throw ConfigError(path + name + ": missing field");
    }
    try {
        return doc.at(name).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError(path + name + ": wrong type");
    }
}

}

Matrix Distortion::apply(const Matrix& x) const {
    check_width(x, shift.size(), "distortion");
    Matrix out(x.rows(), x.cols());
    for (std::size_t r = 0; r < x.rows(); ++r) {
        for (std::size_t c = 0; c < x.cols(); ++c) {
            double y = scale[c] * x(r, c) + shift[c];
            if (nonlinearity == Nonlinearity::tanh_warp) {
                y += warp_strength * std::tanh(y);
            }
            out(r, c) = y;
        }
    }
    return out;
}

Matrix Distortion::invert(const Matrix& y) const {
    check_width(y, shift.size(), "inverse distortion");
    Matrix out(y.rows(), y.cols());
    for (std::size_t r = 0; r < y.rows(); ++r) {
        for (std::size_t c = 0; c < y.cols(); ++c) {
            double v = y(r, c);
            if (nonlinearity == Nonlinearity::tanh_warp) {
                v = unwarp(v, warp_strength);
            }
            out(r, c) = (v - shift[c]) / scale[c];
        }
    }
    return out;
}

nlohmann::json Distortion::to_json() const {
    return {
        {"shift", shift},
        {"scale", scale},
        {"nonlinearity", to_string(nonlinearity)},
        {"warp_strength", warp_strength},
    };
}

Distortion Distortion::from_json(const nlohmann::json& doc) {
    Distortion out;
    out.shift = field<std::vector<double> >(doc, "shift", "distortion.");
    out.scale = field<std::vector<double> >(doc, "scale", "distortion.");
    if (doc.contains("nonlinearity")) {
        out.nonlinearity = parse_nonlinearity(field<std::string>(doc, "nonlinearity", "distortion."));
    }
    if (doc.contains("warp_strength")) {
        out.warp_strength = field<double>(doc, "warp_strength", "distortion.");
    }
    return out;
}

void SyntheticSpec::validate() const {
    if (dim == 0) {
        throw ConfigError("dim: must be positive");
    }
    if (components.empty()) {
        throw ConfigError("components: at least one mixture component is required");
    }
    double total = 0;
    for (std::size_t k = 0; k < components.size(); ++k) {
        const auto& comp = components[k];
        const std::string where = "components[" + std::to_string(k) + "].";
        if (!(comp.weight > 0)) {
            throw ConfigError(where + "weight: must be positive");
        }
        if (comp.mean.size() != dim) {
            throw ConfigError(where + "mean: expected " + std::to_string(dim) + " entries");
        }
        if (comp.variance.size() != dim) {
            throw ConfigError(where + "variance: expected " + std::to_string(dim) + " entries");
        }
        for (double v : comp.variance) {
            if (!(v > 0)) {
                throw ConfigError(where + "variance: entries must be positive");
            }
        }
        total += comp.weight;
    }
    if (std::abs(total - 1.0) > 1e-9) {
        throw ConfigError("components.weight: weights must sum to 1, got " + std::to_string(total));
    }
    if (distortion.shift.size() != dim) {
        throw ConfigError("distortion.shift: expected " + std::to_string(dim) + " entries");
    }
    if (distortion.scale.size() != dim) {
        throw ConfigError("distortion.scale: expected " + std::to_string(dim) + " entries");
    }
    for (double s : distortion.scale) {
        if (!(s > 0)) {
            throw ConfigError("distortion.scale: entries must be positive");
        }
    }
    if (!(distortion.warp_strength > -1.0)) {
        throw ConfigError("distortion.warp_strength: must exceed -1 for the warp to stay invertible");
    }
    if (source_rows == 0 || target_rows == 0) {
        throw ConfigError("source_rows/target_rows: must be positive");
    }
}

nlohmann::json SyntheticSpec::to_json() const {
    nlohmann::json comps = nlohmann::json::array();
    for (const auto& c : components) {
        comps.push_back({{"weight", c.weight}, {"mean", c.mean}, {"variance", c.variance}});
    }
    return {
        {"dim", dim},
        {"components", comps},
        {"distortion", distortion.to_json()},
        {"source_rows", source_rows},
        {"target_rows", target_rows},
        {"seed", seed},
    };
}

SyntheticSpec SyntheticSpec::from_json(const nlohmann::json& doc) {
    if (!doc.is_object()) {
        throw ConfigError("synthetic spec: expected a JSON object");
    }
    SyntheticSpec out;
    out.dim = field<std::size_t>(doc, "dim", "");
    const auto comps = field<nlohmann::json>(doc, "components", "");
    if (!comps.is_array()) {
        throw ConfigError("components: expected an array");
    }
    for (std::size_t k = 0; k < comps.size(); ++k) {
        const std::string where = "components[" + std::to_string(k) + "].";
        MixtureComponent c;
        c.weight = field<double>(comps[k], "weight", where);
        c.mean = field<std::vector<double> >(comps[k], "mean", where);
        c.variance = field<std::vector<double> >(comps[k], "variance", where);
        out.components.push_back(std::move(c));
    }
    out.distortion = Distortion::from_json(field<nlohmann::json>(doc, "distortion", ""));
    if (doc.contains("source_rows")) out.source_rows = field<std::size_t>(doc, "source_rows", "");
    if (doc.contains("target_rows")) out.target_rows = field<std::size_t>(doc, "target_rows", "");
    if (doc.contains("seed")) out.seed = field<std::uint64_t>(doc, "seed", "");
    out.validate();
    return out;
}

SyntheticSpec default_synthetic_spec(std::uint64_t seed) {
    SyntheticSpec spec;
    spec.dim = 25;
    spec.seed = seed;
    Rng rng = Rng(seed).derive(0x5EC);
    const double weights[] = {0.5, 0.3, 0.2};
    for (double w : weights) {
        MixtureComponent c;
        c.weight = w;
        for (std::size_t j = 0; j < spec.dim; ++j) {
            c.mean.push_back(rng.normal());
            c.variance.push_back(0.25 + 0.5 * rng.uniform());
        }
        spec.components.push_back(std::move(c));
    }
    spec.distortion.shift.assign(spec.dim, 2.0);
    spec.distortion.scale.assign(spec.dim, 1.2);
    return spec;
}

Matrix sample_mixture(const std::vector<MixtureComponent>& components, std::size_t dim, std::size_t rows, Rng& rng) {
    std::vector<double> cumulative;
    double acc = 0;
    for (const auto& c : components) {
        acc += c.weight;
        cumulative.push_back(acc);
    }

    Matrix out(rows, dim);
    for (std::size_t r = 0; r < rows; ++r) {
        const double u = rng.uniform() * acc;
        std::size_t k = 0;
        while (k + 1 < cumulative.size() && u >= cumulative[k]) {
            ++k;
        }
        const auto& comp = components[k];
        auto row = out.row(r);
        for (std::size_t j = 0; j < dim; ++j) {
            row[j] = comp.mean[j] + std::sqrt(comp.variance[j]) * rng.normal();
        }
    }
    return out;
}

SyntheticPair generate_synthetic_pair(const SyntheticSpec& spec) {
    spec.validate();
    const Rng root(spec.seed);
    Rng target_rng = root.derive(1);
    Rng source_rng = root.derive(2);

    SyntheticPair pair;
    pair.ground_truth = spec.distortion;

    pair.target.data = sample_mixture(spec.components, spec.dim, spec.target_rows, target_rng);
    pair.target.feature_names = default_feature_names(spec.dim);
    pair.target.role = Role::target;
    pair.target.provenance = "synthetic target, seed " + std::to_string(spec.seed);

    pair.source.data = spec.distortion.apply(sample_mixture(spec.components, spec.dim, spec.source_rows, source_rng));
    pair.source.feature_names = default_feature_names(spec.dim);
    pair.source.role = Role::source;
    pair.source.provenance = "synthetic source, seed " + std::to_string(spec.seed);
    return pair;
}

}
