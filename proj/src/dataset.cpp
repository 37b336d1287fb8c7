#include "calibgan/dataset.hpp"
#include "calibgan/error.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <unistd.h>

namespace calibgan {

namespace fs = std::filesystem;

std::string to_string(Role role) {
    switch (role) {
        case Role::source: return "source";
        case Role::target: return "target";
        case Role::calibrated: return "calibrated";
    }
    return "source";
}

Role parse_role(const std::string& name) {
    if (name == "source") return Role::source;
    if (name == "target") return Role::target;
    if (name == "calibrated") return Role::calibrated;
    throw ParseError("unknown dataset role '" + name + "'");
}

void BatchDataset::validate() const {
    if (feature_names.size() != data.cols()) {
        throw DomainError("dataset has " + std::to_string(data.cols()) + " columns but " +
                          std::to_string(feature_names.size()) + " feature names");
    }
    std::set<std::string> seen;
    for (const auto& name : feature_names) {
        if (!seen.insert(name).second) {
            throw DomainError("duplicate feature name '" + name + "'");
        }
    }
}

std::vector<std::string> default_feature_names(std::size_t d) {
    std::vector<std::string> names;
    names.reserve(d);
    for (std::size_t i = 0; i < d; ++i) {
        names.push_back("f" + std::to_string(i));
    }
    return names;
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) {
        cells.push_back(cell);
    }
    if (!line.empty() && line.back() == ',') {
        cells.emplace_back();
    }
    return cells;
}

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t");
    if (first == std::string::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t");
    return s.substr(first, last - first + 1);
}

std::string unquote(const std::string& s) {
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') {
        return s.substr(1, s.size() - 2);
    }
    return s;
}

bool parse_double(const std::string& text, double& out) {
    const auto cell = trim(text);
    if (cell.empty()) {
        return false;
    }
    const char* begin = cell.data();
    const char* end = cell.data() + cell.size();
    if (*begin == '+') {
        ++begin;
    }
    const auto result = std::from_chars(begin, end, out);
    return result.ec == std::errc() && result.ptr == end && std::isfinite(out);
}

std::string format_double(double x) {
    char buffer[32];
    std::snprintf(buffer, sizeof(buffer), "%.17g", x);
    return buffer;
}

}

BatchDataset load_csv(const fs::path& path, bool has_header, Role role) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open '" + path.string() + "' for reading");
    }

    BatchDataset out;
    out.role = role;
    out.provenance = path.filename().string();

    std::vector<double> values;
    std::size_t cols = 0;
    bool have_width = false;
    std::size_t rows = 0;
    std::string line;
    std::size_t line_no = 0;
    bool header_pending = has_header;

    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (trim(line).empty()) {
            continue;
        }
        const auto cells = split_line(line);

        if (header_pending) {
            header_pending = false;
            for (const auto& cell : cells) {
                out.feature_names.push_back(unquote(trim(cell)));
            }
            cols = cells.size();
            have_width = true;
            continue;
        }

        if (!have_width) {
            cols = cells.size();
            have_width = true;
        }
        if (cells.size() != cols) {
            throw ParseError(path.string() + ": line " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                             " fields, expected " + std::to_string(cols));
        }
        for (std::size_t c = 0; c < cells.size(); ++c) {
            double v = 0;
            if (!parse_double(cells[c], v)) {
                throw ParseError(path.string() + ": line " + std::to_string(line_no) + ", column " + std::to_string(c + 1) +
                                 ": '" + cells[c] + "' is not a finite number");
            }
            values.push_back(v);
        }
        ++rows;
    }

    if (rows == 0) {
        throw DomainError(path.string() + ": no data rows");
    }
    if (!has_header) {
        out.feature_names = default_feature_names(cols);
    }
    out.data = Matrix(rows, cols, std::move(values));
    try {
        out.validate();
    } catch (const DomainError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    return out;
}

std::string to_csv(const Matrix& data, const std::vector<std::string>& names) {
    std::string out;
    out.reserve(data.size() * 24 + 64);
    for (std::size_t c = 0; c < names.size(); ++c) {
        if (c) {
            out += ',';
        }
        out += names[c];
    }
    out += '\n';
    for (std::size_t r = 0; r < data.rows(); ++r) {
        const auto row = data.row(r);
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c) {
                out += ',';
            }
            out += format_double(row[c]);
        }
        out += '\n';
    }
    return out;
}

void save_csv(const BatchDataset& dataset, const fs::path& path) {
    dataset.validate();
    write_file_atomic(path, to_csv(dataset.data, dataset.feature_names));
}

namespace {

fs::path sidecar_path(const fs::path& path) {
    return fs::path(path.string() + ".meta.json");
}

}

void save_dataset(const BatchDataset& dataset, const fs::path& path) {
    save_csv(dataset, path);
    nlohmann::json meta;
    meta["schema_version"] = 1;
    meta["role"] = to_string(dataset.role);
    meta["provenance"] = dataset.provenance;
    write_json_atomic(sidecar_path(path), meta);
}

BatchDataset load_dataset(const fs::path& path, Role fallback_role) {
    BatchDataset out = load_csv(path, true, fallback_role);
    const auto meta_path = sidecar_path(path);
    if (fs::exists(meta_path)) {
        const auto meta = read_json(meta_path);
        try {
            out.role = parse_role(meta.at("role").get<std::string>());
            out.provenance = meta.at("provenance").get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(meta_path.string() + ": " + e.what());
        }
    }
    return out;
}

void write_file_atomic(const fs::path& path, const std::string& content) {
    const fs::path tmp = fs::path(path.string() + ".tmp." + std::to_string(::getpid()));
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw IoError("cannot open '" + path.string() + "' for writing");
        }
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) {
            out.close();
            std::error_code ignored;
            fs::remove(tmp, ignored);
            throw IoError("failed while writing '" + path.string() + "'");
        }
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        std::error_code ignored;
        fs::remove(tmp, ignored);
        throw IoError("cannot move temporary file into place at '" + path.string() + "': " + ec.message());
    }
}

void write_json_atomic(const fs::path& path, const nlohmann::json& doc) {
    write_file_atomic(path, doc.dump(2) + "\n");
}

nlohmann::json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open '" + path.string() + "' for reading");
    }
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

nlohmann::json matrix_to_json(const Matrix& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t r = 0; r < m.rows(); ++r) {
        const auto row = m.row(r);
        rows.push_back(std::vector<double>(row.begin(), row.end()));
    }
    return rows;
}

Matrix matrix_from_json(const nlohmann::json& doc, const std::string& what) {
    if (!doc.is_array()) {
        throw ParseError(what + ": expected an array of rows");
    }
    const std::size_t rows = doc.size();
    std::size_t cols = 0;
    std::vector<double> values;
    for (std::size_t r = 0; r < rows; ++r) {
        const auto& row = doc[r];
        if (!row.is_array()) {
            throw ParseError(what + ": row " + std::to_string(r) + " is not an array");
        }
        if (r == 0) {
            cols = row.size();
        } else if (row.size() != cols) {
            throw ParseError(what + ": row " + std::to_string(r) + " has " + std::to_string(row.size()) +
                             " entries, expected " + std::to_string(cols));
        }
        for (const auto& v : row) {
            if (!v.is_number()) {
                throw ParseError(what + ": non-numeric entry in row " + std::to_string(r));
            }
            values.push_back(v.get<double>());
        }
    }
    return Matrix(rows, cols, std::move(values));
}

Matrix StandardizationParams::apply(const Matrix& x) const {
    if (x.cols() != mean.cols()) {
        throw ShapeError("standardize: data " + x.shape_string() + " does not match " + std::to_string(mean.cols()) + " fitted features");
    }
    return elementwise(elementwise(x, mean, ElementOp::sub), std, ElementOp::div);
}

Matrix StandardizationParams::invert(const Matrix& z) const {
    if (z.cols() != mean.cols()) {
        throw ShapeError("unstandardize: data " + z.shape_string() + " does not match " + std::to_string(mean.cols()) + " fitted features");
    }
    return elementwise(elementwise(z, std, ElementOp::mul), mean, ElementOp::add);
}

nlohmann::json StandardizationParams::to_json() const {
    const auto m = mean.row(0);
    const auto s = std.row(0);
    return {
        {"mean", std::vector<double>(m.begin(), m.end())},
        {"std", std::vector<double>(s.begin(), s.end())},
        {"fitted_on", to_string(fitted_on)},
    };
}

StandardizationParams StandardizationParams::from_json(const nlohmann::json& doc) {
    try {
        StandardizationParams out;
        out.mean = Matrix::row_vector(doc.at("mean").get<std::vector<double> >());
        out.std = Matrix::row_vector(doc.at("std").get<std::vector<double> >());
        out.fitted_on = parse_role(doc.at("fitted_on").get<std::string>());
        if (!out.mean.same_shape(out.std)) {
            throw ParseError("standardization: mean and std lengths differ");
        }
        for (double s : out.std.values()) {
            if (!(s > 0)) {
                throw ParseError("standardization: std entries must be positive");
            }
        }
        return out;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("standardization: ") + e.what());
    }
}

StandardizationParams fit_standardize(const BatchDataset& dataset) {
    dataset.validate();
    StandardizationParams out;
    out.fitted_on = dataset.role;
    out.mean = reduce(dataset.data, Axis::over_rows, Stat::mean);
    out.std = reduce(dataset.data, Axis::over_rows, Stat::var);
    for (std::size_t c = 0; c < out.std.cols(); ++c) {
        if (!(out.std(0, c) > 0)) {
            throw DomainError("cannot standardize: feature '" + dataset.feature_names[c] + "' has zero variance");
        }
        out.std(0, c) = std::sqrt(out.std(0, c));
    }
    return out;
}

}
