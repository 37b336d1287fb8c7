#ifndef CALIBGAN_DATASET_HPP
#define CALIBGAN_DATASET_HPP

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "matrix.hpp"

/**
 * @file dataset.hpp
 * @brief Batch datasets, CSV persistence, standardization and atomic file output.
 */

namespace calibgan {

enum class Role { source, target, calibrated };

std::string to_string(Role role);
Role parse_role(const std::string& name);

/** A batch of cells: rows are points, columns are named features. */
struct BatchDataset {
    Matrix data;
    std::vector<std::string> feature_names;
    Role role = Role::source;
    /** Free-text origin, e.g. "patient 1 / unstimulated / day 2". */
    std::string provenance;

    /** Throws `DomainError` if names and columns disagree or names repeat. */
    void validate() const;

    bool operator==(const BatchDataset&) const = default;
};

/** Names `f0 .. f{d-1}`. */
std::vector<std::string> default_feature_names(std::size_t d);

/**
 * Parse a rectangular numeric CSV (comma separated, '.' decimal point).
 *
 * With `has_header`, the first line supplies the feature names; otherwise columns are named `f0, f1, ...`.
 * Blank lines are ignored. Errors:
 * - a row with the wrong number of cells throws `ParseError` naming the 1-based line number,
 * - a cell that is not a finite number throws `ParseError` naming its line and column,
 * - a file with no data rows throws `DomainError`,
 * - an unreadable file throws `IoError`.
 */
BatchDataset load_csv(const std::filesystem::path& path, bool has_header = true, Role role = Role::source);

/** CSV text with a header line and every value printed with 17 significant digits. */
std::string to_csv(const Matrix& data, const std::vector<std::string>& names);

/** Write `to_csv()` atomically. */
void save_csv(const BatchDataset& dataset, const std::filesystem::path& path);

/**
 * CSV plus a `<path>.meta.json` sidecar holding the role and provenance,
 * so that `load_dataset()` restores the dataset exactly.
 */
void save_dataset(const BatchDataset& dataset, const std::filesystem::path& path);

/** Inverse of `save_dataset()`; without a sidecar, the role defaults to `fallback_role`. */
BatchDataset load_dataset(const std::filesystem::path& path, Role fallback_role = Role::source);

/**
 * Replace `path` with `content` by writing a temporary sibling and renaming it over the target.
 * On failure an `IoError` naming the path is thrown and no partial file is left behind.
 */
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

/** Pretty-printed JSON (two-space indent, trailing newline), written atomically. */
void write_json_atomic(const std::filesystem::path& path, const nlohmann::json& doc);

/** Parse a JSON file; syntax errors throw `ParseError`, unreadable files `IoError`. */
nlohmann::json read_json(const std::filesystem::path& path);

/** Nested row arrays. */
nlohmann::json matrix_to_json(const Matrix& m);

/** Inverse of `matrix_to_json()`; throws `ParseError` mentioning `what` on malformed input. */
Matrix matrix_from_json(const nlohmann::json& doc, const std::string& what);

/** Per-feature z-scoring. */
struct StandardizationParams {
    Matrix mean;
    Matrix std;
    Role fitted_on = Role::target;

    Matrix apply(const Matrix& x) const;
    Matrix invert(const Matrix& z) const;

    nlohmann::json to_json() const;
    static StandardizationParams from_json(const nlohmann::json& doc);
};

/**
 * Fit means and (biased) standard deviations on `dataset`.
 * A zero-variance feature throws `DomainError` naming it.
 */
StandardizationParams fit_standardize(const BatchDataset& dataset);

}

#endif
