#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <fstream>

#include "calibgan/dataset.hpp"
#include "calibgan/error.hpp"
#include "calibgan/mmd.hpp"
#include "calibgan/synthetic.hpp"
#include "test_util.hpp"

using namespace calibgan;
using calibgan::test::max_abs_diff;
using calibgan::test::random_matrix;
using calibgan::test::read_text;
using calibgan::test::scratch_dir;

namespace fs = std::filesystem;

namespace {

void write(const fs::path& path, const std::string& text) {
    std::ofstream(path, std::ios::binary) << text;
}

SyntheticSpec small_spec(double shift, double scale, std::size_t rows, std::uint64_t seed) {
    SyntheticSpec spec;
    spec.dim = 4;
    spec.seed = seed;
    spec.source_rows = spec.target_rows = rows;
    spec.components = {
        {0.6, {0.0, 1.0, -1.0, 0.5}, {0.5, 0.5, 0.3, 0.6}},
        {0.4, {1.5, -0.5, 0.5, -1.0}, {0.4, 0.7, 0.5, 0.3}},
    };
    spec.distortion.shift.assign(4, shift);
    spec.distortion.scale.assign(4, scale);
    return spec;
}

KernelSpec fixed_kernel() {
    return KernelSpec{{1.0, 2.0, 4.0}};
}

// Same-distribution MMD^2 values: both sets drawn afresh from the target mixture.
std::vector<double> null_mmd2(const SyntheticSpec& spec, std::size_t draws) {
    std::vector<double> values;
    for (std::size_t i = 0; i < draws; ++i) {
        Rng a = Rng(1000 + i).derive(1);
        Rng b = Rng(1000 + i).derive(2);
        const Matrix x = sample_mixture(spec.components, spec.dim, spec.target_rows, a);
        const Matrix y = sample_mixture(spec.components, spec.dim, spec.source_rows, b);
        values.push_back(mmd2_estimate(x, y, fixed_kernel()));
    }
    return values;
}

}

TEST(Csv, HeaderAndRows) {
    const auto dir = scratch_dir("csv_basic");
    write(dir / "a.csv", "a,b\n1,2\n3,4\n");
    const BatchDataset ds = load_csv(dir / "a.csv");
    EXPECT_EQ(ds.data, Matrix::from_rows({{1, 2}, {3, 4}}));
    EXPECT_EQ(ds.feature_names, (std::vector<std::string>{"a", "b"}));
}

TEST(Csv, WithoutHeaderUsesDefaultNames) {
    const auto dir = scratch_dir("csv_noheader");
    write(dir / "a.csv", "1,2,3\n4,5,6\n");
    const BatchDataset ds = load_csv(dir / "a.csv", false);
    EXPECT_EQ(ds.data.rows(), 2u);
    EXPECT_EQ(ds.feature_names, (std::vector<std::string>{"f0", "f1", "f2"}));
}

TEST(Csv, RaggedRowNamesLine) {
    const auto dir = scratch_dir("csv_ragged");
    write(dir / "a.csv", "a,b\n1,2\n3,4\n5,6\n7,8\n9,10\n11\n13,14\n");
    try {
        load_csv(dir / "a.csv");
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_NE(std::string(e.what()).find("line 7"), std::string::npos) << e.what();
    }
}

TEST(Csv, NonNumericCellNamesRowAndColumn) {
    const auto dir = scratch_dir("csv_text");
    write(dir / "a.csv", "a,b\n1,2\n3,x\n");
    try {
        load_csv(dir / "a.csv");
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("line 3"), std::string::npos) << msg;
        EXPECT_NE(msg.find("column 2"), std::string::npos) << msg;
    }
}

TEST(Csv, EmptyAndMissingFiles) {
    const auto dir = scratch_dir("csv_empty");
    write(dir / "empty.csv", "");
    write(dir / "header.csv", "a,b\n");
    EXPECT_THROW(load_csv(dir / "empty.csv"), DomainError);
    EXPECT_THROW(load_csv(dir / "header.csv"), DomainError);
    EXPECT_THROW(load_csv(dir / "missing.csv"), IoError);
}

TEST(Csv, RoundTripIsExact) {
    const auto dir = scratch_dir("csv_roundtrip");
    BatchDataset ds;
    ds.data = random_matrix(50, 6, 1, 1e3);
    ds.data(0, 0) = 1e-300;
    ds.data(1, 1) = -0.1;
    ds.feature_names = default_feature_names(6);
    save_csv(ds, dir / "x.csv");
    EXPECT_EQ(load_csv(dir / "x.csv").data, ds.data);
}

TEST(Dataset, SaveLoadPreservesEverything) {
    const auto dir = scratch_dir("dataset_roundtrip");
    BatchDataset ds;
    ds.data = random_matrix(10, 3, 2);
    ds.feature_names = {"CD3", "CD4", "CD8"};
    ds.role = Role::calibrated;
    ds.provenance = "patient 1, day 2";
    save_dataset(ds, dir / "c.csv");
    EXPECT_EQ(load_dataset(dir / "c.csv"), ds);
}

TEST(Dataset, ValidationRejectsBadNames) {
    BatchDataset ds;
    ds.data = Matrix(2, 2);
    ds.feature_names = {"a", "a"};
    EXPECT_THROW(ds.validate(), DomainError);
    ds.feature_names = {"a"};
    EXPECT_THROW(ds.validate(), DomainError);
}

TEST(AtomicWrite, MissingDirectoryLeavesNothing) {
    const auto dir = scratch_dir("atomic_missing");
    EXPECT_THROW(write_file_atomic(dir / "no_such_dir" / "out.csv", "x"), IoError);
    EXPECT_TRUE(fs::is_empty(dir));
}

TEST(AtomicWrite, FailedRenameRemovesTemporary) {
    const auto dir = scratch_dir("atomic_rename");
    fs::create_directories(dir / "occupied" / "child");
    EXPECT_THROW(write_file_atomic(dir / "occupied", "payload"), IoError);
    std::size_t entries = 0;
    for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir)) {
        ++entries;
    }
    EXPECT_EQ(entries, 1u);
}

TEST(AtomicWrite, ReplacesExistingFile) {
    const auto dir = scratch_dir("atomic_replace");
    write(dir / "f.txt", "old");
    write_file_atomic(dir / "f.txt", "new");
    EXPECT_EQ(read_text(dir / "f.txt"), "new");
}

TEST(Json, ReportRoundTrip) {
    const auto dir = scratch_dir("json_roundtrip");
    const std::vector<double> values{0.25, 1.0 / 3.0, 2.0, 1e-9};
    const Summary s = summarize(values);
    nlohmann::json doc = {
        {"schema_version", 1},
        {"values", values},
        {"summary", {{"min", s.min}, {"q1", s.q1}, {"median", s.median}, {"q3", s.q3}, {"max", s.max}, {"mean", s.mean}}},
        {"matrix", matrix_to_json(Matrix::from_rows({{1.5, -2}, {0.1, 7}}))},
    };
    write_json_atomic(dir / "r.json", doc);
    const nlohmann::json back = read_json(dir / "r.json");
    EXPECT_EQ(back, doc);
    EXPECT_EQ(back["summary"]["median"].get<double>(), s.median);
    EXPECT_EQ(back["values"].get<std::vector<double>>(), values);
    EXPECT_EQ(matrix_from_json(back["matrix"], "matrix"), Matrix::from_rows({{1.5, -2}, {0.1, 7}}));
}

TEST(Standardize, ApplyGivesZeroMeanUnitVariance) {
    BatchDataset ds;
    ds.data = random_matrix(200, 4, 3, 5.0);
    for (std::size_t r = 0; r < 200; ++r) {
        ds.data(r, 2) += 40.0;
    }
    ds.feature_names = default_feature_names(4);
    const StandardizationParams p = fit_standardize(ds);
    const Matrix z = p.apply(ds.data);
    const Matrix mean = reduce(z, Axis::over_rows, Stat::mean);
    const Matrix var = reduce(z, Axis::over_rows, Stat::var);
    for (std::size_t c = 0; c < 4; ++c) {
        EXPECT_NEAR(mean(0, c), 0.0, 1e-10);
        EXPECT_NEAR(var(0, c), 1.0, 1e-10);
    }
    EXPECT_LE(max_abs_diff(p.invert(z), ds.data), 1e-10);
}

TEST(Standardize, JsonRoundTrip) {
    BatchDataset ds;
    ds.data = random_matrix(20, 3, 4);
    ds.feature_names = default_feature_names(3);
    const StandardizationParams p = fit_standardize(ds);
    const StandardizationParams q = StandardizationParams::from_json(p.to_json());
    EXPECT_EQ(q.mean, p.mean);
    EXPECT_EQ(q.std, p.std);
    EXPECT_EQ(q.fitted_on, p.fitted_on);
}

TEST(Standardize, ZeroVarianceNamesFeature) {
    BatchDataset ds;
    ds.data = random_matrix(10, 2, 5);
    for (std::size_t r = 0; r < 10; ++r) {
        ds.data(r, 1) = 3.0;
    }
    ds.feature_names = {"CD45", "DNA1"};
    try {
        fit_standardize(ds);
        FAIL() << "expected DomainError";
    } catch (const DomainError& e) {
        EXPECT_NE(std::string(e.what()).find("DNA1"), std::string::npos) << e.what();
    }
}

TEST(Standardize, TargetFrameLeavesShiftedSourceOffCenter) {
    const SyntheticPair pair = generate_synthetic_pair(small_spec(2.0, 1.0, 1000, 6));
    const StandardizationParams p = fit_standardize(pair.target);
    const Matrix mean = reduce(p.apply(pair.source.data), Axis::over_rows, Stat::mean);
    for (double m : mean.values()) {
        EXPECT_GT(std::abs(m), 0.5);
    }
}

TEST(Synthetic, DefaultSpec) {
    const SyntheticSpec spec = default_synthetic_spec();
    EXPECT_EQ(spec.dim, 25u);
    EXPECT_EQ(spec.components.size(), 3u);
    EXPECT_EQ(spec.source_rows, 5000u);
    EXPECT_EQ(spec.target_rows, 5000u);
    double total = 0.0;
    for (const auto& c : spec.components) {
        total += c.weight;
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
    for (double s : spec.distortion.scale) {
        EXPECT_DOUBLE_EQ(s, 1.2);
    }
    EXPECT_NO_THROW(spec.validate());
}

TEST(Synthetic, SeedDeterminism) {
    const SyntheticSpec spec = small_spec(1.0, 1.1, 300, 7);
    const SyntheticPair a = generate_synthetic_pair(spec);
    const SyntheticPair b = generate_synthetic_pair(spec);
    EXPECT_EQ(a.source, b.source);
    EXPECT_EQ(a.target, b.target);
    SyntheticSpec other = spec;
    other.seed = 8;
    EXPECT_NE(generate_synthetic_pair(other).target.data, a.target.data);
}

TEST(Synthetic, IdentityDistortionIsWithinNull) {
    const SyntheticSpec spec = small_spec(0.0, 1.0, 300, 9);
    const SyntheticPair pair = generate_synthetic_pair(spec);
    const double observed = mmd2_estimate(pair.source.data, pair.target.data, fixed_kernel());
    const double p95 = quantile(null_mmd2(spec, 40), 0.95);
    EXPECT_LT(observed, p95);
}

TEST(Synthetic, ShiftDominatesIdentity) {
    const SyntheticPair identity = generate_synthetic_pair(small_spec(0.0, 1.0, 2000, 10));
    const SyntheticPair shifted = generate_synthetic_pair(small_spec(2.0, 1.0, 2000, 10));
    const double base = mmd2_estimate(identity.source.data, identity.target.data, fixed_kernel());
    const double moved = mmd2_estimate(shifted.source.data, shifted.target.data, fixed_kernel());
    EXPECT_GE(moved, 10.0 * base);
}

TEST(Synthetic, GroundTruthInversionRestoresTarget) {
    SyntheticSpec spec = small_spec(1.5, 1.3, 300, 11);
    spec.distortion.nonlinearity = Nonlinearity::tanh_warp;
    const SyntheticPair pair = generate_synthetic_pair(spec);
    const Matrix restored = pair.ground_truth.invert(pair.source.data);
    EXPECT_LE(max_abs_diff(pair.ground_truth.apply(restored), pair.source.data), 1e-9);
    const double observed = mmd2_estimate(restored, pair.target.data, fixed_kernel());
    EXPECT_LT(observed, quantile(null_mmd2(spec, 40), 0.95));
}

TEST(Synthetic, SpecJsonRoundTrip) {
    SyntheticSpec spec = small_spec(0.5, 0.9, 100, 12);
    spec.distortion.nonlinearity = Nonlinearity::tanh_warp;
    const SyntheticSpec back = SyntheticSpec::from_json(spec.to_json());
    EXPECT_EQ(back.to_json(), spec.to_json());
}

TEST(Synthetic, InvalidSpecsNameTheField) {
    auto expect_field = [](SyntheticSpec spec, const std::string& field) {
        try {
            spec.validate();
            FAIL() << "expected ConfigError for " << field;
        } catch (const ConfigError& e) {
            EXPECT_NE(std::string(e.what()).find(field), std::string::npos) << e.what();
        }
    };
    SyntheticSpec spec = small_spec(0.0, 1.0, 10, 1);
    spec.components[0].weight = 0.9;
    expect_field(spec, "weight");
    spec = small_spec(0.0, 1.0, 10, 1);
    spec.distortion.scale[2] = 0.0;
    expect_field(spec, "scale");
    spec = small_spec(0.0, 1.0, 10, 1);
    spec.components[1].variance.pop_back();
    expect_field(spec, "variance");
}
