#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "mmdfuse/data.hpp"
#include "mmdfuse/errors.hpp"
#include "mmdfuse/rng.hpp"

using namespace mmdfuse;

namespace {

std::string data_dir() { return MMDFUSE_DATA_DIR; }

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

// Multiset of rows, so reordering comparisons ignore permutation.
std::multiset<std::vector<double>> row_multiset(const data::Dataset& ds) {
  std::multiset<std::vector<double>> rows;
  for (Index r = 0; r < ds.rows(); ++r) {
    std::vector<double> row(static_cast<std::size_t>(ds.dims()));
    for (Index c = 0; c < ds.dims(); ++c) row[static_cast<std::size_t>(c)] = ds.features(r, c);
    rows.insert(row);
  }
  return rows;
}

}  // namespace

TEST_CASE("gaussian generator is seed-deterministic with the right moments") {
  data::GeneratorSpec spec;
  spec.family = data::GeneratorFamily::gaussian_shift;
  spec.dims = 2;
  spec.shift = 0.5;
  spec.size = 500;
  spec.seed = 42;

  const auto [x, y] = data::gen_gaussian_shift(spec);
  CHECK(x.rows() == 500);
  CHECK(y.rows() == 500);
  CHECK(x.dims() == 2);

  const double bound = 4.0 / std::sqrt(500.0);
  for (Index c = 0; c < 2; ++c) {
    CHECK(std::abs(x.features.col(c).mean()) < bound);
    CHECK(std::abs(y.features.col(c).mean() - 0.5) < bound);
  }

  const auto [x2, y2] = data::gen_gaussian_shift(spec);
  CHECK((x.features - x2.features).cwiseAbs().maxCoeff() == 0.0);
  CHECK((y.features - y2.features).cwiseAbs().maxCoeff() == 0.0);

  data::GeneratorSpec null_spec = spec;
  null_spec.shift = 0.0;
  const auto [xn, yn] = data::gen_gaussian_shift(null_spec);
  CHECK(std::abs(yn.features.col(0).mean()) < bound);
}

TEST_CASE("lognormal generator produces positive skewed data") {
  data::GeneratorSpec spec;
  spec.family = data::GeneratorFamily::lognormal_shift;
  spec.dims = 2;
  spec.shift = 0.0;
  spec.size = 2000;
  spec.seed = 7;

  const auto [x, y] = data::gen_lognormal_shift(spec);
  CHECK(x.features.minCoeff() > 0.0);
  CHECK(y.features.minCoeff() > 0.0);

  // Median of LogNormal(0, 1) is 1; the sample median converges to it.
  for (Index c = 0; c < 2; ++c) {
    std::vector<double> column(static_cast<std::size_t>(x.rows()));
    for (Index r = 0; r < x.rows(); ++r) column[static_cast<std::size_t>(r)] = x.features(r, c);
    std::nth_element(column.begin(), column.begin() + column.size() / 2, column.end());
    CHECK(std::abs(column[column.size() / 2] - 1.0) < 0.12);
  }

  data::GeneratorSpec shifted = spec;
  shifted.shift = 0.5;
  const auto [xs, ys] = data::gen_lognormal_shift(shifted);
  CHECK(ys.features.mean() > xs.features.mean());
}

TEST_CASE("stand-in clinical files load with the documented schemas") {
  const auto heart = data::load_csv(data_dir() + "/heart_failure_standin.csv",
                                    {"ejection_fraction", "serum_creatinine"},
                                    std::string("DEATH_EVENT"));
  CHECK(heart.rows() == 299);
  CHECK(heart.dims() == 2);
  const auto [alive, dead] = data::split_by_label(heart, "1");
  CHECK(alive.rows() == 203);
  CHECK(dead.rows() == 96);

  const auto [sub_alive, sub_dead] = data::subsample(alive, dead, 10, 77);
  CHECK(sub_alive.rows() == 10);
  CHECK(sub_dead.rows() == 10);

  const auto full = data::load_csv(data_dir() + "/heart_failure_standin.csv", {},
                                   std::string("DEATH_EVENT"));
  CHECK(full.dims() == 12);

  const auto cancer = data::load_csv(data_dir() + "/breast_cancer_standin.csv",
                                     {"concavity_mean", "concave_points_mean"},
                                     std::string("diagnosis"));
  CHECK(cancer.rows() == 569);
  const auto [benign, malignant] = data::split_by_label(cancer, "M");
  CHECK(benign.rows() == 357);
  CHECK(malignant.rows() == 212);
}

TEST_CASE("load_csv error paths name the offending location") {
  const std::string header_only = temp_path("mmdfuse_header_only.csv");
  {
    std::ofstream out(header_only);
    out << "a,b,c\n";
  }
  CHECK_THROWS_AS(data::load_csv(header_only), DataError);

  const std::string bad_cell = temp_path("mmdfuse_bad_cell.csv");
  {
    std::ofstream out(bad_cell);
    out << "a,b\n1.0,2.0\n3.0,oops\n";
  }
  CHECK_THROWS_WITH_AS(data::load_csv(bad_cell), doctest::Contains("row 3"), DataError);
  CHECK_THROWS_WITH_AS(data::load_csv(bad_cell, {"missing"}),
                       doctest::Contains("missing"), DataError);

  const std::string ragged = temp_path("mmdfuse_ragged.csv");
  {
    std::ofstream out(ragged);
    out << "a,b\n1.0,2.0\n3.0\n";
  }
  CHECK_THROWS_AS(data::load_csv(ragged), DataError);

  CHECK_THROWS_AS(data::load_csv(temp_path("mmdfuse_does_not_exist.csv")), DataError);

  // Headerless files use 0-based indices as column identifiers.
  const std::string headerless = temp_path("mmdfuse_headerless.csv");
  {
    std::ofstream out(headerless);
    out << "1.5,2.5,0\n3.5,4.5,1\n";
  }
  const auto ds = data::load_csv(headerless, {"0", "1"}, std::string("2"));
  CHECK(ds.rows() == 2);
  CHECK(ds.labels == std::vector<std::string>{"0", "1"});
}

TEST_CASE("csv round-trip preserves doubles exactly") {
  Rng rng(1001);
  data::Dataset ds;
  ds.features.resize(25, 3);
  for (Index r = 0; r < 25; ++r) {
    for (Index c = 0; c < 3; ++c) ds.features(r, c) = rng.normal() * std::exp(rng.normal());
  }
  ds.labels.assign(25, "g");
  for (Index r = 12; r < 25; ++r) ds.labels[static_cast<std::size_t>(r)] = "h";
  ds.name = "roundtrip";

  const std::string path = temp_path("mmdfuse_roundtrip.csv");
  data::save_csv(ds, path);
  const auto reloaded = data::load_csv(path, {}, std::string("label"));
  REQUIRE(reloaded.rows() == ds.rows());
  CHECK((reloaded.features - ds.features).cwiseAbs().maxCoeff() == 0.0);
  CHECK(reloaded.labels == ds.labels);
}

TEST_CASE("split_by_label partitions without losing rows") {
  data::Dataset ds;
  ds.features.resize(6, 1);
  ds.features << 1, 2, 3, 4, 5, 6;
  ds.labels = {"a", "b", "a", "a", "b", "a"};
  const auto [not_b, b] = data::split_by_label(ds, "b");
  CHECK(not_b.rows() + b.rows() == 6);
  CHECK(b.rows() == 2);

  CHECK_THROWS_AS(data::split_by_label(ds, "zebra"), DataError);

  data::Dataset single = ds;
  single.labels.assign(6, "only");
  const auto [empty_side, full_side] = data::split_by_label(single, "only");
  CHECK(empty_side.rows() == 0);
  CHECK(full_side.rows() == 6);
  // Empty groups surface as insufficient-sample errors downstream.
  CHECK_THROWS_AS(data::subsample(empty_side, full_side, 2, 1), DataError);

  data::Dataset unlabeled;
  unlabeled.features.resize(2, 1);
  unlabeled.features << 1, 2;
  CHECK_THROWS_AS(data::split_by_label(unlabeled, "x"), DataError);
}

TEST_CASE("subsample draws without replacement, deterministically") {
  Rng rng(2020);
  data::Dataset x;
  x.features.resize(40, 2);
  data::Dataset y;
  y.features.resize(25, 2);
  for (Index r = 0; r < 40; ++r) {
    x.features(r, 0) = static_cast<double>(r);
    x.features(r, 1) = rng.normal();
  }
  for (Index r = 0; r < 25; ++r) {
    y.features(r, 0) = 1000.0 + static_cast<double>(r);
    y.features(r, 1) = rng.normal();
  }

  const auto [sx, sy] = data::subsample(x, y, 10, 99);
  CHECK(sx.rows() == 10);
  CHECK(sy.rows() == 10);

  // Distinct rows only (no duplication).
  std::set<double> ids;
  for (Index r = 0; r < sx.rows(); ++r) ids.insert(sx.features(r, 0));
  CHECK(ids.size() == 10);

  const auto [sx2, sy2] = data::subsample(x, y, 10, 99);
  CHECK((sx.features - sx2.features).cwiseAbs().maxCoeff() == 0.0);
  CHECK((sy.features - sy2.features).cwiseAbs().maxCoeff() == 0.0);

  // Full-size subsample is a permutation of the original rows.
  const auto [fx, fy] = data::subsample(x, y, 25, 3);
  CHECK(row_multiset(fy) == row_multiset(y));

  CHECK_THROWS_AS(data::subsample(x, y, 26, 1), DataError);

  // Distinct seeds give distinct index sets (collision check over 100 seeds).
  std::set<std::vector<double>> seen;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto [a, b] = data::subsample(x, y, 10, seed);
    std::vector<double> key;
    for (Index r = 0; r < a.rows(); ++r) key.push_back(a.features(r, 0));
    seen.insert(key);
  }
  CHECK(seen.size() == 100);
}

TEST_CASE("null_mixture relabels the pooled rows uniformly") {
  data::Dataset x;
  x.features.resize(4, 1);
  x.features << 0, 1, 2, 3;
  data::Dataset y;
  y.features.resize(6, 1);
  y.features << 10, 11, 12, 13, 14, 15;

  const auto [mx, my] = data::null_mixture(x, y, 5);
  CHECK(mx.rows() == 4);
  CHECK(my.rows() == 6);

  auto pooled_before = row_multiset(x);
  for (const auto& row : row_multiset(y)) pooled_before.insert(row);
  auto pooled_after = row_multiset(mx);
  for (const auto& row : row_multiset(my)) pooled_after.insert(row);
  CHECK(pooled_before == pooled_after);

  // X = Y elementwise: outputs are a relabeling of the same multiset.
  const auto [ex, ey] = data::null_mixture(x, x, 8);
  auto doubled = row_multiset(x);
  for (const auto& row : row_multiset(x)) doubled.insert(row);
  auto mixed = row_multiset(ex);
  for (const auto& row : row_multiset(ey)) mixed.insert(row);
  CHECK(doubled == mixed);

  // Each pooled row lands in the X role with frequency |X| / (|X| + |Y|).
  const int shuffles = 2000;
  std::map<double, int> x_role_counts;
  for (int s = 0; s < shuffles; ++s) {
    const auto [ax, ay] = data::null_mixture(x, y, derive_seed(777, static_cast<std::uint64_t>(s)));
    for (Index r = 0; r < ax.rows(); ++r) ++x_role_counts[ax.features(r, 0)];
  }
  const double expected = 0.4 * shuffles;
  const double sigma = std::sqrt(shuffles * 0.4 * 0.6);
  for (const auto& [row_id, count] : x_role_counts) {
    CHECK(std::abs(count - expected) < 4.0 * sigma);
  }
}

TEST_CASE("standardize centers and scales with the population convention") {
  data::Dataset ds;
  ds.features.resize(2, 3);
  ds.features << 0.0, 5.0, 1.0, 2.0, 5.0, 3.0;

  const auto result = data::standardize(ds);
  CHECK(result.dataset.features(0, 0) == doctest::Approx(-1.0));
  CHECK(result.dataset.features(1, 0) == doctest::Approx(1.0));
  CHECK(result.dataset.features(0, 1) == 0.0);  // constant column zeroed
  CHECK(result.constant_columns == std::vector<Index>{1});

  // Already standardized data passes through unchanged.
  const auto twice = data::standardize(result.dataset);
  CHECK((twice.dataset.features.col(0) - result.dataset.features.col(0))
            .cwiseAbs()
            .maxCoeff() < 1e-12);

  data::Dataset tiny;
  tiny.features.resize(1, 1);
  tiny.features << 1.0;
  CHECK_THROWS_AS(data::standardize(tiny), DataError);
}
