#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mmdfuse/types.hpp"

namespace mmdfuse::data {

// A feature matrix (row per sample) with optional per-row labels and column
// names. Groups produced by splitting may be transiently empty; consumers
// that need samples raise insufficient-sample errors.
struct Dataset {
  FeatureMatrix features;
  std::vector<std::string> labels;        // empty when unlabeled
  std::vector<std::string> column_names;  // empty -> f1..fD on save
  std::string label_name = "label";
  std::string name;

  Index rows() const { return features.rows(); }
  Index dims() const { return features.cols(); }
  bool has_labels() const { return !labels.empty(); }
  void validate() const;
};

enum class GeneratorFamily { gaussian_shift, lognormal_shift };

const char* generator_name(GeneratorFamily family);
GeneratorFamily generator_from_name(const std::string& name);

// Synthetic two-group source: X has per-coordinate location 0, Y is shifted
// by `shift` (in log space for the lognormal family).
struct GeneratorSpec {
  GeneratorFamily family = GeneratorFamily::gaussian_shift;
  int dims = 2;
  double shift = 0.0;
  Index size = 500;  // rows per group
  std::uint64_t seed = 0;

  void validate() const;
};

std::pair<Dataset, Dataset> gen_gaussian_shift(const GeneratorSpec& spec);
std::pair<Dataset, Dataset> gen_lognormal_shift(const GeneratorSpec& spec);
std::pair<Dataset, Dataset> generate(const GeneratorSpec& spec);

// Loads a delimited numeric file. The header row is auto-detected (a first
// row that does not parse fully as numbers). Feature columns may be given by
// header name, or by 0-based index for headerless files; an empty list means
// every column except the label. Parsing is locale-independent; missing or
// non-numeric feature cells are errors that name the row and column.
Dataset load_csv(const std::string& path,
                 const std::vector<std::string>& feature_columns = {},
                 const std::optional<std::string>& label_column = {},
                 char delimiter = ',');

// Writes features (and the label column when present) with 17 significant
// digits so that a reload reproduces the matrix bit for bit.
void save_csv(const Dataset& dataset, const std::string& path,
              char delimiter = ',');

// Partition by label: first result is the rows NOT matching positive_label,
// second the rows matching it.
std::pair<Dataset, Dataset> split_by_label(const Dataset& dataset,
                                           const std::string& positive_label);

// Uniform without replacement, independently per group, seed-deterministic.
std::pair<Dataset, Dataset> subsample(const Dataset& x, const Dataset& y,
                                      Index n_per_group, std::uint64_t seed);

// Pools both groups, shuffles uniformly, and splits back into the original
// sizes; both outputs are then draws from the pooled empirical distribution.
std::pair<Dataset, Dataset> null_mixture(const Dataset& x, const Dataset& y,
                                         std::uint64_t seed);

struct Standardized {
  Dataset dataset;
  std::vector<Index> constant_columns;  // columns left at zero
};

// Column-wise shift to mean 0 and scale to unit standard deviation
// (population convention, denominator M).
Standardized standardize(const Dataset& dataset);

}  // namespace mmdfuse::data
