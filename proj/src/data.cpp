#include "mmdfuse/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "mmdfuse/errors.hpp"
#include "mmdfuse/rng.hpp"

namespace mmdfuse::data {

namespace {

bool parse_double(const std::string& text, double& out) {
  const char* begin = text.data();
  const char* end = begin + text.size();
  const auto result = std::from_chars(begin, end, out);
  return result.ec == std::errc{} && result.ptr == end;
}

std::string trim(const std::string& text) {
  std::size_t begin = 0;
  std::size_t end = text.size();
  while (begin < end && (text[begin] == ' ' || text[begin] == '\t')) ++begin;
  while (end > begin && (text[end - 1] == ' ' || text[end - 1] == '\t' ||
                         text[end - 1] == '\r' || text[end - 1] == '\n')) {
    --end;
  }
  return text.substr(begin, end - begin);
}

std::vector<std::string> split_line(const std::string& line, char delimiter) {
  std::vector<std::string> cells;
  std::string cell;
  for (const char c : line) {
    if (c == delimiter) {
      cells.push_back(trim(cell));
      cell.clear();
    } else {
      cell.push_back(c);
    }
  }
  cells.push_back(trim(cell));
  return cells;
}

Dataset take_rows(const Dataset& source, const std::vector<std::size_t>& rows,
                  const std::string& name) {
  Dataset out;
  out.features.resize(static_cast<Index>(rows.size()), source.dims());
  if (source.has_labels()) out.labels.reserve(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out.features.row(static_cast<Index>(r)) =
        source.features.row(static_cast<Index>(rows[r]));
    if (source.has_labels()) out.labels.push_back(source.labels[rows[r]]);
  }
  out.column_names = source.column_names;
  out.label_name = source.label_name;
  out.name = name;
  return out;
}

std::string format_g17(double value) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

}  // namespace

void Dataset::validate() const {
  if (rows() < 1) throw DataError("dataset '" + name + "' has no rows");
  if (dims() < 1) throw DataError("dataset '" + name + "' has no feature columns");
  if (!features.allFinite()) {
    throw DataError("dataset '" + name + "' contains non-finite values");
  }
  if (has_labels() && static_cast<Index>(labels.size()) != rows()) {
    throw DataError("dataset '" + name + "' labels do not match row count");
  }
}

const char* generator_name(GeneratorFamily family) {
  return family == GeneratorFamily::gaussian_shift ? "gaussian" : "lognormal";
}

GeneratorFamily generator_from_name(const std::string& name) {
  if (name == "gaussian") return GeneratorFamily::gaussian_shift;
  if (name == "lognormal") return GeneratorFamily::lognormal_shift;
  throw ConfigError("unknown generator family '" + name + "'");
}

void GeneratorSpec::validate() const {
  if (dims < 1) throw ConfigError("generator dims must be >= 1");
  if (size < 2) throw ConfigError("generator size must be >= 2 per group");
  if (!std::isfinite(shift)) throw ConfigError("generator shift must be finite");
}

namespace {

// Fills one group row by row, column by column, from its own substream.
FeatureMatrix fill_normal(Index rows, int dims, double mean, std::uint64_t seed) {
  Rng rng(seed);
  FeatureMatrix out(rows, dims);
  for (Index i = 0; i < rows; ++i) {
    for (int j = 0; j < dims; ++j) out(i, j) = rng.normal(mean, 1.0);
  }
  return out;
}

}  // namespace

std::pair<Dataset, Dataset> gen_gaussian_shift(const GeneratorSpec& spec) {
  spec.validate();
  Dataset x;
  Dataset y;
  x.features = fill_normal(spec.size, spec.dims, 0.0, derive_seed(spec.seed, kStreamGenX));
  y.features = fill_normal(spec.size, spec.dims, spec.shift,
                           derive_seed(spec.seed, kStreamGenY));
  x.name = "gaussian:X";
  y.name = "gaussian:Y";
  return {std::move(x), std::move(y)};
}

std::pair<Dataset, Dataset> gen_lognormal_shift(const GeneratorSpec& spec) {
  spec.validate();
  Dataset x;
  Dataset y;
  x.features = fill_normal(spec.size, spec.dims, 0.0, derive_seed(spec.seed, kStreamGenX))
                   .array()
                   .exp();
  y.features = fill_normal(spec.size, spec.dims, spec.shift,
                           derive_seed(spec.seed, kStreamGenY))
                   .array()
                   .exp();
  x.name = "lognormal:X";
  y.name = "lognormal:Y";
  return {std::move(x), std::move(y)};
}

std::pair<Dataset, Dataset> generate(const GeneratorSpec& spec) {
  return spec.family == GeneratorFamily::gaussian_shift ? gen_gaussian_shift(spec)
                                                        : gen_lognormal_shift(spec);
}

Dataset load_csv(const std::string& path,
                 const std::vector<std::string>& feature_columns,
                 const std::optional<std::string>& label_column,
                 char delimiter) {
  std::ifstream input(path);
  if (!input) throw DataError("cannot open '" + path + "'");

  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(input, line)) {
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    rows.push_back(split_line(stripped, delimiter));
  }
  if (rows.empty()) throw DataError("'" + path + "' is empty");

  const std::size_t n_cols = rows.front().size();
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != n_cols) {
      std::ostringstream msg;
      msg << "'" << path << "' row " << r + 1 << " has " << rows[r].size()
          << " cells, expected " << n_cols;
      throw DataError(msg.str());
    }
  }

  // Header detection: a first row with any non-numeric cell is a header.
  bool has_header = false;
  for (const auto& cell : rows.front()) {
    double ignored;
    if (!parse_double(cell, ignored)) {
      has_header = true;
      break;
    }
  }

  std::vector<std::string> names(n_cols);
  if (has_header) {
    names = rows.front();
  } else {
    for (std::size_t c = 0; c < n_cols; ++c) names[c] = std::to_string(c);
  }

  auto resolve = [&](const std::string& column) -> std::size_t {
    const auto it = std::find(names.begin(), names.end(), column);
    if (it != names.end()) return static_cast<std::size_t>(it - names.begin());
    throw DataError("column '" + column + "' not found in '" + path + "'");
  };

  std::optional<std::size_t> label_idx;
  if (label_column) label_idx = resolve(*label_column);

  std::vector<std::size_t> feature_idx;
  if (feature_columns.empty()) {
    for (std::size_t c = 0; c < n_cols; ++c) {
      if (!label_idx || c != *label_idx) feature_idx.push_back(c);
    }
  } else {
    for (const auto& column : feature_columns) feature_idx.push_back(resolve(column));
  }
  if (feature_idx.empty()) throw DataError("no feature columns selected from '" + path + "'");

  const std::size_t first_data_row = has_header ? 1 : 0;
  const std::size_t n_rows = rows.size() - first_data_row;
  if (n_rows == 0) throw DataError("'" + path + "' has a header but no data rows");

  Dataset out;
  out.features.resize(static_cast<Index>(n_rows), static_cast<Index>(feature_idx.size()));
  out.name = path;
  for (const auto c : feature_idx) out.column_names.push_back(names[c]);
  if (label_idx) {
    out.label_name = names[*label_idx];
    out.labels.reserve(n_rows);
  }

  for (std::size_t r = 0; r < n_rows; ++r) {
    const auto& cells = rows[r + first_data_row];
    for (std::size_t f = 0; f < feature_idx.size(); ++f) {
      double value;
      if (!parse_double(cells[feature_idx[f]], value) || !std::isfinite(value)) {
        std::ostringstream msg;
        msg << "'" << path << "' row " << r + first_data_row + 1 << " column '"
            << names[feature_idx[f]] << "': cannot parse '"
            << cells[feature_idx[f]] << "' as a finite number";
        throw DataError(msg.str());
      }
      out.features(static_cast<Index>(r), static_cast<Index>(f)) = value;
    }
    if (label_idx) out.labels.push_back(cells[*label_idx]);
  }
  return out;
}

void save_csv(const Dataset& dataset, const std::string& path, char delimiter) {
  std::ofstream output(path);
  if (!output) throw DataError("cannot write '" + path + "'");

  for (Index c = 0; c < dataset.dims(); ++c) {
    if (c > 0) output << delimiter;
    if (static_cast<std::size_t>(c) < dataset.column_names.size()) {
      output << dataset.column_names[static_cast<std::size_t>(c)];
    } else {
      output << "f" << c + 1;
    }
  }
  if (dataset.has_labels()) output << delimiter << dataset.label_name;
  output << "\n";

  for (Index r = 0; r < dataset.rows(); ++r) {
    for (Index c = 0; c < dataset.dims(); ++c) {
      if (c > 0) output << delimiter;
      output << format_g17(dataset.features(r, c));
    }
    if (dataset.has_labels()) {
      output << delimiter << dataset.labels[static_cast<std::size_t>(r)];
    }
    output << "\n";
  }
}

std::pair<Dataset, Dataset> split_by_label(const Dataset& dataset,
                                           const std::string& positive_label) {
  if (!dataset.has_labels()) throw DataError("split_by_label requires labels");
  std::vector<std::size_t> negative;
  std::vector<std::size_t> positive;
  for (std::size_t r = 0; r < dataset.labels.size(); ++r) {
    (dataset.labels[r] == positive_label ? positive : negative).push_back(r);
  }
  if (positive.empty()) {
    throw DataError("label '" + positive_label + "' not present in dataset '" +
                    dataset.name + "'");
  }
  return {take_rows(dataset, negative, dataset.name + ":not-" + positive_label),
          take_rows(dataset, positive, dataset.name + ":" + positive_label)};
}

std::pair<Dataset, Dataset> subsample(const Dataset& x, const Dataset& y,
                                      Index n_per_group, std::uint64_t seed) {
  if (n_per_group < 1) throw ConfigError("subsample size must be >= 1");
  if (n_per_group > x.rows() || n_per_group > y.rows()) {
    std::ostringstream msg;
    msg << "subsample of " << n_per_group << " exceeds group sizes (" << x.rows()
        << ", " << y.rows() << ")";
    throw DataError(msg.str());
  }
  Rng rng_x(derive_seed(seed, kStreamSubsampleX));
  Rng rng_y(derive_seed(seed, kStreamSubsampleY));
  const auto pick_x = rng_x.sample_without_replacement(
      static_cast<std::size_t>(x.rows()), static_cast<std::size_t>(n_per_group));
  const auto pick_y = rng_y.sample_without_replacement(
      static_cast<std::size_t>(y.rows()), static_cast<std::size_t>(n_per_group));
  return {take_rows(x, pick_x, x.name), take_rows(y, pick_y, y.name)};
}

std::pair<Dataset, Dataset> null_mixture(const Dataset& x, const Dataset& y,
                                         std::uint64_t seed) {
  if (x.rows() < 1 || y.rows() < 1) throw DataError("null_mixture requires non-empty groups");
  if (x.dims() != y.dims()) throw DataError("null_mixture requires equal dimensions");

  const std::size_t total = static_cast<std::size_t>(x.rows() + y.rows());
  std::vector<std::size_t> order(total);
  for (std::size_t i = 0; i < total; ++i) order[i] = i;
  Rng rng(derive_seed(seed, kStreamMixture));
  rng.shuffle(order);

  auto row_of = [&](std::size_t pooled_index) {
    return pooled_index < static_cast<std::size_t>(x.rows())
               ? x.features.row(static_cast<Index>(pooled_index))
               : y.features.row(static_cast<Index>(pooled_index) - x.rows());
  };

  Dataset mixed_x;
  Dataset mixed_y;
  mixed_x.features.resize(x.rows(), x.dims());
  mixed_y.features.resize(y.rows(), y.dims());
  for (Index r = 0; r < x.rows(); ++r) {
    mixed_x.features.row(r) = row_of(order[static_cast<std::size_t>(r)]);
  }
  for (Index r = 0; r < y.rows(); ++r) {
    mixed_y.features.row(r) =
        row_of(order[static_cast<std::size_t>(x.rows() + r)]);
  }
  mixed_x.column_names = x.column_names;
  mixed_y.column_names = y.column_names;
  mixed_x.name = x.name + ":mixed";
  mixed_y.name = y.name + ":mixed";
  return {std::move(mixed_x), std::move(mixed_y)};
}

Standardized standardize(const Dataset& dataset) {
  if (dataset.rows() < 2) throw DataError("standardize requires at least two rows");
  Standardized out;
  out.dataset = dataset;
  const double rows = static_cast<double>(dataset.rows());
  for (Index c = 0; c < dataset.dims(); ++c) {
    const double mean = dataset.features.col(c).mean();
    const double variance =
        (dataset.features.col(c).array() - mean).square().sum() / rows;
    if (variance == 0.0) {
      out.dataset.features.col(c).setZero();
      out.constant_columns.push_back(c);
    } else {
      out.dataset.features.col(c) =
          (dataset.features.col(c).array() - mean) / std::sqrt(variance);
    }
  }
  return out;
}

}  // namespace mmdfuse::data
