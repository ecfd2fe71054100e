#include "mmdfuse/statistics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "mmdfuse/errors.hpp"

namespace mmdfuse::statistics {

namespace {

void require_index_sets(Index gram_size, std::span<const Index> idx_x,
                        std::span<const Index> idx_y) {
  if (idx_x.size() < 2 || idx_y.size() < 2) {
    throw DataError("mmd2_unbiased requires at least two samples per group");
  }
  std::vector<bool> seen(static_cast<std::size_t>(gram_size), false);
  auto mark = [&](std::span<const Index> idx) {
    for (const Index i : idx) {
      if (i < 0 || i >= gram_size) {
        std::ostringstream msg;
        msg << "index " << i << " out of range for Gram of size " << gram_size;
        throw ConfigError(msg.str());
      }
      if (seen[static_cast<std::size_t>(i)]) {
        throw ConfigError("overlapping or duplicate indices in index sets");
      }
      seen[static_cast<std::size_t>(i)] = true;
    }
  };
  mark(idx_x);
  mark(idx_y);
}

}  // namespace

void KernelPool::validate() const {
  if (specs.empty()) throw ConfigError("kernel pool must contain at least one kernel");
  if (specs.size() != weights.size()) {
    throw ConfigError("kernel pool weights must match the number of kernels");
  }
  double total = 0.0;
  for (const double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw ConfigError("kernel pool weights must be non-negative");
    }
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw ConfigError("kernel pool weights must sum to 1");
  }
  for (const auto& spec : specs) spec.validate();
}

void PooledGrams::validate() const {
  pool.validate();
  if (grams.size() != pool.size()) {
    throw ConfigError("pooled grams must hold one Gram per kernel");
  }
  if (n < 1 || m < 1) throw DataError("pooled grams require non-empty groups");
  for (const auto& g : grams) {
    if (g.size() != total()) {
      throw ConfigError("every Gram must have size n + m");
    }
  }
}

PooledGrams make_pooled_grams(const KernelPool& pool, const FeatureMatrix& z,
                              Index n, Index m) {
  pool.validate();
  if (n < 1 || m < 1 || n + m != z.rows()) {
    throw DataError("pooled sample must have n + m rows");
  }
  PooledGrams result;
  result.pool = pool;
  result.n = n;
  result.m = m;
  result.grams.reserve(pool.size());
  for (const auto& spec : pool.specs) {
    result.grams.push_back(kernels::gram(spec, z));
  }
  return result;
}

void FuseConfig::validate() const {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw ConfigError("fuse lambda must be positive");
  }
}

double mmd2_unbiased(const kernels::GramMatrix& gram,
                     std::span<const Index> idx_x,
                     std::span<const Index> idx_y) {
  require_index_sets(gram.size(), idx_x, idx_y);
  const auto& g = gram.values;
  const double n = static_cast<double>(idx_x.size());
  const double m = static_cast<double>(idx_y.size());

  // One pass over the Gram in a fixed global order, classifying each ordered
  // pair by group membership. The accumulation sequence is then independent
  // of which set plays the X role, which makes the n = m exchange symmetry
  // hold bitwise. The cross block is accumulated in both directions, so its
  // coefficient is 1/(n m) rather than 2/(n m).
  std::vector<unsigned char> group(static_cast<std::size_t>(gram.size()), 0);
  for (const Index i : idx_x) group[static_cast<std::size_t>(i)] = 1;
  for (const Index i : idx_y) group[static_cast<std::size_t>(i)] = 2;

  double within_x = 0.0;
  double within_y = 0.0;
  double cross_both = 0.0;
  const Index size = gram.size();
  for (Index i = 0; i < size; ++i) {
    const auto gi = group[static_cast<std::size_t>(i)];
    if (gi == 0) continue;
    for (Index j = 0; j < size; ++j) {
      const auto gj = group[static_cast<std::size_t>(j)];
      if (gj == 0 || i == j) continue;
      if (gi != gj) {
        cross_both += g(i, j);
      } else if (gi == 1) {
        within_x += g(i, j);
      } else {
        within_y += g(i, j);
      }
    }
  }
  return within_x / (n * (n - 1.0)) + within_y / (m * (m - 1.0)) -
         cross_both / (n * m);
}

double fuse1_from_values(std::span<const double> mmd_values,
                         std::span<const double> weights,
                         const FuseConfig& config) {
  config.validate();
  if (mmd_values.size() != weights.size() || mmd_values.empty()) {
    throw ConfigError("fuse1 requires matching non-empty values and weights");
  }

  // Zero-weight kernels contribute nothing; excluding them from the max
  // shift keeps pure sub-pools bit-identical to pools built without the
  // zero-weight entries.
  double shift = -std::numeric_limits<double>::infinity();
  bool any_active = false;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    if (weights[k] > 0.0) {
      any_active = true;
      shift = std::max(shift, config.lambda * mmd_values[k]);
    }
  }
  if (!any_active) throw ConfigError("fuse1 requires at least one positive weight");

  if (config.form == FuseForm::log_of_mean) {
    double mean = 0.0;
    for (std::size_t k = 0; k < weights.size(); ++k) {
      if (weights[k] > 0.0) mean += weights[k] * (config.lambda * mmd_values[k]);
    }
    if (!(mean > 0.0)) return -std::numeric_limits<double>::infinity();
    return std::log(mean) / config.lambda;
  }

  double sum = 0.0;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    if (weights[k] > 0.0) {
      sum += weights[k] * std::exp(config.lambda * mmd_values[k] - shift);
    }
  }
  return (shift + std::log(sum)) / config.lambda;
}

double fuse1(const PooledGrams& pooled, std::span<const Index> idx_x,
             std::span<const Index> idx_y, const FuseConfig& config) {
  pooled.validate();
  config.validate();
  std::vector<double> values;
  std::vector<double> weights;
  values.reserve(pooled.pool.size());
  weights.reserve(pooled.pool.size());
  for (std::size_t k = 0; k < pooled.pool.size(); ++k) {
    if (pooled.pool.weights[k] > 0.0) {
      values.push_back(mmd2_unbiased(pooled.grams[k], idx_x, idx_y));
      weights.push_back(pooled.pool.weights[k]);
    }
  }
  if (values.empty()) throw ConfigError("fuse1 requires at least one positive weight");
  return fuse1_from_values(values, weights, config);
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw DataError("quantile of an empty multiset");
  if (!(q > 0.0 && q <= 1.0)) throw ConfigError("quantile level must be in (0, 1]");
  std::sort(values.begin(), values.end());
  const double count = static_cast<double>(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (static_cast<double>(i + 1) / count >= q) return values[i];
  }
  return values.back();
}

}  // namespace mmdfuse::statistics
