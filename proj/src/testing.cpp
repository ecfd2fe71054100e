#include "mmdfuse/testing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "mmdfuse/errors.hpp"
#include "mmdfuse/parallel.hpp"
#include "mmdfuse/rng.hpp"

namespace mmdfuse::testing {

namespace {

// Per-kernel constants that let one permutation's MMD^2 be computed from the
// permuted X block alone. With A = sum over the X-block (diagonal included),
// sx = sum of full rows over X indices, and T = total sum:
//   cross   = sx - A
//   Y-block = T - A - 2 * cross
// so only n^2 gathers are needed per kernel per permutation instead of
// (n + m)^2.
struct GramSums {
  Eigen::VectorXd row_sums;
  double total = 0.0;
  double trace = 0.0;
};

GramSums precompute_sums(const kernels::GramMatrix& gram) {
  GramSums sums;
  sums.row_sums = gram.values.rowwise().sum();
  sums.total = sums.row_sums.sum();
  sums.trace = gram.values.trace();
  return sums;
}

double mmd2_from_x_block(const kernels::GramMatrix& gram, const GramSums& sums,
                         const std::uint32_t* perm, Index n, Index m) {
  const auto& g = gram.values;
  double block_x = 0.0;
  double trace_x = 0.0;
  double rows_x = 0.0;
  for (Index a = 0; a < n; ++a) {
    const Index i = static_cast<Index>(perm[a]);
    // Column i of the column-major storage; equals row i because the Gram
    // matrix is filled symmetrically.
    const double* row = g.data() + i * g.rows();
    double partial = 0.0;
    for (Index b = 0; b < n; ++b) partial += row[perm[b]];
    block_x += partial;
    trace_x += row[i];
    rows_x += sums.row_sums(i);
  }
  const double cross = rows_x - block_x;
  const double block_y = sums.total - block_x - 2.0 * cross;
  const double trace_y = sums.trace - trace_x;
  const double nd = static_cast<double>(n);
  const double md = static_cast<double>(m);
  return (block_x - trace_x) / (nd * (nd - 1.0)) +
         (block_y - trace_y) / (md * (md - 1.0)) - 2.0 * cross / (nd * md);
}

}  // namespace

PermutationPlan make_plan(Index n, Index m, int permutation_count,
                          std::uint64_t seed) {
  if (n + m < 2) throw DataError("permutation plan requires n + m >= 2");
  if (permutation_count < 1) throw ConfigError("permutation count must be >= 1");

  const std::size_t total = static_cast<std::size_t>(n + m);
  std::vector<std::uint32_t> identity(total);
  std::iota(identity.begin(), identity.end(), 0u);

  PermutationPlan plan;
  plan.seed = seed;
  plan.count_random = permutation_count;
  plan.permutations.reserve(static_cast<std::size_t>(permutation_count) + 1);

  Rng rng(seed);
  for (int b = 0; b < permutation_count; ++b) {
    std::vector<std::uint32_t> perm = identity;
    rng.shuffle(perm);
    plan.permutations.push_back(std::move(perm));
  }
  plan.permutations.push_back(identity);
  return plan;
}

void TestConfig::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must be in (0, 1)");
  if (permutations < 1) throw ConfigError("permutation count must be >= 1");
  statistics::FuseConfig{lambda, form}.validate();
}

TestResult permutation_test(const statistics::PooledGrams& pooled,
                            const TestConfig& config, int workers) {
  config.validate();
  pooled.validate();
  const Index n = pooled.n;
  const Index m = pooled.m;
  if (n < 2 || m < 2) {
    throw DataError("permutation test requires at least two samples per group");
  }

  const PermutationPlan plan = make_plan(n, m, config.permutations, config.seed);
  const std::size_t total_stats = plan.size();
  const statistics::FuseConfig fuse_config{config.lambda, config.form};

  std::vector<std::size_t> active;
  std::vector<double> active_weights;
  for (std::size_t k = 0; k < pooled.pool.size(); ++k) {
    if (pooled.pool.weights[k] > 0.0) {
      active.push_back(k);
      active_weights.push_back(pooled.pool.weights[k]);
    }
  }
  if (active.empty()) throw ConfigError("pool has no kernel with positive weight");

  std::vector<GramSums> sums;
  sums.reserve(active.size());
  for (const std::size_t k : active) sums.push_back(precompute_sums(pooled.grams[k]));

  std::vector<double> stats(total_stats);
  parallel_for(static_cast<std::int64_t>(total_stats), workers,
               [&](std::int64_t b) {
                 const auto& perm = plan.permutations[static_cast<std::size_t>(b)];
                 std::vector<double> values(active.size());
                 for (std::size_t a = 0; a < active.size(); ++a) {
                   values[a] = mmd2_from_x_block(pooled.grams[active[a]], sums[a],
                                                 perm.data(), n, m);
                 }
                 stats[static_cast<std::size_t>(b)] =
                     statistics::fuse1_from_values(values, active_weights,
                                                   fuse_config);
               });

  const double observed = stats.back();

  int count_geq = 0;
  for (std::size_t b = 0; b + 1 < total_stats; ++b) {
    if (stats[b] >= observed) ++count_geq;
  }
  const double p_value =
      static_cast<double>(1 + count_geq) / static_cast<double>(total_stats);

  // Rejection boundary: the smallest attained value t such that at most
  // floor(alpha * (B + 1)) of the B+1 statistics are >= t. Rejecting when
  // the observed statistic reaches this boundary is exactly the p <= alpha
  // test, which keeps the type I error at or below alpha for every B.
  std::vector<double> sorted(stats);
  std::sort(sorted.begin(), sorted.end());
  const auto allowed = static_cast<std::size_t>(
      std::floor(config.alpha * static_cast<double>(total_stats)));
  double threshold = std::numeric_limits<double>::infinity();
  if (allowed >= 1) {
    const double boundary = sorted[total_stats - allowed - 1];
    for (std::size_t j = total_stats - allowed; j < total_stats; ++j) {
      if (sorted[j] > boundary) {
        threshold = sorted[j];
        break;
      }
    }
  }

  TestResult result;
  result.statistic = observed;
  result.threshold = threshold;
  result.p_value = p_value;
  result.reject = observed >= threshold;

  std::vector<Index> idx_x(static_cast<std::size_t>(n));
  std::vector<Index> idx_y(static_cast<std::size_t>(m));
  std::iota(idx_x.begin(), idx_x.end(), Index{0});
  std::iota(idx_y.begin(), idx_y.end(), n);
  result.per_kernel_mmd.reserve(pooled.pool.size());
  for (std::size_t k = 0; k < pooled.pool.size(); ++k) {
    result.per_kernel_mmd.push_back(
        statistics::mmd2_unbiased(pooled.grams[k], idx_x, idx_y));
  }

  if (config.keep_null_stats) result.null_stats = std::move(stats);
  return result;
}

bool reject_decision(const TestResult& result) { return result.reject; }

}  // namespace mmdfuse::testing
