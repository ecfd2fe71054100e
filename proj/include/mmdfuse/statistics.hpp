#pragma once

#include <span>
#include <vector>

#include "mmdfuse/kernels.hpp"
#include "mmdfuse/types.hpp"

namespace mmdfuse::statistics {

// Ordered kernel set with a prior weight vector (non-negative, sums to 1).
struct KernelPool {
  std::vector<kernels::KernelSpec> specs;
  std::vector<double> weights;

  std::size_t size() const { return specs.size(); }
  void validate() const;
};

// Gram matrices of every kernel in a pool over one pooled sample Z, where
// rows [0, n) came from the first group and [n, n+m) from the second.
// Computing these once lets the permutation test reuse them for every
// index relabeling.
struct PooledGrams {
  std::vector<kernels::GramMatrix> grams;
  Index n = 0;
  Index m = 0;
  KernelPool pool;

  Index total() const { return n + m; }
  void validate() const;
};

PooledGrams make_pooled_grams(const KernelPool& pool, const FeatureMatrix& z,
                              Index n, Index m);

// Aggregation form. log_sum_exp is the soft maximum
//   (1/lambda) * log sum_k w_k * exp(lambda * v_k),
// the default; log_of_mean is the alternative
//   (1/lambda) * log sum_k w_k * (lambda * v_k),
// kept only for side-by-side comparison (it is undefined for non-positive
// weighted means, where it returns -inf).
enum class FuseForm { log_sum_exp, log_of_mean };

struct FuseConfig {
  double lambda = 1.0;
  FuseForm form = FuseForm::log_sum_exp;

  void validate() const;
};

// Unbiased MMD^2 estimate from a cached Gram matrix and two disjoint index
// sets: mean of the two within-group off-diagonal blocks minus twice the
// cross-block mean. May be negative.
double mmd2_unbiased(const kernels::GramMatrix& gram,
                     std::span<const Index> idx_x, std::span<const Index> idx_y);

// Soft-maximum aggregate over per-kernel MMD^2 values; zero-weight entries
// are skipped entirely.
double fuse1_from_values(std::span<const double> mmd_values,
                         std::span<const double> weights,
                         const FuseConfig& config);

double fuse1(const PooledGrams& pooled, std::span<const Index> idx_x,
             std::span<const Index> idx_y, const FuseConfig& config);

// Finite-multiset quantile: the smallest attained value r such that the
// fraction of elements <= r is at least q, for q in (0, 1].
double quantile(std::vector<double> values, double q);

}  // namespace mmdfuse::statistics
