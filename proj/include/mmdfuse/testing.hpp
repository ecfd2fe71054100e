#pragma once

#include <cstdint>
#include <vector>

#include "mmdfuse/statistics.hpp"
#include "mmdfuse/types.hpp"

namespace mmdfuse::testing {

// B i.i.d. uniform permutations of [0, n+m) followed by the identity, so the
// observed labeling is always element B+1 of the comparison set.
struct PermutationPlan {
  std::vector<std::vector<std::uint32_t>> permutations;
  std::uint64_t seed = 0;
  int count_random = 0;

  std::size_t size() const { return permutations.size(); }
};

PermutationPlan make_plan(Index n, Index m, int permutation_count,
                          std::uint64_t seed);

struct TestConfig {
  double alpha = 0.05;
  int permutations = 2000;
  double lambda = 1.0;
  statistics::FuseForm form = statistics::FuseForm::log_sum_exp;
  std::uint64_t seed = 0;
  bool keep_null_stats = false;

  void validate() const;
};

// Outcome of one permutation test. `threshold` is the rejection boundary for
// the observed statistic: the smallest value of the statistic that would be
// rejected at this alpha given the permuted null set (+inf when no value
// rejects). With that convention, reject == (statistic >= threshold) and
// reject == (p_value <= alpha) agree for every input, including fully tied
// null sets.
struct TestResult {
  double statistic = 0.0;
  double threshold = 0.0;
  double p_value = 1.0;
  bool reject = false;
  std::vector<double> per_kernel_mmd;
  std::vector<double> null_stats;  // populated when keep_null_stats is set
};

// Evaluates the aggregate statistic on every permutation of the plan by index
// relabeling over the cached Gram matrices, then compares the observed value
// against the permuted null set.
TestResult permutation_test(const statistics::PooledGrams& pooled,
                            const TestConfig& config, int workers = 1);

bool reject_decision(const TestResult& result);

}  // namespace mmdfuse::testing
