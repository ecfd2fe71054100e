#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mmdfuse/data.hpp"
#include "mmdfuse/statistics.hpp"
#include "mmdfuse/types.hpp"

namespace mmdfuse::experiments {

struct ClassicalPoolSpec {
  std::vector<kernels::KernelFamily> families = {
      kernels::KernelFamily::gaussian, kernels::KernelFamily::laplace};
  int bandwidth_count = 10;
  double quantile_lo = 0.05;
  double quantile_hi = 0.95;
};

struct QuantumPoolSpec {
  kernels::KernelFamily family = kernels::KernelFamily::quantum_product;
  double scaling_lo = 1e-3;
  double scaling_hi = 1.0;
  int scaling_count = 5;
  std::vector<double> explicit_scalings;  // overrides the grid when non-empty
  int depth = 1;
};

// Declarative pool: classical bandwidth grids per family plus a quantum
// scaling grid, with hybrid_p the total prior mass on the quantum subset
// (0 = purely classical, 1 = purely quantum). When unset it resolves to 0.5
// for two-subset pools and to the pure endpoint otherwise.
struct PoolSpec {
  std::optional<ClassicalPoolSpec> classical = ClassicalPoolSpec{};
  std::optional<QuantumPoolSpec> quantum = QuantumPoolSpec{};
  std::optional<double> hybrid_p;

  double resolved_hybrid_p() const;
  void validate() const;
};

// Builds the kernel pool for one pooled sample: classical bandwidths from the
// sample's pairwise-distance quantiles, quantum scalings from the grid, and
// weights (1-p)/r_C on each classical kernel and p/r_Q on each quantum one.
statistics::KernelPool build_pool(const PoolSpec& spec, const FeatureMatrix& z_ref);

struct PowerConfig {
  std::vector<Index> sample_sizes = {10, 20, 30, 40, 50, 60, 70, 80, 90};
  int repetitions = 50;
  double alpha = 0.05;
  int permutations = 2000;
  double lambda = 1.0;
  statistics::FuseForm form = statistics::FuseForm::log_sum_exp;
  PoolSpec pool;
  std::uint64_t seed = 0;

  void validate() const;
};

struct CurvePoint {
  Index sample_size = 0;
  double estimate = 0.0;   // power, or true-negative rate for type-I runs
  double std_error = 0.0;  // sqrt(p(1-p)/repetitions)
  int repetitions = 0;
};

struct PowerCurve {
  std::vector<CurvePoint> points;
  std::string metric;  // "power" or "tnr"
  PowerConfig config;
};

// Rejection rate per sample size. Each trial subsamples n rows per group from
// the source (seed derived from master seed, size, and repetition index),
// rebuilds the pool from the subsample, and runs one permutation test.
PowerCurve estimate_power(const PowerConfig& config, const data::Dataset& x,
                          const data::Dataset& y, int workers = 1);

// Same trial layout, but each trial first remixes the two groups into one
// pooled null before subsampling; reports the true-negative rate.
PowerCurve estimate_type1(const PowerConfig& config, const data::Dataset& x,
                          const data::Dataset& y, int workers = 1);

// Power curves across a grid of hybrid weights p. All trial-level randomness
// is shared across grid points, so curves differ only through pool weights.
std::vector<std::pair<double, PowerCurve>> hybrid_sweep(
    const PowerConfig& config, const data::Dataset& x, const data::Dataset& y,
    const std::vector<double>& p_grid, int workers = 1);

// Same pairing discipline with the soft-max temperature varying instead.
std::vector<std::pair<double, PowerCurve>> lambda_sweep(
    const PowerConfig& config, const data::Dataset& x, const data::Dataset& y,
    const std::vector<double>& lambda_grid, int workers = 1);

}  // namespace mmdfuse::experiments
