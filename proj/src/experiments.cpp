#include "mmdfuse/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "mmdfuse/errors.hpp"
#include "mmdfuse/parallel.hpp"
#include "mmdfuse/rng.hpp"
#include "mmdfuse/testing.hpp"

namespace mmdfuse::experiments {

namespace {

FeatureMatrix pool_rows(const data::Dataset& x, const data::Dataset& y) {
  FeatureMatrix z(x.rows() + y.rows(), x.dims());
  z.topRows(x.rows()) = x.features;
  z.bottomRows(y.rows()) = y.features;
  return z;
}

// One trial: subsample, rebuild the pool from the subsample, test.
bool run_trial(const PowerConfig& config, const data::Dataset& x,
               const data::Dataset& y, Index size, std::uint64_t trial_seed,
               bool mix_first) {
  const data::Dataset* gx = &x;
  const data::Dataset* gy = &y;
  std::pair<data::Dataset, data::Dataset> mixed;
  if (mix_first) {
    mixed = data::null_mixture(x, y, trial_seed);
    gx = &mixed.first;
    gy = &mixed.second;
  }
  const auto [sub_x, sub_y] = data::subsample(*gx, *gy, size, trial_seed);
  const FeatureMatrix z = pool_rows(sub_x, sub_y);
  const statistics::KernelPool pool = build_pool(config.pool, z);
  const statistics::PooledGrams pooled =
      statistics::make_pooled_grams(pool, z, size, size);
  testing::TestConfig test_config;
  test_config.alpha = config.alpha;
  test_config.permutations = config.permutations;
  test_config.lambda = config.lambda;
  test_config.form = config.form;
  test_config.seed = derive_seed(trial_seed, kStreamPermutation);
  return testing::permutation_test(pooled, test_config).reject;
}

PowerCurve estimate_curve(const PowerConfig& config, const data::Dataset& x,
                          const data::Dataset& y, int workers, bool mix_first,
                          const std::string& metric) {
  config.validate();
  x.validate();
  y.validate();
  if (x.dims() != y.dims()) throw DataError("groups have different dimensions");
  const Index available = std::min(x.rows(), y.rows());
  for (const Index size : config.sample_sizes) {
    if (size > available) {
      std::ostringstream msg;
      msg << "sample size " << size << " exceeds available group size "
          << available;
      throw DataError(msg.str());
    }
  }

  const std::size_t n_sizes = config.sample_sizes.size();
  const std::size_t reps = static_cast<std::size_t>(config.repetitions);
  std::vector<char> rejected(n_sizes * reps, 0);

  parallel_for(static_cast<std::int64_t>(n_sizes * reps), workers,
               [&](std::int64_t job) {
                 const std::size_t si = static_cast<std::size_t>(job) / reps;
                 const std::size_t rep = static_cast<std::size_t>(job) % reps;
                 const Index size = config.sample_sizes[si];
                 const std::uint64_t trial_seed =
                     derive_seed(config.seed, kStreamTrial,
                                 static_cast<std::uint64_t>(size), rep);
                 rejected[static_cast<std::size_t>(job)] =
                     run_trial(config, x, y, size, trial_seed, mix_first) ? 1 : 0;
               });

  PowerCurve curve;
  curve.metric = metric;
  curve.config = config;
  curve.points.reserve(n_sizes);
  for (std::size_t si = 0; si < n_sizes; ++si) {
    int count = 0;
    for (std::size_t rep = 0; rep < reps; ++rep) count += rejected[si * reps + rep];
    const double fraction = static_cast<double>(count) / static_cast<double>(reps);
    const double estimate = mix_first ? 1.0 - fraction : fraction;
    CurvePoint point;
    point.sample_size = config.sample_sizes[si];
    point.estimate = estimate;
    point.std_error =
        std::sqrt(estimate * (1.0 - estimate) / static_cast<double>(reps));
    point.repetitions = config.repetitions;
    curve.points.push_back(point);
  }
  return curve;
}

}  // namespace

double PoolSpec::resolved_hybrid_p() const {
  if (hybrid_p) return *hybrid_p;
  if (classical && quantum) return 0.5;
  return quantum ? 1.0 : 0.0;
}

void PoolSpec::validate() const {
  if (!classical && !quantum) {
    throw ConfigError("pool spec must include a classical or quantum subset");
  }
  if (classical) {
    if (classical->families.empty()) {
      throw ConfigError("classical pool subset needs at least one family");
    }
    std::set<kernels::KernelFamily> seen;
    for (const auto family : classical->families) {
      if (kernels::is_quantum(family)) {
        throw ConfigError("classical pool subset cannot contain quantum families");
      }
      if (!seen.insert(family).second) {
        throw ConfigError("duplicate family in classical pool subset");
      }
    }
    if (classical->bandwidth_count < 1) {
      throw ConfigError("bandwidth count must be >= 1");
    }
    if (!(classical->quantile_lo > 0.0 &&
          classical->quantile_lo < classical->quantile_hi &&
          classical->quantile_hi < 1.0)) {
      throw ConfigError("bandwidth quantiles must satisfy 0 < lo < hi < 1");
    }
  }
  if (quantum) {
    if (!kernels::is_quantum(quantum->family)) {
      throw ConfigError("quantum pool subset requires a quantum family");
    }
    if (quantum->explicit_scalings.empty()) {
      if (quantum->scaling_count < 1 || !(quantum->scaling_lo > 0.0) ||
          !(quantum->scaling_lo <= quantum->scaling_hi)) {
        throw ConfigError("quantum scaling grid requires 0 < lo <= hi and count >= 1");
      }
    } else {
      for (const double s : quantum->explicit_scalings) {
        if (!(s > 0.0) || !std::isfinite(s)) {
          throw ConfigError("explicit scalings must be positive");
        }
      }
    }
    if (quantum->family == kernels::KernelFamily::quantum_entangled &&
        quantum->depth < 1) {
      throw ConfigError("entangled pool requires depth >= 1");
    }
  }
  const double p = resolved_hybrid_p();
  if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("hybrid p must be in [0, 1]");
  if (p > 0.0 && !quantum) {
    throw ConfigError("hybrid p > 0 requires a quantum subset");
  }
  if (p < 1.0 && !classical) {
    throw ConfigError("hybrid p < 1 requires a classical subset");
  }
}

statistics::KernelPool build_pool(const PoolSpec& spec, const FeatureMatrix& z_ref) {
  spec.validate();
  statistics::KernelPool pool;

  std::size_t classical_count = 0;
  if (spec.classical) {
    const auto bandwidths =
        kernels::bandwidth_grid(z_ref, spec.classical->bandwidth_count,
                                spec.classical->quantile_lo,
                                spec.classical->quantile_hi);
    for (const auto family : spec.classical->families) {
      for (const double bw : bandwidths) {
        kernels::KernelSpec k;
        k.family = family;
        k.bandwidth = bw;
        pool.specs.push_back(k);
      }
    }
    classical_count = pool.specs.size();
  }

  if (spec.quantum) {
    const std::vector<double> scalings =
        spec.quantum->explicit_scalings.empty()
            ? kernels::scaling_grid(spec.quantum->scaling_lo,
                                    spec.quantum->scaling_hi,
                                    spec.quantum->scaling_count)
            : spec.quantum->explicit_scalings;
    for (const double s : scalings) {
      kernels::KernelSpec k;
      k.family = spec.quantum->family;
      k.scaling = s;
      if (k.family == kernels::KernelFamily::quantum_entangled) {
        k.depth = spec.quantum->depth;
      }
      pool.specs.push_back(k);
    }
  }

  const std::size_t quantum_count = pool.specs.size() - classical_count;
  const double p = spec.resolved_hybrid_p();
  pool.weights.resize(pool.specs.size());
  for (std::size_t k = 0; k < classical_count; ++k) {
    pool.weights[k] = (1.0 - p) / static_cast<double>(classical_count);
  }
  for (std::size_t k = classical_count; k < pool.specs.size(); ++k) {
    pool.weights[k] = p / static_cast<double>(quantum_count);
  }
  pool.validate();
  return pool;
}

void PowerConfig::validate() const {
  if (sample_sizes.empty()) throw ConfigError("sample sizes must not be empty");
  Index previous = 0;
  for (const Index size : sample_sizes) {
    if (size < 2) throw ConfigError("sample sizes must be >= 2");
    if (size <= previous) throw ConfigError("sample sizes must be ascending");
    previous = size;
  }
  if (repetitions < 1) throw ConfigError("repetitions must be >= 1");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must be in (0, 1)");
  if (permutations < 1) throw ConfigError("permutation count must be >= 1");
  statistics::FuseConfig{lambda, form}.validate();
  pool.validate();
}

PowerCurve estimate_power(const PowerConfig& config, const data::Dataset& x,
                          const data::Dataset& y, int workers) {
  return estimate_curve(config, x, y, workers, false, "power");
}

PowerCurve estimate_type1(const PowerConfig& config, const data::Dataset& x,
                          const data::Dataset& y, int workers) {
  return estimate_curve(config, x, y, workers, true, "tnr");
}

std::vector<std::pair<double, PowerCurve>> hybrid_sweep(
    const PowerConfig& config, const data::Dataset& x, const data::Dataset& y,
    const std::vector<double>& p_grid, int workers) {
  if (p_grid.empty()) throw ConfigError("hybrid sweep grid must not be empty");
  for (const double p : p_grid) {
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("hybrid p must be in [0, 1]");
  }
  std::vector<std::pair<double, PowerCurve>> curves;
  curves.reserve(p_grid.size());
  for (const double p : p_grid) {
    PowerConfig point_config = config;
    point_config.pool.hybrid_p = p;
    curves.emplace_back(p, estimate_power(point_config, x, y, workers));
  }
  return curves;
}

std::vector<std::pair<double, PowerCurve>> lambda_sweep(
    const PowerConfig& config, const data::Dataset& x, const data::Dataset& y,
    const std::vector<double>& lambda_grid, int workers) {
  if (lambda_grid.empty()) throw ConfigError("lambda sweep grid must not be empty");
  std::vector<std::pair<double, PowerCurve>> curves;
  curves.reserve(lambda_grid.size());
  for (const double lambda : lambda_grid) {
    PowerConfig point_config = config;
    point_config.lambda = lambda;
    curves.emplace_back(lambda, estimate_power(point_config, x, y, workers));
  }
  return curves;
}

}  // namespace mmdfuse::experiments
