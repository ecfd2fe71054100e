#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mmdfuse/errors.hpp"
#include "mmdfuse/kernels.hpp"
#include "mmdfuse/rng.hpp"
#include "mmdfuse/statistics.hpp"
#include "oracles.hpp"

using namespace mmdfuse;
using kernels::KernelSpec;

namespace {

FeatureMatrix random_matrix(Rng& rng, Index rows, Index cols, double scale = 1.0) {
  FeatureMatrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) m(i, j) = scale * rng.normal();
  }
  return m;
}

std::vector<Index> iota_indices(Index from, Index count) {
  std::vector<Index> idx(static_cast<std::size_t>(count));
  std::iota(idx.begin(), idx.end(), from);
  return idx;
}

statistics::KernelPool single_kernel_pool(const KernelSpec& spec) {
  statistics::KernelPool pool;
  pool.specs = {spec};
  pool.weights = {1.0};
  return pool;
}

}  // namespace

TEST_CASE("mmd2_unbiased closed forms") {
  // Four identical points, unit-diagonal kernel: 1 + 1 - 2 = 0.
  FeatureMatrix z(4, 1);
  z << 0.5, 0.5, 0.5, 0.5;
  const auto g = kernels::gram(KernelSpec::gaussian(1.0), z);
  const auto idx_x = iota_indices(0, 2);
  const auto idx_y = iota_indices(2, 2);
  CHECK(statistics::mmd2_unbiased(g, idx_x, idx_y) == doctest::Approx(0.0));

  // X = {0, 0}, Y = {c, c}: 2 (1 - exp(-c^2 / (2 sigma^2))).
  const double c = 1.7;
  const double sigma = 0.8;
  FeatureMatrix z2(4, 1);
  z2 << 0.0, 0.0, c, c;
  const auto g2 = kernels::gram(KernelSpec::gaussian(sigma), z2);
  const double expected = 2.0 * (1.0 - std::exp(-c * c / (2.0 * sigma * sigma)));
  CHECK(statistics::mmd2_unbiased(g2, idx_x, idx_y) ==
        doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("mmd2_unbiased equals raw double loops through permuted indices") {
  Rng rng(1234);
  for (int trial = 0; trial < 50; ++trial) {
    const Index n = 2 + static_cast<Index>(rng.uniform_below(9));
    const Index m = 2 + static_cast<Index>(rng.uniform_below(9));
    const Index dims = 1 + static_cast<Index>(rng.uniform_below(3));
    const FeatureMatrix z = random_matrix(rng, n + m, dims);
    const KernelSpec spec = KernelSpec::gaussian(0.5 + rng.uniform());
    const auto g = kernels::gram(spec, z);

    std::vector<std::uint32_t> perm(static_cast<std::size_t>(n + m));
    std::iota(perm.begin(), perm.end(), 0u);
    rng.shuffle(perm);

    std::vector<Index> idx_x;
    std::vector<Index> idx_y;
    for (Index i = 0; i < n; ++i) idx_x.push_back(static_cast<Index>(perm[i]));
    for (Index i = n; i < n + m; ++i) idx_y.push_back(static_cast<Index>(perm[i]));

    FeatureMatrix px(n, dims);
    FeatureMatrix py(m, dims);
    for (Index i = 0; i < n; ++i) px.row(i) = z.row(idx_x[static_cast<std::size_t>(i)]);
    for (Index i = 0; i < m; ++i) py.row(i) = z.row(idx_y[static_cast<std::size_t>(i)]);

    const double via_indices = statistics::mmd2_unbiased(g, idx_x, idx_y);
    const double via_raw = oracles::mmd2_double_loop(
        px, py, [&](auto a, auto b) { return kernels::eval_kernel(spec, a, b); });
    CHECK(std::abs(via_indices - via_raw) < 1e-12);
  }
}

TEST_CASE("mmd2_unbiased validates index sets") {
  FeatureMatrix z(5, 1);
  z << 0.0, 1.0, 2.0, 3.0, 4.0;
  const auto g = kernels::gram(KernelSpec::gaussian(1.0), z);
  const std::vector<Index> two = {0, 1};
  const std::vector<Index> one = {2};
  const std::vector<Index> overlapping = {1, 2};
  const std::vector<Index> out_of_range = {3, 7};
  CHECK_THROWS_AS(statistics::mmd2_unbiased(g, two, one), DataError);
  CHECK_THROWS_AS(statistics::mmd2_unbiased(g, one, two), DataError);
  CHECK_THROWS_AS(statistics::mmd2_unbiased(g, two, overlapping), ConfigError);
  CHECK_THROWS_AS(statistics::mmd2_unbiased(g, two, out_of_range), ConfigError);
}

TEST_CASE("mmd2_unbiased exchange symmetry for equal group sizes") {
  Rng rng(77);
  const FeatureMatrix z = random_matrix(rng, 12, 2);
  const auto g = kernels::gram(KernelSpec::laplace(1.1), z);
  const auto idx_x = iota_indices(0, 6);
  const auto idx_y = iota_indices(6, 6);
  CHECK(statistics::mmd2_unbiased(g, idx_x, idx_y) ==
        statistics::mmd2_unbiased(g, idx_y, idx_x));
}

TEST_CASE("mmd2_unbiased is unbiased under the null") {
  Rng rng(31337);
  const KernelSpec spec = KernelSpec::gaussian(1.0);
  const int draws = 2000;
  std::vector<double> values;
  values.reserve(draws);
  for (int d = 0; d < draws; ++d) {
    const FeatureMatrix z = random_matrix(rng, 20, 1);
    const auto g = kernels::gram(spec, z);
    values.push_back(
        statistics::mmd2_unbiased(g, iota_indices(0, 10), iota_indices(10, 10)));
  }
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / draws;
  double variance = 0.0;
  for (const double v : values) variance += (v - mean) * (v - mean);
  variance /= draws - 1;
  const double se = std::sqrt(variance / draws);
  CHECK(std::abs(mean) < 4.0 * se);
}

TEST_CASE("fuse1 reduces to the single MMD for r = 1") {
  Rng rng(42);
  const FeatureMatrix z = random_matrix(rng, 10, 2);
  const auto pooled =
      statistics::make_pooled_grams(single_kernel_pool(KernelSpec::gaussian(0.9)), z, 5, 5);
  const auto idx_x = iota_indices(0, 5);
  const auto idx_y = iota_indices(5, 5);
  const double direct = statistics::mmd2_unbiased(pooled.grams[0], idx_x, idx_y);
  for (const double lambda : {0.1, 1.0, 7.5}) {
    const double fused =
        statistics::fuse1(pooled, idx_x, idx_y, statistics::FuseConfig{lambda});
    CHECK(std::abs(fused - direct) < 1e-14);
  }
}

TEST_CASE("fuse1 matches a hand-evaluated two-kernel case") {
  // Uniform weights, lambda = 1, MMD values (0, 1): log((1 + e) / 2).
  const std::vector<double> values = {0.0, 1.0};
  const std::vector<double> weights = {0.5, 0.5};
  const double expected = std::log((1.0 + std::exp(1.0)) / 2.0);
  const double fused =
      statistics::fuse1_from_values(values, weights, statistics::FuseConfig{1.0});
  CHECK(fused == doctest::Approx(expected).epsilon(1e-14));
  CHECK(fused == doctest::Approx(0.620115).epsilon(1e-5));
}

TEST_CASE("fuse1 respects the log-sum-exp envelope bounds") {
  Rng rng(90210);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t r = 1 + rng.uniform_below(25);
    std::vector<double> values(r);
    std::vector<double> weights(r);
    double total = 0.0;
    for (std::size_t k = 0; k < r; ++k) {
      values[k] = 2.0 * rng.uniform() - 1.0;
      weights[k] = rng.uniform() < 0.15 ? 0.0 : rng.uniform_positive();
      total += weights[k];
    }
    if (total == 0.0) {
      weights[0] = 1.0;
      total = 1.0;
    }
    for (auto& w : weights) w /= total;

    const double lambda = std::exp(rng.uniform() * std::log(100.0)) * 0.1;  // 0.1..10
    const double fused =
        statistics::fuse1_from_values(values, weights, statistics::FuseConfig{lambda});

    std::size_t k_star = 0;
    for (std::size_t k = 1; k < r; ++k) {
      if (values[k] > values[k_star]) k_star = k;
    }
    const double v_max = values[k_star];
    const double lower = weights[k_star] > 0.0
                             ? v_max - std::log(1.0 / weights[k_star]) / lambda
                             : -std::numeric_limits<double>::infinity();
    CHECK(fused <= v_max + 1e-12);
    CHECK(fused >= lower - 1e-12);
  }
}

TEST_CASE("fuse1 is monotone in each component and approaches the max") {
  Rng rng(5150);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t r = 2 + rng.uniform_below(10);
    std::vector<double> values(r);
    std::vector<double> weights(r, 1.0 / static_cast<double>(r));
    for (auto& v : values) v = rng.normal();
    const statistics::FuseConfig config{1.0};
    const double base = statistics::fuse1_from_values(values, weights, config);
    const std::size_t bump = rng.uniform_below(r);
    values[bump] += 0.25;
    CHECK(statistics::fuse1_from_values(values, weights, config) >= base);

    const double v_max = *std::max_element(values.begin(), values.end());
    const double nearly_max =
        statistics::fuse1_from_values(values, weights, statistics::FuseConfig{1e6});
    CHECK(std::abs(nearly_max - v_max) < 1e-5);
  }
}

TEST_CASE("fuse1 skips zero-weight kernels and rejects empty pools") {
  const std::vector<double> values = {0.3, 1e9};
  const std::vector<double> weights = {1.0, 0.0};
  const double fused =
      statistics::fuse1_from_values(values, weights, statistics::FuseConfig{1.0});
  CHECK(std::abs(fused - 0.3) < 1e-14);

  const std::vector<double> none = {0.0, 0.0};
  CHECK_THROWS_AS(
      statistics::fuse1_from_values(values, none, statistics::FuseConfig{1.0}),
      ConfigError);
  CHECK_THROWS_AS(
      statistics::fuse1_from_values(values, weights, statistics::FuseConfig{-1.0}),
      ConfigError);
}

TEST_CASE("log_of_mean form evaluates the literal average") {
  const std::vector<double> values = {0.5, 1.5};
  const std::vector<double> weights = {0.5, 0.5};
  const statistics::FuseConfig config{1.0, statistics::FuseForm::log_of_mean};
  // log(0.5 * 0.5 + 0.5 * 1.5) = log(1) = 0.
  CHECK(statistics::fuse1_from_values(values, weights, config) ==
        doctest::Approx(0.0));

  // Non-positive weighted mean has no logarithm; reported as -inf.
  const std::vector<double> negative = {-1.0, -2.0};
  CHECK(statistics::fuse1_from_values(negative, weights, config) ==
        -std::numeric_limits<double>::infinity());
}

TEST_CASE("kernel pool validation") {
  statistics::KernelPool pool;
  pool.specs = {KernelSpec::gaussian(1.0), KernelSpec::laplace(1.0)};
  pool.weights = {0.5, 0.5};
  CHECK_NOTHROW(pool.validate());

  pool.weights = {0.75, 0.75};
  CHECK_THROWS_AS(pool.validate(), ConfigError);
  pool.weights = {1.5, -0.5};
  CHECK_THROWS_AS(pool.validate(), ConfigError);
  pool.weights = {1.0};
  CHECK_THROWS_AS(pool.validate(), ConfigError);
}

TEST_CASE("quantile agrees with direct enumeration of the definition") {
  CHECK(statistics::quantile({1.0, 2.0, 3.0, 4.0}, 0.5) == 2.0);
  CHECK(statistics::quantile({3.0, 1.0, 2.0}, 1.0) == 3.0);
  CHECK(statistics::quantile({5.0, 5.0, 5.0}, 0.2) == 5.0);
  CHECK(statistics::quantile({5.0, 5.0, 5.0}, 0.99) == 5.0);
  CHECK_THROWS_AS(statistics::quantile({}, 0.5), DataError);
  CHECK_THROWS_AS(statistics::quantile({1.0}, 0.0), ConfigError);
  CHECK_THROWS_AS(statistics::quantile({1.0}, 1.5), ConfigError);

  Rng rng(8675309);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t size = 1 + rng.uniform_below(50);
    std::vector<double> values(size);
    for (auto& v : values) {
      // Small integer support keeps ties frequent.
      v = static_cast<double>(rng.uniform_below(8)) / 2.0;
    }
    const double q = rng.uniform_positive();
    const double mine = statistics::quantile(values, q);
    const double reference = oracles::quantile_enumeration(values, q);
    CHECK(mine == reference);
    CHECK(std::count(values.begin(), values.end(), mine) > 0);
  }
}

TEST_CASE("quantile is nondecreasing in q") {
  Rng rng(24601);
  std::vector<double> values(20);
  for (auto& v : values) v = rng.normal();
  double previous = -std::numeric_limits<double>::infinity();
  for (double q = 0.05; q <= 1.0; q += 0.05) {
    const double current = statistics::quantile(values, q);
    CHECK(current >= previous);
    previous = current;
  }
}
