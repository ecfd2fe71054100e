// mmdfuse: kernel two-sample testing from the command line.
//
// Subcommands: test (one permutation test), power (power and true-negative
// curves), sweep (hybrid-weight or lambda sweeps), gen (synthetic datasets),
// report (SVG charts from curve tables). Every run writes a manifest.json
// that records the fully resolved configuration; rerunning a command with
// `--config <manifest.json>` reproduces its tables byte for byte.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>

#include "cli_support.hpp"
#include "mmdfuse/errors.hpp"
#include "mmdfuse/experiments.hpp"
#include "mmdfuse/statistics.hpp"
#include "mmdfuse/testing.hpp"
#include "report_svg.hpp"

namespace {

using namespace mmdfuse;
using cli::json;

char table_delimiter(const std::string& format) {
  if (format == "csv") return ',';
  if (format == "tsv") return '\t';
  throw ConfigError("--format must be csv or tsv");
}

std::string table_extension(const std::string& format) {
  return format == "tsv" ? ".tsv" : ".csv";
}

json finite_or_null(double value) {
  return std::isfinite(value) ? json(value) : json(nullptr);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << text;
}

std::string power_table_text(const experiments::PowerCurve& power,
                             const experiments::PowerCurve& tnr, char delim) {
  std::ostringstream out;
  out << "sample_size" << delim << "power" << delim << "stderr" << delim
      << "tnr" << delim << "tnr_stderr"
      << "\n";
  for (std::size_t i = 0; i < power.points.size(); ++i) {
    const auto& p = power.points[i];
    const auto& t = tnr.points[i];
    out << p.sample_size << delim << cli::format_g17(p.estimate) << delim
        << cli::format_g17(p.std_error) << delim << cli::format_g17(t.estimate)
        << delim << cli::format_g17(t.std_error) << "\n";
  }
  return out.str();
}

std::string sweep_table_text(const experiments::PowerCurve& curve, char delim) {
  std::ostringstream out;
  out << "sample_size" << delim << "power" << delim << "stderr"
      << "\n";
  for (const auto& p : curve.points) {
    out << p.sample_size << delim << cli::format_g17(p.estimate) << delim
        << cli::format_g17(p.std_error) << "\n";
  }
  return out.str();
}

std::string combined_table_text(
    const std::string& param_name,
    const std::vector<std::pair<double, experiments::PowerCurve>>& curves,
    char delim) {
  std::ostringstream out;
  out << param_name << delim << "sample_size" << delim << "power" << delim
      << "stderr"
      << "\n";
  for (const auto& [value, curve] : curves) {
    for (const auto& p : curve.points) {
      out << cli::format_g17(value) << delim << p.sample_size << delim
          << cli::format_g17(p.estimate) << delim << cli::format_g17(p.std_error)
          << "\n";
    }
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// test
// ---------------------------------------------------------------------------

struct TestCommand {
  cli::SourceOptions source;
  cli::PoolOptions pool;
  cli::TestParamOptions params;
  long subsample_n = 0;
  std::string out;
  std::string format = "csv";
  std::string config_path;
  CLI::Option* n_opt = nullptr;
  CLI::Option* out_opt = nullptr;
  CLI::Option* format_opt = nullptr;

  void register_options(CLI::App* cmd) {
    source.register_options(cmd);
    pool.register_options(cmd);
    params.register_options(cmd);
    n_opt = cmd->add_option("--n", subsample_n,
                            "Per-group sample size (generator size, or "
                            "subsample for file sources; 0 = all rows)")
                ->capture_default_str();
    out_opt = cmd->add_option("--out", out, "Output directory for the result "
                                            "record and manifest");
    format_opt = cmd->add_option("--format", format, "Table format (csv, tsv)")
                     ->check(CLI::IsMember({"csv", "tsv"}))
                     ->capture_default_str();
    cmd->add_option("--config", config_path,
                    "JSON config or manifest supplying defaults");
  }

  int run() {
    cli::ConfigOverlay overlay;
    if (!config_path.empty()) overlay.load(config_path, "test");
    source.apply_config(overlay);
    pool.apply_config(overlay);
    params.apply_config(overlay);
    overlay.apply(n_opt, "n", subsample_n);
    overlay.apply(out_opt, "out", out);
    overlay.apply(format_opt, "format", format);
    (void)table_delimiter(format);

    cli::SourceOptions effective = source;
    if (!effective.generator.empty() && subsample_n > 0) {
      effective.group_size = subsample_n;
    }
    auto resolved = cli::resolve_source(effective, params.seed);
    cli::check_recorded_digests(overlay.recorded_inputs(), resolved.inputs);

    data::Dataset x = std::move(resolved.x);
    data::Dataset y = std::move(resolved.y);
    if (effective.generator.empty() && subsample_n > 0) {
      std::tie(x, y) =
          data::subsample(x, y, subsample_n, derive_seed(params.seed, kStreamTrial));
    }
    if (x.rows() < 2 || y.rows() < 2) {
      throw DataError("each group needs at least two samples");
    }

    FeatureMatrix z(x.rows() + y.rows(), x.dims());
    z.topRows(x.rows()) = x.features;
    z.bottomRows(y.rows()) = y.features;
    const auto kernel_pool = experiments::build_pool(pool.resolve(), z);
    const auto pooled =
        statistics::make_pooled_grams(kernel_pool, z, x.rows(), y.rows());

    testing::TestConfig config;
    config.alpha = params.alpha;
    config.permutations = params.permutations;
    config.lambda = params.lambda;
    config.form = params.resolved_form();
    config.seed = derive_seed(params.seed, kStreamPermutation);
    const auto result =
        testing::permutation_test(pooled, config, params.resolved_workers());

    std::printf("mmdfuse test: n=%ld m=%ld D=%ld, pool r=%zu, B=%d, alpha=%g, lambda=%g\n",
                static_cast<long>(x.rows()), static_cast<long>(y.rows()),
                static_cast<long>(x.dims()), kernel_pool.size(),
                params.permutations, params.alpha, params.lambda);
    std::printf("  statistic = %.10g\n", result.statistic);
    std::printf("  threshold = %.10g\n", result.threshold);
    std::printf("  p-value   = %.10g\n", result.p_value);
    std::printf("  decision  = %s\n",
                result.reject ? "reject H0 (p <= alpha)"
                              : "fail to reject H0 (p > alpha)");

    if (!out.empty()) {
      const auto dir = cli::ensure_out_dir(out);
      json record;
      record["n"] = x.rows();
      record["m"] = y.rows();
      record["dims"] = x.dims();
      record["alpha"] = params.alpha;
      record["permutations"] = params.permutations;
      record["lambda"] = params.lambda;
      record["fuse_form"] = params.fuse_form;
      record["statistic"] = result.statistic;
      record["threshold"] = finite_or_null(result.threshold);
      record["p_value"] = result.p_value;
      record["reject"] = result.reject;
      json kernel_list = json::array();
      for (std::size_t k = 0; k < kernel_pool.size(); ++k) {
        json entry;
        entry["kernel"] = kernel_pool.specs[k].describe();
        entry["weight"] = kernel_pool.weights[k];
        entry["mmd2"] = result.per_kernel_mmd[k];
        kernel_list.push_back(entry);
      }
      record["kernels"] = kernel_list;
      write_text(dir / "test_result.json", record.dump(2) + "\n");

      cli::Manifest manifest;
      manifest.command = "test";
      manifest.master_seed = params.seed;
      manifest.inputs = resolved.inputs;
      manifest.source = resolved.description;
      manifest.outputs = {"test_result.json"};
      manifest.config = collect_config();
      manifest.write((dir / "manifest.json").string());
    }
    return 0;
  }

  json collect_config() const {
    json config = source.to_config();
    config.update(pool.to_config());
    config.update(params.to_config());
    config["n"] = subsample_n;
    config["format"] = format;
    return config;
  }
};

// ---------------------------------------------------------------------------
// power
// ---------------------------------------------------------------------------

struct PowerCommand {
  cli::SourceOptions source;
  cli::PoolOptions pool;
  cli::TestParamOptions params;
  std::vector<long> sizes = {10, 20, 30, 40, 50, 60, 70, 80, 90};
  int reps = 50;
  bool plot = false;
  std::string out;
  std::string format = "csv";
  std::string config_path;
  CLI::Option* sizes_opt = nullptr;
  CLI::Option* reps_opt = nullptr;
  CLI::Option* plot_opt = nullptr;
  CLI::Option* out_opt = nullptr;
  CLI::Option* format_opt = nullptr;

  void register_options(CLI::App* cmd) {
    source.register_options(cmd);
    pool.register_options(cmd);
    params.register_options(cmd);
    sizes_opt = cmd->add_option("--sizes", sizes, "Per-group sample sizes")
                    ->delimiter(',')
                    ->capture_default_str();
    reps_opt = cmd->add_option("--reps", reps, "Repetitions per sample size")
                   ->capture_default_str();
    plot_opt = cmd->add_flag("--plot", plot, "Also render the curve as SVG");
    out_opt = cmd->add_option("--out", out, "Output directory");
    format_opt = cmd->add_option("--format", format, "Table format (csv, tsv)")
                     ->check(CLI::IsMember({"csv", "tsv"}))
                     ->capture_default_str();
    cmd->add_option("--config", config_path,
                    "JSON config or manifest supplying defaults");
  }

  experiments::PowerConfig build_config() const {
    experiments::PowerConfig config;
    config.sample_sizes.assign(sizes.begin(), sizes.end());
    config.repetitions = reps;
    config.alpha = params.alpha;
    config.permutations = params.permutations;
    config.lambda = params.lambda;
    config.form = params.resolved_form();
    config.pool = pool.resolve();
    config.seed = params.seed;
    return config;
  }

  json collect_config() const {
    json config = source.to_config();
    config.update(pool.to_config());
    config.update(params.to_config());
    config["sizes"] = sizes;
    config["reps"] = reps;
    config["plot"] = plot;
    config["format"] = format;
    return config;
  }

  int run() {
    cli::ConfigOverlay overlay;
    if (!config_path.empty()) overlay.load(config_path, "power");
    source.apply_config(overlay);
    pool.apply_config(overlay);
    params.apply_config(overlay);
    overlay.apply(sizes_opt, "sizes", sizes);
    overlay.apply(reps_opt, "reps", reps);
    overlay.apply(plot_opt, "plot", plot);
    overlay.apply(out_opt, "out", out);
    overlay.apply(format_opt, "format", format);
    const char delim = table_delimiter(format);
    const auto dir = cli::ensure_out_dir(out);

    const auto resolved = cli::resolve_source(source, params.seed);
    cli::check_recorded_digests(overlay.recorded_inputs(), resolved.inputs);
    const auto config = build_config();
    const int workers = params.resolved_workers();

    const auto power = experiments::estimate_power(config, resolved.x, resolved.y, workers);
    const auto tnr = experiments::estimate_type1(config, resolved.x, resolved.y, workers);

    const std::string table_name = "power_curve" + table_extension(format);
    write_text(dir / table_name, power_table_text(power, tnr, delim));

    cli::Manifest manifest;
    manifest.command = "power";
    manifest.master_seed = params.seed;
    manifest.inputs = resolved.inputs;
    manifest.source = resolved.description;
    manifest.outputs = {table_name};
    manifest.config = collect_config();

    if (plot) {
      auto to_series = [](const experiments::PowerCurve& curve,
                          const std::string& label) {
        cli::CurveSeries series;
        series.label = label;
        for (const auto& p : curve.points) {
          series.xs.push_back(static_cast<double>(p.sample_size));
          series.ys.push_back(p.estimate);
          series.errs.push_back(p.std_error);
        }
        return series;
      };
      const std::vector<cli::CurveSeries> series = {to_series(power, "power"),
                                                    to_series(tnr, "tnr")};
      write_text(dir / "power_curve.svg", cli::render_svg(series, "", "estimate"));
      manifest.outputs.push_back("power_curve.svg");
    }

    manifest.write((dir / "manifest.json").string());
    std::printf("wrote %s (%zu sizes x %d reps)\n", (dir / table_name).c_str(),
                power.points.size(), reps);
    return 0;
  }
};

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

struct SweepCommand {
  PowerCommand base;  // shares source/pool/params/sizes/reps/out/format
  std::string sweep_param = "p";
  std::vector<double> grid;
  CLI::Option* sweep_opt = nullptr;
  CLI::Option* grid_opt = nullptr;

  void register_options(CLI::App* cmd) {
    base.register_options(cmd);
    sweep_opt = cmd->add_option("--sweep", sweep_param,
                                "Swept parameter: p (hybrid weight) or lambda")
                    ->check(CLI::IsMember({"p", "lambda"}))
                    ->capture_default_str();
    grid_opt = cmd->add_option("--grid", grid, "Grid values for the sweep")
                   ->delimiter(',');
  }

  int run() {
    cli::ConfigOverlay overlay;
    if (!base.config_path.empty()) overlay.load(base.config_path, "sweep");
    base.source.apply_config(overlay);
    base.pool.apply_config(overlay);
    base.params.apply_config(overlay);
    overlay.apply(base.sizes_opt, "sizes", base.sizes);
    overlay.apply(base.reps_opt, "reps", base.reps);
    overlay.apply(base.out_opt, "out", base.out);
    overlay.apply(base.format_opt, "format", base.format);
    overlay.apply(sweep_opt, "sweep", sweep_param);
    overlay.apply(grid_opt, "grid", grid);

    if (grid.empty()) throw ConfigError("--grid must list at least one value");
    const char delim = table_delimiter(base.format);
    const auto dir = cli::ensure_out_dir(base.out);

    const auto resolved = cli::resolve_source(base.source, base.params.seed);
    cli::check_recorded_digests(overlay.recorded_inputs(), resolved.inputs);
    const auto config = base.build_config();
    const int workers = base.params.resolved_workers();

    const auto curves =
        sweep_param == "p"
            ? experiments::hybrid_sweep(config, resolved.x, resolved.y, grid, workers)
            : experiments::lambda_sweep(config, resolved.x, resolved.y, grid, workers);

    cli::Manifest manifest;
    manifest.command = "sweep";
    manifest.master_seed = base.params.seed;
    manifest.inputs = resolved.inputs;
    manifest.source = resolved.description;
    manifest.config = base.collect_config();
    manifest.config["sweep"] = sweep_param;
    manifest.config["grid"] = grid;

    json mapping = json::array();
    for (std::size_t i = 0; i < curves.size(); ++i) {
      char name[64];
      std::snprintf(name, sizeof(name), "sweep_%s_%03zu%s", sweep_param.c_str(),
                    i, table_extension(base.format).c_str());
      write_text(dir / name, sweep_table_text(curves[i].second, delim));
      manifest.outputs.push_back(name);
      json entry;
      entry["file"] = name;
      entry[sweep_param] = curves[i].first;
      mapping.push_back(entry);
    }
    const std::string combined_name =
        "sweep_combined" + table_extension(base.format);
    write_text(dir / combined_name, combined_table_text(sweep_param, curves, delim));
    manifest.outputs.push_back(combined_name);
    manifest.source["grid_files"] = mapping;
    manifest.write((dir / "manifest.json").string());

    std::printf("wrote %zu sweep tables to %s\n", curves.size() + 1,
                dir.c_str());
    return 0;
  }
};

// ---------------------------------------------------------------------------
// gen
// ---------------------------------------------------------------------------

struct GenCommand {
  std::string family = "gaussian";
  double shift = 0.5;
  int dims = 2;
  long group_size = 500;
  std::uint64_t seed = 0;
  std::string out;
  std::string format = "csv";
  std::string config_path;
  CLI::Option* family_opt = nullptr;
  CLI::Option* shift_opt = nullptr;
  CLI::Option* dims_opt = nullptr;
  CLI::Option* size_opt = nullptr;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* out_opt = nullptr;
  CLI::Option* format_opt = nullptr;

  void register_options(CLI::App* cmd) {
    family_opt = cmd->add_option("--family,--gen", family,
                                 "Generator family (gaussian or lognormal)")
                     ->check(CLI::IsMember({"gaussian", "lognormal"}))
                     ->capture_default_str();
    shift_opt = cmd->add_option("--d", shift, "Mean shift d")->capture_default_str();
    dims_opt = cmd->add_option("--dims", dims, "Dimensions D")->capture_default_str();
    size_opt = cmd->add_option("--m", group_size, "Rows per group")
                   ->capture_default_str();
    seed_opt = cmd->add_option("--seed", seed, "Master seed")->capture_default_str();
    out_opt = cmd->add_option("--out", out, "Output directory");
    format_opt = cmd->add_option("--format", format, "File format (csv, tsv)")
                     ->check(CLI::IsMember({"csv", "tsv"}))
                     ->capture_default_str();
    cmd->add_option("--config", config_path,
                    "JSON config or manifest supplying defaults");
  }

  int run() {
    cli::ConfigOverlay overlay;
    if (!config_path.empty()) overlay.load(config_path, "gen");
    overlay.apply(family_opt, "family", family);
    overlay.apply(shift_opt, "d", shift);
    overlay.apply(dims_opt, "dims", dims);
    overlay.apply(size_opt, "m", group_size);
    overlay.apply(seed_opt, "seed", seed);
    overlay.apply(out_opt, "out", out);
    overlay.apply(format_opt, "format", format);
    const char delim = table_delimiter(format);
    const auto dir = cli::ensure_out_dir(out);

    data::GeneratorSpec spec;
    spec.family = data::generator_from_name(family);
    spec.dims = dims;
    spec.shift = shift;
    spec.size = group_size;
    spec.seed = derive_seed(seed, kStreamSource);
    const auto [x, y] = data::generate(spec);

    const std::string x_name = "X" + table_extension(format);
    const std::string y_name = "Y" + table_extension(format);
    data::save_csv(x, (dir / x_name).string(), delim);
    data::save_csv(y, (dir / y_name).string(), delim);

    cli::Manifest manifest;
    manifest.command = "gen";
    manifest.master_seed = seed;
    manifest.source["type"] = "generator";
    manifest.source["family"] = family;
    manifest.source["shift"] = shift;
    manifest.source["dims"] = dims;
    manifest.source["rows_per_group"] = group_size;
    manifest.outputs = {x_name, y_name};
    manifest.config["family"] = family;
    manifest.config["d"] = shift;
    manifest.config["dims"] = dims;
    manifest.config["m"] = group_size;
    manifest.config["seed"] = seed;
    manifest.config["format"] = format;
    manifest.write((dir / "manifest.json").string());

    std::printf("wrote %s and %s (%ld rows x %d dims each)\n",
                (dir / x_name).c_str(), (dir / y_name).c_str(), group_size, dims);
    return 0;
  }
};

// ---------------------------------------------------------------------------
// report
// ---------------------------------------------------------------------------

struct ReportCommand {
  std::vector<std::string> tables;
  std::string out;
  std::string metric = "power";
  std::string title;
  std::string config_path;
  CLI::Option* tables_opt = nullptr;
  CLI::Option* out_opt = nullptr;
  CLI::Option* metric_opt = nullptr;
  CLI::Option* title_opt = nullptr;

  void register_options(CLI::App* cmd) {
    tables_opt = cmd->add_option("tables", tables, "Curve tables to plot");
    out_opt = cmd->add_option("--out", out, "Output SVG file");
    metric_opt = cmd->add_option("--metric", metric, "Column to plot")
                     ->check(CLI::IsMember({"power", "tnr"}))
                     ->capture_default_str();
    title_opt = cmd->add_option("--title", title, "Chart title");
    cmd->add_option("--config", config_path,
                    "JSON config or manifest supplying defaults");
  }

  int run() {
    cli::ConfigOverlay overlay;
    if (!config_path.empty()) overlay.load(config_path, "report");
    overlay.apply(tables_opt, "tables", tables);
    overlay.apply(out_opt, "out", out);
    overlay.apply(metric_opt, "metric", metric);
    overlay.apply(title_opt, "title", title);

    if (tables.empty()) throw ConfigError("report needs at least one table file");
    if (out.empty()) throw ConfigError("--out is required");

    std::vector<cli::CurveSeries> series;
    cli::Manifest manifest;
    manifest.command = "report";
    for (const auto& path : tables) {
      series.push_back(cli::read_curve_table(path, metric));
      manifest.add_input(path);
    }
    cli::check_recorded_digests(overlay.recorded_inputs(), manifest.inputs);
    const std::string svg = cli::render_svg(
        series, title, metric == "tnr" ? "true negative rate" : "test power");

    const std::filesystem::path out_path(out);
    if (out_path.has_parent_path()) {
      std::filesystem::create_directories(out_path.parent_path());
    }
    write_text(out_path, svg);

    manifest.outputs = {out_path.filename().string()};
    manifest.config["tables"] = tables;
    manifest.config["metric"] = metric;
    manifest.config["title"] = title;
    manifest.write(out + ".manifest.json");
    std::printf("wrote %s (%zu series)\n", out.c_str(), series.size());
    return 0;
  }
};

int run_guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error (config): %s\n", e.what());
    return 2;
  } catch (const DataError& e) {
    std::fprintf(stderr, "error (data): %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kernel two-sample testing with fused classical and quantum "
               "kernel pools"};
  app.set_version_flag("--version", std::string(cli::kToolName) + " " +
                                        cli::kToolVersion);
  app.require_subcommand(1);

  TestCommand test_cmd;
  PowerCommand power_cmd;
  SweepCommand sweep_cmd;
  GenCommand gen_cmd;
  ReportCommand report_cmd;

  auto* test_app = app.add_subcommand("test", "Run a single two-sample test");
  test_cmd.register_options(test_app);
  auto* power_app =
      app.add_subcommand("power", "Estimate power and true-negative curves");
  power_cmd.register_options(power_app);
  auto* sweep_app =
      app.add_subcommand("sweep", "Sweep the hybrid weight p or lambda");
  sweep_cmd.register_options(sweep_app);
  auto* gen_app = app.add_subcommand("gen", "Write synthetic two-group datasets");
  gen_cmd.register_options(gen_app);
  auto* report_app =
      app.add_subcommand("report", "Render curve tables as an SVG chart");
  report_cmd.register_options(report_app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (*test_app) return run_guarded([&] { return test_cmd.run(); });
  if (*power_app) return run_guarded([&] { return power_cmd.run(); });
  if (*sweep_app) return run_guarded([&] { return sweep_cmd.run(); });
  if (*gen_app) return run_guarded([&] { return gen_cmd.run(); });
  if (*report_app) return run_guarded([&] { return report_cmd.run(); });
  return 2;
}
