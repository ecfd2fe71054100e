#pragma once

// Option structs, config/manifest plumbing, and small formatting utilities
// for the mmdfuse command-line tool.

#include <CLI11.hpp>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <openssl/evp.h>
#include <optional>
#include <string>
#include <vector>

#include "mmdfuse/data.hpp"
#include "mmdfuse/errors.hpp"
#include "mmdfuse/experiments.hpp"
#include "mmdfuse/parallel.hpp"
#include "mmdfuse/rng.hpp"

namespace cli {

inline constexpr const char* kToolName = "mmdfuse";
inline constexpr const char* kToolVersion = "0.1.0";

using json = nlohmann::ordered_json;

inline std::string format_g17(double value) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

inline std::string iso_timestamp() {
  const std::time_t now =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm_utc{};
  gmtime_r(&now, &tm_utc);
  char buffer[32];
  std::strftime(buffer, sizeof(buffer), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buffer;
}

inline std::string sha256_file(const std::string& path) {
  std::ifstream input(path, std::ios::binary);
  if (!input) throw mmdfuse::DataError("cannot open '" + path + "' for digest");
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  char buffer[65536];
  while (input.good()) {
    input.read(buffer, sizeof(buffer));
    EVP_DigestUpdate(ctx, buffer, static_cast<std::size_t>(input.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  EVP_DigestFinal_ex(ctx, digest, &length);
  EVP_MD_CTX_free(ctx);
  static const char* hex = "0123456789abcdef";
  std::string out = "sha256:";
  for (unsigned int i = 0; i < length; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xf]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Declarative config files and manifests.
//
// A config file is a flat JSON object keyed by long flag names. A manifest is
// the reproducibility record written next to every output; its "config"
// member is itself a valid config, so a run can be repeated with
// `--config <manifest.json>`. Precedence: command-line flags override config
// values, which override built-in defaults.
// ---------------------------------------------------------------------------

class ConfigOverlay {
 public:
  ConfigOverlay() = default;

  void load(const std::string& path, const std::string& command) {
    std::ifstream input(path);
    if (!input) throw mmdfuse::ConfigError("cannot open config '" + path + "'");
    json parsed;
    try {
      parsed = json::parse(input);
    } catch (const json::parse_error& e) {
      throw mmdfuse::ConfigError("config '" + path + "' is not valid JSON: " +
                                 std::string(e.what()));
    }
    if (parsed.contains("config")) {
      // Manifest form: check it was produced by the same subcommand.
      if (parsed.contains("command") &&
          parsed["command"].get<std::string>() != command) {
        throw mmdfuse::ConfigError(
            "config '" + path + "' was recorded for command '" +
            parsed["command"].get<std::string>() + "', not '" + command + "'");
      }
      values_ = parsed["config"];
      if (parsed.contains("inputs")) recorded_inputs_ = parsed["inputs"];
    } else {
      values_ = parsed;
    }
    if (!values_.is_object()) {
      throw mmdfuse::ConfigError("config '" + path + "' must be a JSON object");
    }
  }

  // Assigns the config value to `target` unless the flag was given on the
  // command line.
  template <typename T>
  void apply(const CLI::Option* option, const std::string& key, T& target) const {
    if (option != nullptr && option->count() > 0) return;
    if (!values_.contains(key)) return;
    try {
      target = values_.at(key).get<T>();
    } catch (const json::exception&) {
      throw mmdfuse::ConfigError("config key '" + key + "' has the wrong type");
    }
  }

  bool has(const std::string& key) const { return values_.contains(key); }

  const json& recorded_inputs() const { return recorded_inputs_; }

 private:
  json values_ = json::object();
  json recorded_inputs_ = json::object();
};

struct Manifest {
  std::string command;
  std::uint64_t master_seed = 0;
  json config = json::object();
  json inputs = json::object();
  json source = json::object();
  std::vector<std::string> outputs;

  void add_input(const std::string& path) { inputs[path] = sha256_file(path); }

  json to_json() const {
    json out;
    out["tool"] = kToolName;
    out["version"] = kToolVersion;
    out["command"] = command;
    out["created"] = iso_timestamp();
    out["master_seed"] = master_seed;
    out["inputs"] = inputs;
    out["source"] = source;
    out["outputs"] = outputs;
    out["config"] = config;
    return out;
  }

  void write(const std::string& path) const {
    std::ofstream output(path);
    if (!output) throw mmdfuse::DataError("cannot write '" + path + "'");
    output << to_json().dump(2) << "\n";
  }
};

// Warn (without failing) when a rerun's inputs differ from the recorded
// digests; byte-identical outputs are only guaranteed for identical inputs.
inline void check_recorded_digests(const json& recorded, const json& current) {
  for (const auto& [path, digest] : recorded.items()) {
    if (current.contains(path) && current[path] != digest) {
      std::fprintf(stderr, "warning: input '%s' differs from the manifest digest\n",
                   path.c_str());
    }
  }
}

// ---------------------------------------------------------------------------
// Option groups shared by the test/power/sweep commands.
// ---------------------------------------------------------------------------

struct SourceOptions {
  std::string generator;  // empty, "gaussian", or "lognormal"
  double shift = 0.5;
  int dims = 2;
  long group_size = 500;
  std::string x_path;
  std::string y_path;
  std::string data_path;
  std::vector<std::string> features;
  std::string label_column;
  std::string positive_label;
  std::string delimiter = ",";
  bool standardize_value = false;

  CLI::Option* generator_opt = nullptr;
  CLI::Option* shift_opt = nullptr;
  CLI::Option* dims_opt = nullptr;
  CLI::Option* size_opt = nullptr;
  CLI::Option* x_opt = nullptr;
  CLI::Option* y_opt = nullptr;
  CLI::Option* data_opt = nullptr;
  CLI::Option* features_opt = nullptr;
  CLI::Option* label_opt = nullptr;
  CLI::Option* positive_opt = nullptr;
  CLI::Option* delimiter_opt = nullptr;
  CLI::Option* standardize_opt = nullptr;

  void register_options(CLI::App* cmd) {
    generator_opt = cmd->add_option("--gen", generator,
                                    "Generator family (gaussian or lognormal)")
                        ->check(CLI::IsMember({"gaussian", "lognormal"}));
    shift_opt = cmd->add_option("--d", shift, "Generator mean shift d")
                    ->capture_default_str();
    dims_opt = cmd->add_option("--dims", dims, "Generator dimensions D")
                   ->capture_default_str();
    size_opt = cmd->add_option("--m", group_size, "Generator rows per group")
                   ->capture_default_str();
    x_opt = cmd->add_option("--x", x_path, "First-group CSV file");
    y_opt = cmd->add_option("--y", y_path, "Second-group CSV file");
    data_opt = cmd->add_option("--data", data_path, "Labeled CSV file");
    features_opt = cmd->add_option("--features", features,
                                   "Feature columns (names, or 0-based indices "
                                   "for headerless files); default: all except "
                                   "the label")
                       ->delimiter(',');
    label_opt = cmd->add_option("--label", label_column, "Label column name");
    positive_opt = cmd->add_option("--positive-label", positive_label,
                                   "Label value of the second group");
    delimiter_opt = cmd->add_option("--delimiter", delimiter,
                                    "Input field delimiter")
                        ->capture_default_str();
    standardize_opt = cmd->add_flag("--standardize,!--no-standardize",
                                    standardize_value,
                                    "Standardize features before testing "
                                    "(default: on for file sources, off for "
                                    "generators)");
  }

  void apply_config(const ConfigOverlay& overlay) {
    overlay.apply(generator_opt, "gen", generator);
    overlay.apply(shift_opt, "d", shift);
    overlay.apply(dims_opt, "dims", dims);
    overlay.apply(size_opt, "m", group_size);
    overlay.apply(x_opt, "x", x_path);
    overlay.apply(y_opt, "y", y_path);
    overlay.apply(data_opt, "data", data_path);
    overlay.apply(features_opt, "features", features);
    overlay.apply(label_opt, "label", label_column);
    overlay.apply(positive_opt, "positive-label", positive_label);
    overlay.apply(delimiter_opt, "delimiter", delimiter);
    if (standardize_opt->count() == 0 && overlay.has("standardize")) {
      overlay.apply(nullptr, "standardize", standardize_value);
      standardize_given_in_config = true;
    }
  }

  bool standardize_requested() const {
    return standardize_opt->count() > 0 || standardize_given_in_config;
  }

  json to_config() const {
    json out;
    out["gen"] = generator;
    out["d"] = shift;
    out["dims"] = dims;
    out["m"] = group_size;
    out["x"] = x_path;
    out["y"] = y_path;
    out["data"] = data_path;
    out["features"] = features;
    out["label"] = label_column;
    out["positive-label"] = positive_label;
    out["delimiter"] = delimiter;
    out["standardize"] = resolved_standardize();
    return out;
  }

  // File sources standardize by default (clinical features carry wildly
  // different units); generators are used raw.
  bool resolved_standardize() const {
    if (standardize_requested()) return standardize_value;
    return generator.empty();
  }

  bool standardize_given_in_config = false;
};

struct ResolvedSource {
  mmdfuse::data::Dataset x;
  mmdfuse::data::Dataset y;
  json inputs = json::object();
  json description = json::object();
};

inline ResolvedSource resolve_source(const SourceOptions& options,
                                     std::uint64_t master_seed) {
  using namespace mmdfuse;
  ResolvedSource resolved;
  if (options.delimiter.size() != 1) {
    throw ConfigError("--delimiter must be a single character");
  }
  const char delim = options.delimiter[0];

  const bool standardize = options.resolved_standardize();

  if (!options.generator.empty()) {
    data::GeneratorSpec spec;
    spec.family = data::generator_from_name(options.generator);
    spec.dims = options.dims;
    spec.shift = options.shift;
    spec.size = options.group_size;
    spec.seed = derive_seed(master_seed, kStreamSource);
    std::tie(resolved.x, resolved.y) = data::generate(spec);
    resolved.description["type"] = "generator";
    resolved.description["family"] = options.generator;
    resolved.description["shift"] = options.shift;
  } else if (!options.data_path.empty()) {
    if (options.label_column.empty() || options.positive_label.empty()) {
      throw ConfigError("--data requires --label and --positive-label");
    }
    data::Dataset full = data::load_csv(options.data_path, options.features,
                                        options.label_column, delim);
    resolved.inputs[options.data_path] = sha256_file(options.data_path);
    if (standardize) full = data::standardize(full).dataset;
    std::tie(resolved.x, resolved.y) =
        data::split_by_label(full, options.positive_label);
    resolved.description["type"] = "dataset";
    resolved.description["path"] = options.data_path;
  } else if (!options.x_path.empty() && !options.y_path.empty()) {
    data::Dataset x = data::load_csv(options.x_path, options.features, {}, delim);
    data::Dataset y = data::load_csv(options.y_path, options.features, {}, delim);
    resolved.inputs[options.x_path] = sha256_file(options.x_path);
    resolved.inputs[options.y_path] = sha256_file(options.y_path);
    if (x.dims() != y.dims()) {
      throw DataError("--x and --y files have different feature dimensions");
    }
    if (standardize) {
      // One joint transform for both groups; per-group scaling would distort
      // the two-sample comparison.
      FeatureMatrix pooled(x.rows() + y.rows(), x.dims());
      pooled.topRows(x.rows()) = x.features;
      pooled.bottomRows(y.rows()) = y.features;
      data::Dataset joint;
      joint.features = pooled;
      joint.name = "pooled";
      const auto result = data::standardize(joint);
      x.features = result.dataset.features.topRows(x.rows());
      y.features = result.dataset.features.bottomRows(y.rows());
    }
    resolved.x = std::move(x);
    resolved.y = std::move(y);
    resolved.description["type"] = "dataset-pair";
  } else {
    throw ConfigError("no data source: give --gen, --data, or --x and --y");
  }

  resolved.x.validate();
  resolved.y.validate();
  resolved.description["n_x"] = resolved.x.rows();
  resolved.description["n_y"] = resolved.y.rows();
  resolved.description["dims"] = resolved.x.dims();
  resolved.description["standardized"] = standardize;
  return resolved;
}

struct PoolOptions {
  std::string pool = "hybrid";
  std::vector<std::string> families = {"gaussian", "laplace"};
  int bandwidths = 10;
  std::vector<double> bandwidth_quantiles = {0.05, 0.95};
  std::string scalings = "0.001:1:5";
  std::string quantum_family = "product";
  int depth = 1;
  double hybrid_p = -1.0;  // < 0: resolved by PoolSpec

  CLI::Option* pool_opt = nullptr;
  CLI::Option* families_opt = nullptr;
  CLI::Option* bandwidths_opt = nullptr;
  CLI::Option* quantiles_opt = nullptr;
  CLI::Option* scalings_opt = nullptr;
  CLI::Option* quantum_family_opt = nullptr;
  CLI::Option* depth_opt = nullptr;
  CLI::Option* hybrid_p_opt = nullptr;

  void register_options(CLI::App* cmd) {
    pool_opt = cmd->add_option("--pool", pool,
                               "Kernel pool kind (classical, quantum, hybrid)")
                   ->check(CLI::IsMember({"classical", "quantum", "hybrid"}))
                   ->capture_default_str();
    families_opt = cmd->add_option("--families", families,
                                   "Classical families (gaussian, laplace)")
                       ->delimiter(',')
                       ->capture_default_str();
    bandwidths_opt = cmd->add_option("--bandwidths", bandwidths,
                                     "Bandwidth count per classical family")
                         ->capture_default_str();
    quantiles_opt = cmd->add_option("--bandwidth-quantiles", bandwidth_quantiles,
                                    "Distance quantiles lo,hi for the "
                                    "bandwidth grid")
                        ->delimiter(',')
                        ->expected(2)
                        ->capture_default_str();
    scalings_opt = cmd->add_option("--scalings", scalings,
                                   "Quantum scalings: lo:hi:count grid or "
                                   "explicit comma list")
                       ->capture_default_str();
    quantum_family_opt = cmd->add_option("--quantum-family", quantum_family,
                                         "Quantum feature map (product or "
                                         "entangled)")
                             ->check(CLI::IsMember({"product", "entangled"}))
                             ->capture_default_str();
    depth_opt = cmd->add_option("--depth", depth,
                                "Entangling layers for the entangled map")
                    ->capture_default_str();
    hybrid_p_opt = cmd->add_option("--hybrid-p", hybrid_p,
                                   "Prior mass on the quantum subset (0..1; "
                                   "default 0.5 for hybrid pools)");
  }

  void apply_config(const ConfigOverlay& overlay) {
    overlay.apply(pool_opt, "pool", pool);
    overlay.apply(families_opt, "families", families);
    overlay.apply(bandwidths_opt, "bandwidths", bandwidths);
    overlay.apply(quantiles_opt, "bandwidth-quantiles", bandwidth_quantiles);
    overlay.apply(scalings_opt, "scalings", scalings);
    overlay.apply(quantum_family_opt, "quantum-family", quantum_family);
    overlay.apply(depth_opt, "depth", depth);
    overlay.apply(hybrid_p_opt, "hybrid-p", hybrid_p);
  }

  json to_config() const {
    json out;
    out["pool"] = pool;
    out["families"] = families;
    out["bandwidths"] = bandwidths;
    out["bandwidth-quantiles"] = bandwidth_quantiles;
    out["scalings"] = scalings;
    out["quantum-family"] = quantum_family;
    out["depth"] = depth;
    out["hybrid-p"] = hybrid_p;
    return out;
  }

  mmdfuse::experiments::PoolSpec resolve() const {
    using namespace mmdfuse;
    experiments::PoolSpec spec;

    if (pool == "quantum") {
      spec.classical.reset();
    } else {
      experiments::ClassicalPoolSpec classical;
      classical.families.clear();
      for (const auto& name : families) {
        classical.families.push_back(kernels::family_from_name(name));
      }
      classical.bandwidth_count = bandwidths;
      if (bandwidth_quantiles.size() != 2) {
        throw ConfigError("--bandwidth-quantiles needs exactly lo,hi");
      }
      classical.quantile_lo = bandwidth_quantiles[0];
      classical.quantile_hi = bandwidth_quantiles[1];
      spec.classical = classical;
    }

    if (pool == "classical") {
      spec.quantum.reset();
    } else {
      experiments::QuantumPoolSpec quantum;
      quantum.family = quantum_family == "entangled"
                           ? kernels::KernelFamily::quantum_entangled
                           : kernels::KernelFamily::quantum_product;
      quantum.depth = depth;
      parse_scalings(scalings, quantum);
      spec.quantum = quantum;
    }

    if (hybrid_p >= 0.0) spec.hybrid_p = hybrid_p;
    spec.validate();
    return spec;
  }

  static void parse_scalings(const std::string& text,
                             mmdfuse::experiments::QuantumPoolSpec& quantum) {
    using namespace mmdfuse;
    if (text.find(':') != std::string::npos) {
      double lo = 0.0;
      double hi = 0.0;
      int count = 0;
      char trailing = 0;
      if (std::sscanf(text.c_str(), "%lf:%lf:%d%c", &lo, &hi, &count, &trailing) != 3) {
        throw ConfigError("--scalings grid must be lo:hi:count, got '" + text + "'");
      }
      quantum.scaling_lo = lo;
      quantum.scaling_hi = hi;
      quantum.scaling_count = count;
      quantum.explicit_scalings.clear();
      return;
    }
    quantum.explicit_scalings.clear();
    std::size_t begin = 0;
    while (begin <= text.size()) {
      const std::size_t end = text.find(',', begin);
      const std::string token =
          text.substr(begin, end == std::string::npos ? std::string::npos : end - begin);
      if (token.empty()) throw ConfigError("--scalings has an empty entry");
      try {
        quantum.explicit_scalings.push_back(std::stod(token));
      } catch (const std::exception&) {
        throw ConfigError("--scalings entry '" + token + "' is not a number");
      }
      if (end == std::string::npos) break;
      begin = end + 1;
    }
  }
};

struct TestParamOptions {
  double alpha = 0.05;
  int permutations = 2000;
  double lambda = 1.0;
  std::string fuse_form = "logsumexp";
  std::uint64_t seed = 0;
  int workers = 0;  // 0: MMDFUSE_WORKERS env var, else hardware parallelism

  CLI::Option* alpha_opt = nullptr;
  CLI::Option* permutations_opt = nullptr;
  CLI::Option* lambda_opt = nullptr;
  CLI::Option* form_opt = nullptr;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* workers_opt = nullptr;

  void register_options(CLI::App* cmd) {
    alpha_opt = cmd->add_option("--alpha", alpha, "Significance level")
                    ->capture_default_str();
    permutations_opt =
        cmd->add_option("--permutations", permutations, "Random permutations B")
            ->capture_default_str();
    lambda_opt = cmd->add_option("--lambda", lambda, "Soft-max temperature")
                     ->capture_default_str();
    form_opt = cmd->add_option("--fuse-form", fuse_form,
                               "Aggregation form (logsumexp, or logmean for "
                               "the literal averaged form)")
                   ->check(CLI::IsMember({"logsumexp", "logmean"}))
                   ->capture_default_str();
    seed_opt = cmd->add_option("--seed", seed, "Master seed")->capture_default_str();
    workers_opt = cmd->add_option("--workers", workers,
                                  "Worker threads (0: MMDFUSE_WORKERS or all "
                                  "cores)")
                      ->capture_default_str();
  }

  void apply_config(const ConfigOverlay& overlay) {
    overlay.apply(alpha_opt, "alpha", alpha);
    overlay.apply(permutations_opt, "permutations", permutations);
    overlay.apply(lambda_opt, "lambda", lambda);
    overlay.apply(form_opt, "fuse-form", fuse_form);
    overlay.apply(seed_opt, "seed", seed);
    overlay.apply(workers_opt, "workers", workers);
  }

  json to_config() const {
    json out;
    out["alpha"] = alpha;
    out["permutations"] = permutations;
    out["lambda"] = lambda;
    out["fuse-form"] = fuse_form;
    out["seed"] = seed;
    out["workers"] = workers;
    return out;
  }

  mmdfuse::statistics::FuseForm resolved_form() const {
    return fuse_form == "logmean" ? mmdfuse::statistics::FuseForm::log_of_mean
                                  : mmdfuse::statistics::FuseForm::log_sum_exp;
  }

  int resolved_workers() const {
    if (workers > 0) return workers;
    if (const char* env = std::getenv("MMDFUSE_WORKERS")) {
      const int parsed = std::atoi(env);
      if (parsed > 0) return parsed;
    }
    return mmdfuse::hardware_workers();
  }
};

inline std::filesystem::path ensure_out_dir(const std::string& out) {
  if (out.empty()) throw mmdfuse::ConfigError("--out is required");
  std::filesystem::path dir(out);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw mmdfuse::DataError("cannot create output directory '" + out + "'");
  return dir;
}

}  // namespace cli
