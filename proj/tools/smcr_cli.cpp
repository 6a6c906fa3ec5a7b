// smcr command-line driver: gen-data, pretrain, adapt, eval.
// Exit codes: 0 success, 1 runtime failure, 2 config error.

#include <CLI11.hpp>

#include <charconv>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include "smcr/smcr.h"

namespace fs = std::filesystem;

namespace {

constexpr int kRuntimeFailure = 1;
constexpr int kConfigError = 2;

struct Failure {
  int code;
  std::string message;
};

void check(smcr_status status, const std::string& what) {
  if (status == SMCR_OK) return;
  throw Failure{status == SMCR_ERR_CONFIG ? kConfigError : kRuntimeFailure, what + ": " + smcr_last_error()};
}

template <typename T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
using Config = std::unique_ptr<smcr_config, Deleter<smcr_config, smcr_config_free>>;
using Dataset = std::unique_ptr<smcr_dataset, Deleter<smcr_dataset, smcr_dataset_free>>;
using Encoder = std::unique_ptr<smcr_encoder, Deleter<smcr_encoder, smcr_encoder_free>>;
using Model = std::unique_ptr<smcr_model, Deleter<smcr_model, smcr_model_free>>;
using Metrics = std::unique_ptr<smcr_metrics, Deleter<smcr_metrics, smcr_metrics_free>>;

std::string get(const Config& config, const std::string& key) {
  char buffer[4096];
  check(smcr_config_get(config.get(), key.c_str(), buffer, sizeof buffer), "config key '" + key + "'");
  return buffer;
}

std::string text(double v) {
  char buffer[32];
  const auto r = std::to_chars(buffer, buffer + sizeof buffer, v);
  return std::string(buffer, r.ptr);
}

void set(const Config& config, const std::string& key, const std::string& value) {
  check(smcr_config_set(config.get(), key.c_str(), value.c_str()), "option for '" + key + "'");
}

// Flags shared by the training and evaluation commands.
struct Common {
  std::string config_path;
  std::optional<std::string> out;
  std::optional<long long> seed;
  std::optional<int> threads;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "experiment config (key=value)")->required();
    cmd->add_option("--out", out, "output directory (overrides out_dir)");
    cmd->add_option("--seed", seed, "experiment seed");
    cmd->add_option("--threads", threads, "worker thread cap")->check(CLI::PositiveNumber);
  }

  Config load() const {
    smcr_config* raw = nullptr;
    check(smcr_config_load(config_path.c_str(), &raw), "loading config");
    Config config(raw);
    if (out) set(config, "out_dir", *out);
    if (seed) set(config, "seed", std::to_string(*seed));
    if (threads) set(config, "threads", std::to_string(*threads));
    return config;
  }
};

// Every dataset directory the config names must exist before any work starts.
void require_datasets(const Config& config, std::initializer_list<const char*> needed) {
  for (const char* key : {"synthetic_dir", "source_dir", "target_dir"}) {
    const std::string dir = get(config, key);
    if (dir.empty()) continue;
    if (!fs::exists(fs::path(dir) / "meta.txt"))
      throw Failure{kRuntimeFailure, "missing artifact: " + (fs::path(dir) / "meta.txt").string() + " (" + key + ")"};
  }
  for (const char* key : needed)
    if (get(config, key).empty()) throw Failure{kConfigError, std::string("config does not set ") + key};
}

Dataset load_dataset(const Config& config, const char* key) {
  smcr_dataset* raw = nullptr;
  check(smcr_dataset_load(get(config, key).c_str(), &raw), std::string("loading ") + key);
  return Dataset(raw);
}

Encoder load_encoder(const fs::path& path) {
  if (!fs::exists(path)) throw Failure{kRuntimeFailure, "missing artifact: " + path.string()};
  smcr_encoder* raw = nullptr;
  check(smcr_encoder_load(path.string().c_str(), &raw), "loading encoder");
  return Encoder(raw);
}

fs::path out_dir(const Config& config) {
  fs::path dir = get(config, "out_dir");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Failure{kRuntimeFailure, "cannot create output directory " + dir.string()};
  return dir;
}

void print_metrics(const Metrics& metrics) {
  for (size_t i = 0; i < smcr_metrics_count(metrics.get()); ++i) {
    const char* key = smcr_metrics_key(metrics.get(), i);
    double value = 0.0;
    check(smcr_metrics_get(metrics.get(), key, &value), "metric");
    std::cout << key << '=' << value << '\n';
  }
}

int gen_data(const std::string& spec, const std::string& out, std::optional<long long> seed) {
  if (seed && *seed < 0) throw Failure{kConfigError, "--seed must be non-negative"};
  check(smcr_generate_data(spec.c_str(), out.c_str(), seed ? *seed : -1), "generating data");
  std::cout << "wrote " << (fs::path(out) / "synthetic").string() << ", " << (fs::path(out) / "source").string()
            << ", " << (fs::path(out) / "target").string() << '\n';
  return 0;
}

int pretrain(const Common& common, bool source_only) {
  const Config config = common.load();
  if (source_only)
    require_datasets(config, {"source_dir"});
  else
    require_datasets(config, {"synthetic_dir", "source_dir"});
  const fs::path dir = out_dir(config);
  const Dataset source = load_dataset(config, "source_dir");
  smcr_encoder* raw = nullptr;
  fs::path file;
  if (source_only) {
    check(smcr_source_only(config.get(), source.get(), &raw), "source-only training");
    file = dir / "source_only_encoder.txt";
  } else {
    const Dataset synthetic = load_dataset(config, "synthetic_dir");
    check(smcr_pretrain(config.get(), synthetic.get(), source.get(), &raw), "pretraining");
    file = dir / "pretrained_encoder.txt";
  }
  const Encoder encoder(raw);
  check(smcr_encoder_save(encoder.get(), file.string().c_str()), "saving encoder");
  std::cout << "wrote " << file.string() << '\n';
  return 0;
}

struct AdaptFlags {
  std::optional<std::string> mode;
  bool no_criteria = false;
  bool no_pretrain = false;
  std::optional<std::string> pretrained;
  std::optional<double> alpha, beta, lambda, tau;
};

int adapt(const Common& common, const AdaptFlags& flags) {
  const Config config = common.load();
  if (flags.mode) set(config, "mode", *flags.mode);
  if (flags.no_criteria) set(config, "criteria_enabled", "false");
  if (flags.no_pretrain) set(config, "use_pretraining", "false");
  if (flags.alpha) set(config, "alpha", text(*flags.alpha));
  if (flags.beta) set(config, "beta", text(*flags.beta));
  if (flags.lambda) set(config, "lambda", text(*flags.lambda));
  if (flags.tau) set(config, "tau", text(*flags.tau));
  require_datasets(config, {"source_dir", "target_dir"});
  const fs::path dir = out_dir(config);
  const Dataset source = load_dataset(config, "source_dir");
  const Dataset target = load_dataset(config, "target_dir");

  Encoder start;
  if (get(config, "use_pretraining") == "true") {
    start = load_encoder(flags.pretrained ? fs::path(*flags.pretrained) : dir / "pretrained_encoder.txt");
  } else {
    smcr_encoder* raw = nullptr;
    check(smcr_initial_encoder(config.get(), smcr_dataset_dim(source.get()), &raw), "initial encoder");
    start.reset(raw);
  }
  smcr_model* raw = nullptr;
  check(smcr_adapt(config.get(), start.get(), source.get(), target.get(), &raw), "adaptation");
  const Model model(raw);
  check(smcr_model_save(model.get(), dir.string().c_str()), "saving model");
  std::cout << "wrote " << (dir / "branch_dthr.txt").string() << ", " << (dir / "branch_rihr.txt").string() << ", "
            << (dir / "run_report.csv").string() << '\n';
  return 0;
}

int eval(const Common& common, std::optional<double> alpha, const std::optional<std::string>& encoder_file) {
  const Config config = common.load();
  require_datasets(config, {"target_dir"});
  const fs::path dir = out_dir(config);
  const Dataset target = load_dataset(config, "target_dir");
  smcr_metrics* raw = nullptr;
  if (encoder_file) {
    const Encoder encoder = load_encoder(*encoder_file);
    check(smcr_evaluate_encoder(encoder.get(), target.get(), "encoder", &raw), "evaluation");
  } else {
    for (const char* name : {"branch_dthr.txt", "branch_rihr.txt"})
      if (!fs::exists(dir / name)) throw Failure{kRuntimeFailure, "missing artifact: " + (dir / name).string()};
    smcr_model* m = nullptr;
    check(smcr_model_load(dir.string().c_str(), &m), "loading model");
    const Model model(m);
    const double a = alpha ? *alpha : std::stod(get(config, "alpha"));
    if (!(a >= 0.0 && a <= 1.0)) throw Failure{kConfigError, "--alpha must lie in [0, 1]"};
    check(smcr_evaluate(model.get(), target.get(), a, &raw), "evaluation");
    check(smcr_write_per_query(model.get(), target.get(), a, (dir / "per_query.csv").string().c_str()),
          "writing per-query results");
  }
  const Metrics metrics(raw);
  check(smcr_metrics_save(metrics.get(), (dir / "metrics.txt").string().c_str()), "saving metrics");
  print_metrics(metrics);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"smcr: domain-adaptive embedding learning on key=value configs"};
  app.require_subcommand(1);

  std::string spec, data_out = "data";
  std::optional<long long> data_seed;
  auto* gen = app.add_subcommand("gen-data", "generate synthetic/source/target datasets from a spec file");
  gen->add_option("--config", spec, "domain spec file")->required();
  gen->add_option("--out", data_out, "output directory")->capture_default_str();
  gen->add_option("--seed", data_seed, "reseed the sample draws");

  Common pre_common;
  bool source_only = false;
  auto* pre = app.add_subcommand("pretrain", "train the initial encoder");
  pre_common.attach(pre);
  pre->add_flag("--source-only", source_only, "supervised baseline on the source domain only");

  Common adapt_common;
  AdaptFlags flags;
  auto* ada = app.add_subcommand("adapt", "train both branches on source + unlabeled target");
  adapt_common.attach(ada);
  ada->add_option("--mode", flags.mode, "ind or col")->check(CLI::IsMember({"ind", "col"}));
  ada->add_flag("--no-criteria", flags.no_criteria, "keep every cluster (no reliability filter)");
  ada->add_flag("--no-pretrain", flags.no_pretrain, "start from the random initial encoder");
  ada->add_option("--pretrained", flags.pretrained, "encoder file (default <out>/pretrained_encoder.txt)");
  ada->add_option("--alpha", flags.alpha);
  ada->add_option("--beta", flags.beta);
  ada->add_option("--lambda", flags.lambda);
  ada->add_option("--tau", flags.tau);

  Common eval_common;
  std::optional<double> eval_alpha;
  std::optional<std::string> encoder_file;
  auto* ev = app.add_subcommand("eval", "retrieval metrics on the target domain");
  eval_common.attach(ev);
  ev->add_option("--alpha", eval_alpha, "fusion weight");
  ev->add_option("--encoder", encoder_file, "evaluate a single encoder file instead of the adapted model");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigError;
  }

  try {
    if (*gen) return gen_data(spec, data_out, data_seed);
    if (*pre) return pretrain(pre_common, source_only);
    if (*ada) return adapt(adapt_common, flags);
    if (*ev) return eval(eval_common, eval_alpha, encoder_file);
  } catch (const Failure& f) {
    std::cerr << "smcr: " << f.message << '\n';
    return f.code;
  } catch (const std::exception& e) {
    std::cerr << "smcr: " << e.what() << '\n';
    return kRuntimeFailure;
  }
  return kRuntimeFailure;
}
