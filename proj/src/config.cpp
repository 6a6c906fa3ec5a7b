#include "smcr/config.hpp"

#include <functional>
#include <map>

#include "smcr/error.hpp"

namespace smcr {

namespace {

class ScopedKeys {
 public:
  ScopedKeys(const KeyValues& kv, std::string prefix) : kv_(kv), prefix_(std::move(prefix)) {}

  std::optional<std::string> get(const std::string& key) const {
    if (auto v = kv_.get(prefix_ + "." + key)) return v;
    return kv_.get(key);
  }
  std::string require(const std::string& key) const {
    if (auto v = get(key)) return *v;
    fail(ErrorKind::Config, "missing key '" + key + "' (or '" + prefix_ + "." + key + "')");
  }
  std::string context(const std::string& key) const { return "key '" + prefix_ + "." + key + "'"; }

 private:
  const KeyValues& kv_;
  std::string prefix_;
};

// Parse failures inside a config surface as Config errors naming the key.
template <typename F>
auto as_config(const std::string& context, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Config) throw;
    fail(ErrorKind::Config, context + ": " + e.what());
  }
}

std::int64_t int_key(const ScopedKeys& keys, const std::string& key, std::optional<std::int64_t> fallback) {
  auto text = fallback ? keys.get(key) : std::optional<std::string>(keys.require(key));
  if (!text) return *fallback;
  return as_config(keys.context(key), [&] { return parse_int(*text, keys.context(key)); });
}

double real_key(const ScopedKeys& keys, const std::string& key, std::optional<double> fallback) {
  auto text = fallback ? keys.get(key) : std::optional<std::string>(keys.require(key));
  if (!text) return *fallback;
  return as_config(keys.context(key), [&] { return parse_double(*text, keys.context(key)); });
}

Vector list_key(const ScopedKeys& keys, const std::string& key, std::size_t dim) {
  auto text = keys.get(key);
  if (!text) return {};
  Vector v = as_config(keys.context(key), [&] { return parse_double_list(*text, keys.context(key)); });
  if (v.size() == 1) v.assign(dim, v[0]);
  if (v.size() != dim) fail(ErrorKind::Config, keys.context(key) + ": expected 1 or " + std::to_string(dim) + " values");
  return v;
}

DomainSpec parse_one(const KeyValues& kv, const std::string& prefix, DomainTag tag) {
  const ScopedKeys keys(kv, prefix);
  DomainSpec s;
  s.domain = tag;
  s.num_identities = static_cast<int>(int_key(keys, "num_identities", std::nullopt));
  s.samples_per_identity = static_cast<int>(int_key(keys, "samples_per_identity", std::nullopt));
  s.num_cameras = static_cast<int>(int_key(keys, "num_cameras", std::nullopt));
  const auto dim = int_key(keys, "input_dim", std::nullopt);
  if (dim < 1) fail(ErrorKind::Config, keys.context("input_dim") + ": must be positive");
  s.input_dim = static_cast<std::size_t>(dim);
  s.identity_spread = real_key(keys, "identity_spread", std::nullopt);
  s.rng_seed = static_cast<std::uint64_t>(int_key(keys, "rng_seed", std::nullopt));
  s.camera_shift_scale = real_key(keys, "camera_shift_scale", 0.0);
  s.identity_dims = static_cast<std::size_t>(int_key(keys, "identity_dims", 0));
  s.nuisance_spread = real_key(keys, "nuisance_spread", 0.0);
  s.centroid_scale = real_key(keys, "centroid_scale", 1.0);
  s.transform.rotation_seed = static_cast<std::uint64_t>(int_key(keys, "rotation_seed", 0));
  s.transform.rotation_strength = real_key(keys, "rotation_strength", 0.0);
  s.transform.scale = list_key(keys, "scale", s.input_dim);
  s.transform.offset = list_key(keys, "offset", s.input_dim);
  as_config("domain '" + prefix + "'", [&] {
    s.validate();
    return 0;
  });
  return s;
}

bool parse_bool(const std::string& text, const std::string& key) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  fail(ErrorKind::Config, "key '" + key + "': expected true or false, got '" + text + "'");
}

}  // namespace

DomainSpecSet parse_domain_specs(const KeyValues& kv) {
  DomainSpecSet set;
  set.synthetic = parse_one(kv, "synthetic", DomainTag::Synthetic);
  set.source = parse_one(kv, "source", DomainTag::Source);
  set.target = parse_one(kv, "target", DomainTag::Target);
  if (set.synthetic.input_dim != set.source.input_dim || set.source.input_dim != set.target.input_dim)
    fail(ErrorKind::Config, "input_dim must agree across domains");
  return set;
}

DomainSpecSet reseed(DomainSpecSet specs, std::uint64_t seed) {
  specs.synthetic.rng_seed = derive_seed(seed, 11);
  specs.source.rng_seed = derive_seed(seed, 12);
  specs.target.rng_seed = derive_seed(seed, 13);
  return specs;
}

void apply_experiment_keys(const KeyValues& kv, const std::filesystem::path& base_dir, ExperimentConfig& config) {
  auto path = [&](const std::string& v) {
    std::filesystem::path p(v);
    return (p.is_relative() ? base_dir / p : p).lexically_normal();
  };
  auto real = [](const std::string& key, const std::string& v) {
    return as_config("key '" + key + "'", [&] { return parse_double(v, "key '" + key + "'"); });
  };
  auto integer = [](const std::string& key, const std::string& v) {
    return as_config("key '" + key + "'", [&] { return parse_int(v, "key '" + key + "'"); });
  };
  TrainConfig& t = config.train;
  using Setter = std::function<void(const std::string&, const std::string&)>;
  const std::map<std::string, Setter> setters{
      {"data_dir",
       [&](auto&, auto& v) {
         config.synthetic_dir = path(v) / "synthetic";
         config.source_dir = path(v) / "source";
         config.target_dir = path(v) / "target";
       }},
      {"synthetic_dir", [&](auto&, auto& v) { config.synthetic_dir = path(v); }},
      {"source_dir", [&](auto&, auto& v) { config.source_dir = path(v); }},
      {"target_dir", [&](auto&, auto& v) { config.target_dir = path(v); }},
      {"out_dir", [&](auto&, auto& v) { config.out_dir = path(v); }},
      {"use_pretraining", [&](auto& k, auto& v) { config.use_pretraining = parse_bool(v, k); }},
      {"epochs", [&](auto& k, auto& v) { t.epochs = static_cast<int>(integer(k, v)); }},
      {"pretrain_epochs", [&](auto& k, auto& v) { t.pretrain_epochs = static_cast<int>(integer(k, v)); }},
      {"batch_p", [&](auto& k, auto& v) { t.batch_p = static_cast<int>(integer(k, v)); }},
      {"batch_k", [&](auto& k, auto& v) { t.batch_k = static_cast<int>(integer(k, v)); }},
      {"base_lr", [&](auto& k, auto& v) { t.base_lr = real(k, v); }},
      {"weight_decay", [&](auto& k, auto& v) { t.weight_decay = real(k, v); }},
      {"lambda", [&](auto& k, auto& v) { t.momentum_lambda = real(k, v); }},
      {"alpha", [&](auto& k, auto& v) { t.alpha = real(k, v); }},
      {"beta", [&](auto& k, auto& v) { t.beta = real(k, v); }},
      {"tau", [&](auto& k, auto& v) { t.tau = real(k, v); }},
      {"prototype_momentum", [&](auto& k, auto& v) { t.prototype_momentum = real(k, v); }},
      {"mode",
       [&](auto& k, auto& v) {
         if (v == "ind")
           t.mode = TrainMode::Independent;
         else if (v == "col")
           t.mode = TrainMode::Collaborative;
         else
           fail(ErrorKind::Config, "key '" + k + "': expected ind or col, got '" + v + "'");
       }},
      {"criteria_enabled", [&](auto& k, auto& v) { t.criteria_enabled = parse_bool(v, k); }},
      {"seed", [&](auto& k, auto& v) { t.seed = static_cast<std::uint64_t>(integer(k, v)); }},
      {"hidden_dims",
       [&](auto& k, auto& v) {
         t.hidden_dims.clear();
         if (trim(v).empty()) return;
         for (double d : as_config("key '" + k + "'", [&] { return parse_double_list(v, "key '" + k + "'"); })) {
           if (!(d >= 1.0) || d != static_cast<double>(static_cast<std::size_t>(d)))
             fail(ErrorKind::Config, "key '" + k + "': dims must be positive integers");
           t.hidden_dims.push_back(static_cast<std::size_t>(d));
         }
       }},
      {"output_dim",
       [&](auto& k, auto& v) {
         const auto d = integer(k, v);
         if (d < 1) fail(ErrorKind::Config, "key '" + k + "': must be positive");
         t.output_dim = static_cast<std::size_t>(d);
       }},
      {"eps", [&](auto& k, auto& v) { t.clustering.eps = real(k, v); }},
      {"eps_scale", [&](auto& k, auto& v) { t.clustering.eps_scale = real(k, v); }},
      {"min_pts", [&](auto& k, auto& v) { t.clustering.min_pts = static_cast<int>(integer(k, v)); }},
      {"shrink_factor", [&](auto& k, auto& v) { t.clustering.shrink_factor = real(k, v); }},
      {"enlarge_factor", [&](auto& k, auto& v) { t.clustering.enlarge_factor = real(k, v); }},
      {"shrink_quantile", [&](auto& k, auto& v) { t.clustering.shrink_quantile = real(k, v); }},
      {"translator_noise", [&](auto& k, auto& v) { t.translator_noise = real(k, v); }},
      {"collaborative_form",
       [&](auto& k, auto& v) {
         if (v == "bce")
           t.collaborative_form = CollaborativeForm::BinaryCrossEntropy;
         else if (v == "verbatim")
           t.collaborative_form = CollaborativeForm::Verbatim;
         else
           fail(ErrorKind::Config, "key '" + k + "': expected bce or verbatim, got '" + v + "'");
       }},
      {"threads", [&](auto& k, auto& v) { t.threads = static_cast<int>(integer(k, v)); }},
  };
  for (const auto& [key, value] : kv.entries()) {
    auto it = setters.find(key);
    if (it == setters.end()) fail(ErrorKind::Config, "unknown key '" + key + "'");
    it->second(key, value);
  }
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) fail(ErrorKind::Config, "config file not found: " + path.string());
  const auto kv = as_config(path.string(), [&] { return KeyValues::load(path); });
  ExperimentConfig config;
  apply_experiment_keys(kv, path.parent_path(), config);
  config.train.validate();
  return config;
}

}  // namespace smcr
