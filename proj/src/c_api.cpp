#include "smcr/smcr.h"

#include <cstring>
#include <fstream>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "smcr/config.hpp"
#include "smcr/error.hpp"
#include "smcr/eval.hpp"
#include "smcr/pipeline.hpp"
#include "smcr/serialize.hpp"
#include "smcr/text_format.hpp"

using namespace smcr;

struct smcr_config {
  KeyValues keys;
};

struct smcr_dataset {
  DomainDataset data;
};

struct smcr_encoder {
  EncoderParams params;
};

struct smcr_model {
  BranchState dthr;
  BranchState rihr;
  std::string run_report;
  std::map<std::string, double> summary;
};

struct smcr_metrics {
  std::vector<std::pair<std::string, double>> entries;
};

namespace {

thread_local std::string g_last_error;

smcr_status status_of(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Shape: return SMCR_ERR_SHAPE;
    case ErrorKind::Degenerate: return SMCR_ERR_DEGENERATE;
    case ErrorKind::Numeric: return SMCR_ERR_NUMERIC;
    case ErrorKind::Domain: return SMCR_ERR_DOMAIN;
    case ErrorKind::Parse: return SMCR_ERR_PARSE;
    case ErrorKind::Integrity: return SMCR_ERR_INTEGRITY;
    case ErrorKind::Sampling: return SMCR_ERR_SAMPLING;
    case ErrorKind::Lookup: return SMCR_ERR_LOOKUP;
    case ErrorKind::Mining: return SMCR_ERR_MINING;
    case ErrorKind::Alignment: return SMCR_ERR_ALIGNMENT;
    case ErrorKind::Contract: return SMCR_ERR_CONTRACT;
    case ErrorKind::Evaluation: return SMCR_ERR_EVALUATION;
    case ErrorKind::Io: return SMCR_ERR_IO;
    case ErrorKind::Config: return SMCR_ERR_CONFIG;
  }
  return SMCR_ERR_INTERNAL;
}

// Null handles and undersized buffers.
struct ArgumentError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

template <typename F>
smcr_status run(F&& f) {
  try {
    f();
    g_last_error.clear();
    return SMCR_OK;
  } catch (const ArgumentError& e) {
    g_last_error = std::string("argument: ") + e.what();
    return SMCR_ERR_ARGUMENT;
  } catch (const Error& e) {
    g_last_error = e.what();
    return status_of(e.kind());
  } catch (const std::exception& e) {
    g_last_error = std::string("internal error: ") + e.what();
    return SMCR_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "internal error";
    return SMCR_ERR_INTERNAL;
  }
}

void need(const void* p, const char* name) {
  if (p == nullptr) throw ArgumentError(std::string("null ") + name);
}

ExperimentConfig materialize(const smcr_config* config) {
  ExperimentConfig ec;
  if (config) apply_experiment_keys(config->keys, std::filesystem::current_path(), ec);
  ec.train.validate();
  return ec;
}

}  // namespace

extern "C" {

const char* smcr_last_error(void) { return g_last_error.c_str(); }

const char* smcr_status_name(smcr_status status) {
  switch (status) {
    case SMCR_OK: return "ok";
    case SMCR_ERR_SHAPE: return "shape";
    case SMCR_ERR_DEGENERATE: return "degenerate";
    case SMCR_ERR_NUMERIC: return "numeric";
    case SMCR_ERR_DOMAIN: return "domain";
    case SMCR_ERR_PARSE: return "parse";
    case SMCR_ERR_INTEGRITY: return "integrity";
    case SMCR_ERR_SAMPLING: return "sampling";
    case SMCR_ERR_LOOKUP: return "lookup";
    case SMCR_ERR_MINING: return "mining";
    case SMCR_ERR_ALIGNMENT: return "alignment";
    case SMCR_ERR_CONTRACT: return "contract";
    case SMCR_ERR_EVALUATION: return "evaluation";
    case SMCR_ERR_IO: return "io";
    case SMCR_ERR_CONFIG: return "config";
    case SMCR_ERR_ARGUMENT: return "argument";
    case SMCR_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

smcr_status smcr_config_new(smcr_config** out) {
  return run([&] {
    need(out, "out");
    *out = new smcr_config{};
  });
}

smcr_status smcr_config_load(const char* path, smcr_config** out) {
  return run([&] {
    need(path, "path");
    need(out, "out");
    const std::filesystem::path p(path);
    if (!std::filesystem::exists(p)) fail(ErrorKind::Config, "config file not found: " + p.string());
    KeyValues kv;
    try {
      kv = KeyValues::load(p);
    } catch (const Error& e) {
      fail(ErrorKind::Config, e.what());
    }
    // Relative paths in the file are relative to the file itself.
    const auto base = std::filesystem::absolute(p).parent_path();
    for (const char* key : {"data_dir", "synthetic_dir", "source_dir", "target_dir", "out_dir"})
      if (auto v = kv.get(key); v && std::filesystem::path(*v).is_relative()) kv.set(key, (base / *v).string());
    ExperimentConfig probe;
    apply_experiment_keys(kv, base, probe);
    probe.train.validate();
    *out = new smcr_config{std::move(kv)};
  });
}

smcr_status smcr_config_set(smcr_config* config, const char* key, const char* value) {
  return run([&] {
    need(config, "config");
    need(key, "key");
    need(value, "value");
    KeyValues probe_keys = config->keys;
    probe_keys.set(key, value);
    ExperimentConfig probe;
    apply_experiment_keys(probe_keys, std::filesystem::current_path(), probe);
    config->keys = std::move(probe_keys);
  });
}

smcr_status smcr_config_get(const smcr_config* config, const char* key, char* buffer, size_t capacity) {
  return run([&] {
    need(config, "config");
    need(key, "key");
    need(buffer, "buffer");
    const ExperimentConfig ec = materialize(config);
    std::string value;
    const std::string k(key);
    if (k == "synthetic_dir")
      value = ec.synthetic_dir.string();
    else if (k == "source_dir")
      value = ec.source_dir.string();
    else if (k == "target_dir")
      value = ec.target_dir.string();
    else if (k == "out_dir")
      value = ec.out_dir.string();
    else if (k == "use_pretraining")
      value = ec.use_pretraining ? "true" : "false";
    else if (k == "alpha")
      value = format_double(ec.train.alpha);
    else if (k == "seed")
      value = std::to_string(ec.train.seed);
    else if (auto v = config->keys.get(k))
      value = *v;
    else
      fail(ErrorKind::Lookup, "key not set: " + k);
    if (value.size() + 1 > capacity) throw ArgumentError("buffer too small");
    std::memcpy(buffer, value.c_str(), value.size() + 1);
  });
}

void smcr_config_free(smcr_config* config) { delete config; }

smcr_status smcr_generate_data(const char* spec_path, const char* out_dir, long long seed) {
  return run([&] {
    need(spec_path, "spec_path");
    need(out_dir, "out_dir");
    const std::filesystem::path p(spec_path);
    if (!std::filesystem::exists(p)) fail(ErrorKind::Config, "spec file not found: " + p.string());
    KeyValues kv;
    try {
      kv = KeyValues::load(p);
    } catch (const Error& e) {
      fail(ErrorKind::Config, e.what());
    }
    DomainSpecSet specs = parse_domain_specs(kv);
    if (seed >= 0) specs = reseed(specs, static_cast<std::uint64_t>(seed));
    const std::filesystem::path out(out_dir);
    save_dataset(generate_domain(specs.synthetic), out / "synthetic");
    save_dataset(generate_domain(specs.source), out / "source");
    save_dataset(generate_domain(specs.target), out / "target");
  });
}

smcr_status smcr_dataset_load(const char* dir, smcr_dataset** out) {
  return run([&] {
    need(dir, "dir");
    need(out, "out");
    if (!std::filesystem::exists(std::filesystem::path(dir) / "meta.txt"))
      fail(ErrorKind::Io, "missing artifact: " + (std::filesystem::path(dir) / "meta.txt").string());
    *out = new smcr_dataset{load_dataset(dir)};
  });
}

smcr_status smcr_dataset_save(const smcr_dataset* ds, const char* dir) {
  return run([&] {
    need(ds, "dataset");
    need(dir, "dir");
    save_dataset(ds->data, dir);
  });
}

size_t smcr_dataset_size(const smcr_dataset* ds) { return ds ? ds->data.size() : 0; }
size_t smcr_dataset_dim(const smcr_dataset* ds) { return ds ? ds->data.dim : 0; }

smcr_status smcr_dataset_sample(const smcr_dataset* ds, size_t index, double* x, int* identity, int* camera) {
  return run([&] {
    need(ds, "dataset");
    if (index >= ds->data.size()) fail(ErrorKind::Domain, "sample index out of range");
    const Sample& s = ds->data.samples[index];
    if (x) std::copy(s.x.begin(), s.x.end(), x);
    if (identity) *identity = s.identity;
    if (camera) *camera = s.camera;
  });
}

void smcr_dataset_free(smcr_dataset* ds) { delete ds; }

smcr_status smcr_pretrain(const smcr_config* config, const smcr_dataset* synthetic, const smcr_dataset* source,
                          smcr_encoder** out) {
  return run([&] {
    need(synthetic, "synthetic");
    need(source, "source");
    need(out, "out");
    const ExperimentConfig ec = materialize(config);
    *out = new smcr_encoder{synthetic_pretrain(synthetic->data, source->data, ec.train)};
  });
}

smcr_status smcr_source_only(const smcr_config* config, const smcr_dataset* source, smcr_encoder** out) {
  return run([&] {
    need(source, "source");
    need(out, "out");
    const ExperimentConfig ec = materialize(config);
    *out = new smcr_encoder{source_only_pretrain(source->data, ec.train)};
  });
}

smcr_status smcr_initial_encoder(const smcr_config* config, size_t input_dim, smcr_encoder** out) {
  return run([&] {
    need(out, "out");
    if (input_dim == 0) fail(ErrorKind::Domain, "input_dim must be positive");
    const ExperimentConfig ec = materialize(config);
    *out = new smcr_encoder{initial_encoder(input_dim, ec.train)};
  });
}

smcr_status smcr_encoder_load(const char* path, smcr_encoder** out) {
  return run([&] {
    need(path, "path");
    need(out, "out");
    *out = new smcr_encoder{load_encoder(path)};
  });
}

smcr_status smcr_encoder_save(const smcr_encoder* encoder, const char* path) {
  return run([&] {
    need(encoder, "encoder");
    need(path, "path");
    save_encoder(encoder->params, path);
  });
}

size_t smcr_encoder_input_dim(const smcr_encoder* encoder) { return encoder ? encoder->params.input_dim() : 0; }
size_t smcr_encoder_output_dim(const smcr_encoder* encoder) { return encoder ? encoder->params.output_dim() : 0; }

smcr_status smcr_encoder_encode(const smcr_encoder* encoder, const double* x, size_t dim, double* out,
                                size_t out_capacity) {
  return run([&] {
    need(encoder, "encoder");
    need(x, "x");
    need(out, "out");
    if (out_capacity < encoder->params.output_dim())
      throw ArgumentError("output buffer too small");
    const Vector f = encode_feature(encoder->params, std::span<const double>(x, dim));
    std::copy(f.begin(), f.end(), out);
  });
}

void smcr_encoder_free(smcr_encoder* encoder) { delete encoder; }

smcr_status smcr_adapt(const smcr_config* config, const smcr_encoder* pretrained, const smcr_dataset* source,
                       const smcr_dataset* target, smcr_model** out) {
  return run([&] {
    need(pretrained, "pretrained");
    need(source, "source");
    need(target, "target");
    need(out, "out");
    const ExperimentConfig ec = materialize(config);
    // Ground truth goes to the auditor only; training sees stripped labels.
    std::optional<PurityAuditor> auditor;
    if (target->data.labeled()) auditor.emplace(identity_labels(target->data));
    const DomainDataset unlabeled = strip_labels(target->data);
    AdaptResult r = adapt(pretrained->params, source->data, unlabeled, ec.train, auditor ? &*auditor : nullptr);
    if (auditor)
      for (const auto& [k, v] : evaluate_model(r.dthr.encoder, r.rihr.encoder, target->data, ec.train.alpha))
        r.report.final_metrics[k] = v;
    auto* m = new smcr_model{std::move(r.dthr), std::move(r.rihr), run_report_csv(r.report), r.report.final_metrics};
    *out = m;
  });
}

smcr_status smcr_model_save(const smcr_model* model, const char* dir) {
  return run([&] {
    need(model, "model");
    need(dir, "dir");
    const std::filesystem::path d(dir);
    std::error_code ec;
    std::filesystem::create_directories(d, ec);
    if (ec) fail(ErrorKind::Io, "cannot create directory '" + d.string() + "'");
    save_branch(model->dthr, d / "branch_dthr.txt");
    save_branch(model->rihr, d / "branch_rihr.txt");
    write_text_file(d / "run_report.csv", model->run_report);
    write_text_file(d / "adapt_summary.txt", format_metrics(model->summary));
  });
}

smcr_status smcr_model_load(const char* dir, smcr_model** out) {
  return run([&] {
    need(dir, "dir");
    need(out, "out");
    const std::filesystem::path d(dir);
    auto* m = new smcr_model{};
    try {
      m->dthr = load_branch(d / "branch_dthr.txt");
      m->rihr = load_branch(d / "branch_rihr.txt");
      if (std::filesystem::exists(d / "run_report.csv")) m->run_report = read_text_file(d / "run_report.csv");
    } catch (...) {
      delete m;
      throw;
    }
    *out = m;
  });
}

smcr_status smcr_model_run_report(const smcr_model* model, char* buffer, size_t capacity, size_t* required) {
  return run([&] {
    need(model, "model");
    if (required) *required = model->run_report.size() + 1;
    if (buffer == nullptr) return;
    if (capacity < model->run_report.size() + 1) throw ArgumentError("buffer too small");
    std::memcpy(buffer, model->run_report.c_str(), model->run_report.size() + 1);
  });
}

smcr_status smcr_model_fuse_predict(const smcr_model* model, const double* x, size_t dim, double alpha, double* out,
                                    size_t capacity, size_t* count) {
  return run([&] {
    need(model, "model");
    need(x, "x");
    const Vector y = fuse_predict(model->dthr, model->rihr, std::span<const double>(x, dim), alpha);
    if (count) *count = y.size();
    if (out == nullptr) return;
    if (capacity < y.size()) throw ArgumentError("output buffer too small");
    std::copy(y.begin(), y.end(), out);
  });
}

void smcr_model_free(smcr_model* model) { delete model; }

smcr_status smcr_evaluate(const smcr_model* model, const smcr_dataset* target, double alpha, smcr_metrics** out) {
  return run([&] {
    need(model, "model");
    need(target, "target");
    need(out, "out");
    const auto m = evaluate_model(model->dthr.encoder, model->rihr.encoder, target->data, alpha);
    *out = new smcr_metrics{{m.begin(), m.end()}};
  });
}

smcr_status smcr_evaluate_encoder(const smcr_encoder* encoder, const smcr_dataset* target, const char* prefix,
                                  smcr_metrics** out) {
  return run([&] {
    need(encoder, "encoder");
    need(target, "target");
    need(out, "out");
    const auto m = evaluate_encoder(encoder->params, target->data, prefix ? prefix : "encoder");
    *out = new smcr_metrics{{m.begin(), m.end()}};
  });
}

smcr_status smcr_write_per_query(const smcr_model* model, const smcr_dataset* target, double alpha,
                                 const char* path) {
  return run([&] {
    need(model, "model");
    need(target, "target");
    need(path, "path");
    if (!target->data.labeled()) fail(ErrorKind::Contract, "evaluation dataset must be fully labeled");
    RetrievalSet set;
    set.features = extract_fused_embeddings(model->dthr.encoder, model->rihr.encoder, target->data, alpha);
    for (const auto& s : target->data.samples) {
      set.identities.push_back(s.identity);
      set.cameras.push_back(s.camera);
    }
    const auto metrics = evaluate_retrieval(set, set, 10);
    std::ofstream f(path, std::ios::binary);
    if (!f) fail(ErrorKind::Io, std::string("cannot write '") + path + "'");
    write_per_query_csv(metrics, f);
  });
}

size_t smcr_metrics_count(const smcr_metrics* metrics) { return metrics ? metrics->entries.size() : 0; }

const char* smcr_metrics_key(const smcr_metrics* metrics, size_t index) {
  if (!metrics || index >= metrics->entries.size()) return nullptr;
  return metrics->entries[index].first.c_str();
}

smcr_status smcr_metrics_get(const smcr_metrics* metrics, const char* key, double* value) {
  return run([&] {
    need(metrics, "metrics");
    need(key, "key");
    need(value, "value");
    for (const auto& [k, v] : metrics->entries)
      if (k == key) {
        *value = v;
        return;
      }
    fail(ErrorKind::Lookup, std::string("no metric named '") + key + "'");
  });
}

smcr_status smcr_metrics_save(const smcr_metrics* metrics, const char* path) {
  return run([&] {
    need(metrics, "metrics");
    need(path, "path");
    write_text_file(path, format_metrics({metrics->entries.begin(), metrics->entries.end()}));
  });
}

void smcr_metrics_free(smcr_metrics* metrics) { delete metrics; }

}  // extern "C"
