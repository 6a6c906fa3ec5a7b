#pragma once

// key=value configuration files for data generation and experiments.

#include <filesystem>
#include <optional>
#include <string>

#include "smcr/data.hpp"
#include "smcr/pipeline.hpp"
#include "smcr/text_format.hpp"

namespace smcr {

struct DomainSpecSet {
  DomainSpec synthetic;
  DomainSpec source;
  DomainSpec target;
};

/// Keys are looked up as `<domain>.<key>` first, then as plain `<key>`.
/// Required per domain: num_identities, samples_per_identity, num_cameras,
/// input_dim, identity_spread, rng_seed. Throws Config naming a missing key.
DomainSpecSet parse_domain_specs(const KeyValues& kv);

/// Replaces each domain's rng_seed with a sub-seed of `seed`; transforms keep
/// their own seeds.
DomainSpecSet reseed(DomainSpecSet specs, std::uint64_t seed);

struct ExperimentConfig {
  std::filesystem::path synthetic_dir;
  std::filesystem::path source_dir;
  std::filesystem::path target_dir;
  std::filesystem::path out_dir = "out";
  bool use_pretraining = true;
  TrainConfig train;
};

/// Applies every recognised key onto `config`. Unknown keys are a Config
/// error. Relative paths resolve against `base_dir`.
void apply_experiment_keys(const KeyValues& kv, const std::filesystem::path& base_dir, ExperimentConfig& config);

ExperimentConfig load_experiment_config(const std::filesystem::path& path);

}  // namespace smcr
