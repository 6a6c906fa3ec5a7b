#pragma once

// Parametric multi-domain toy datasets, their on-disk format, and P x K
// mini-batch sampling.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "smcr/numerics.hpp"

namespace smcr {

inline constexpr int kUnlabeled = -1;

enum class DomainTag { Synthetic, Source, Target, Synth2Src, Src2Tgt };

std::string_view to_string(DomainTag tag);
/// Accepts the names produced by to_string (case-sensitive). Throws Parse.
DomainTag parse_domain_tag(std::string_view name);

struct Sample {
  Vector x;
  int identity = kUnlabeled;
  DomainTag domain = DomainTag::Source;
  int camera = 0;

  bool operator==(const Sample&) const = default;
};

struct DomainDataset {
  DomainTag domain = DomainTag::Source;
  int num_identities = 0;
  int num_cameras = 0;
  std::size_t dim = 0;
  std::vector<Sample> samples;

  std::size_t size() const { return samples.size(); }
  bool labeled() const;
  /// Throws Integrity when a sample violates the dataset invariants.
  void validate() const;

  bool operator==(const DomainDataset&) const = default;
};

/// Rotation (orthonormalized I + strength * G, G Gaussian from rotation_seed),
/// then per-coordinate scale, then offset: x = Q (scale .* z) + offset.
struct DomainTransform {
  std::uint64_t rotation_seed = 0;
  double rotation_strength = 0.0;
  Vector scale;   // empty means all ones
  Vector offset;  // empty means zeros
};

struct DomainSpec {
  DomainTag domain = DomainTag::Source;
  int num_identities = 1;
  int samples_per_identity = 1;
  int num_cameras = 1;
  std::size_t input_dim = 1;
  double identity_spread = 0.1;
  double camera_shift_scale = 0.0;
  DomainTransform transform;
  std::uint64_t rng_seed = 0;
  /// Latent coordinates [0, identity_dims) carry identity centroids; 0 means all.
  std::size_t identity_dims = 0;
  /// Extra per-sample noise on the non-identity coordinates.
  double nuisance_spread = 0.0;
  double centroid_scale = 1.0;

  void validate() const;
};

Matrix rotation_matrix(std::size_t dim, std::uint64_t seed, double strength);

/// Deterministic given spec.rng_seed and spec.transform.rotation_seed. Samples
/// are ordered identity-major, then camera, then repetition.
DomainDataset generate_domain(const DomainSpec& spec);

/// Writes dir/meta.txt and dir/samples.csv (creates dir).
void save_dataset(const DomainDataset& ds, const std::filesystem::path& dir);
DomainDataset load_dataset(const std::filesystem::path& dir);

/// Copy with every identity replaced by kUnlabeled.
DomainDataset strip_labels(DomainDataset ds);
std::vector<int> identity_labels(const DomainDataset& ds);
std::vector<Vector> raw_vectors(const DomainDataset& ds);

/// Picks P distinct classes among labels >= 0 and K indices for each (with
/// replacement when a class has fewer than K members). Negative labels are
/// never sampled. Throws Sampling when fewer than P classes exist.
std::vector<std::size_t> pk_batch(std::span<const int> labels, int P, int K, std::uint64_t seed);

}  // namespace smcr
