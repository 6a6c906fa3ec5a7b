#pragma once

// Label-preserving affine domain translation fitted by moment matching.
//
//   x' = rotation * frame * (scale .* (frame^T * x)) + offset
//
// `frame` is the orthonormal basis in which the per-axis scale acts. With an
// identity frame this is the plain rotation-after-scale map.

#include <filesystem>
#include <span>
#include <vector>

#include "smcr/data.hpp"
#include "smcr/numerics.hpp"

namespace smcr {

struct TranslatorParams {
  Vector scale;
  Matrix rotation;
  Matrix frame;
  Vector offset;

  static TranslatorParams identity(std::size_t dim);
  std::size_t dim() const { return scale.size(); }
  /// Orthogonality within 1e-9, positive scale, consistent shapes.
  void validate() const;
  /// Effective linear map rotation * frame * diag(scale) * frame^T.
  Matrix linear_map() const;

  bool operator==(const TranslatorParams&) const = default;
};

/// Matches the mean and full covariance of `src` to those of `dst` by pairing
/// their principal axes (ordered by variance, signs fixed by third moment).
/// Throws Degenerate when a source coordinate or principal axis has no variance.
TranslatorParams fit_translator(std::span<const Vector> src, std::span<const Vector> dst);

Vector translate(const TranslatorParams& params, std::span<const double> x);
/// Inverse map; recovers x from translate(params, x).
Vector untranslate(const TranslatorParams& params, std::span<const double> y);

/// Copies identity and camera; sets the domain tag to `new_tag`.
Sample translate(const TranslatorParams& params, const Sample& s, DomainTag new_tag);
DomainDataset translate_dataset(const TranslatorParams& params, const DomainDataset& ds, DomainTag new_tag);

/// Emulates an imperfect translator: perturbs the rotation (re-orthonormalized),
/// scale (log-normal) and offset with relative noise of the given magnitude.
TranslatorParams perturb_translator(const TranslatorParams& params, double noise, std::uint64_t seed);

}  // namespace smcr
