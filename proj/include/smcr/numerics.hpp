#pragma once

// Dense linear algebra, the MLP feature encoder with its analytic backward
// pass, plain SGD with weight decay, and momentum parameter averaging.

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

namespace smcr {

using Vector = std::vector<double>;

/// Seeded generator whose draws do not depend on the standard library's
/// distribution implementations, so datasets and runs are reproducible across
/// toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Standard normal via Box-Muller.
  double normal();
  /// Uniform integer in [0, n). n must be positive.
  std::size_t below(std::size_t n);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Mixes a base seed with a stream index (splitmix64) to get independent
/// sub-seeds for separate consumers.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// Row-major dense matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  static Matrix identity(std::size_t n);

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }

  bool operator==(const Matrix&) const = default;
};

Matrix transpose(const Matrix& m);
Matrix multiply(const Matrix& a, const Matrix& b);
/// y = m * x
Vector multiply(const Matrix& m, std::span<const double> x);
/// y = m^T * x
Vector multiply_transposed(const Matrix& m, std::span<const double> x);

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);
double squared_distance(std::span<const double> a, std::span<const double> b);
/// Throws Degenerate when the norm is zero.
Vector l2_normalized(std::span<const double> v);
bool all_finite(std::span<const double> v);

/// Orthonormalizes the columns of m in place (modified Gram-Schmidt).
void orthonormalize_columns(Matrix& m);

// ---------------------------------------------------------------------------
// Encoder

enum class Activation { Tanh };

std::string_view to_string(Activation a);

struct DenseLayer {
  Matrix weight;  // out x in
  Vector bias;    // out

  bool operator==(const DenseLayer&) const = default;
};

/// MLP weights: hidden layers apply tanh, the last layer is linear, and the
/// output is L2-normalized.
struct EncoderParams {
  std::vector<DenseLayer> layers;
  Activation activation = Activation::Tanh;

  std::size_t input_dim() const;
  std::size_t output_dim() const;
  /// input_dim, hidden dims..., output_dim
  std::vector<std::size_t> dims() const;
  std::size_t parameter_count() const;
  /// Throws Shape when layer shapes do not chain, Numeric on non-finite entries.
  void validate() const;

  bool operator==(const EncoderParams&) const = default;
};

/// Uniform init in [-1/sqrt(fan_in), +1/sqrt(fan_in)] for weights and biases.
EncoderParams init_encoder(std::span<const std::size_t> dims, std::uint64_t seed);
EncoderParams zeros_like(const EncoderParams& params);
bool same_shape(const EncoderParams& a, const EncoderParams& b);

/// Visits every scalar parameter in a fixed order (weights then bias, per layer).
template <typename F>
void for_each_parameter(EncoderParams& p, F&& f) {
  for (auto& layer : p.layers) {
    for (double& w : layer.weight.data) f(w);
    for (double& b : layer.bias) f(b);
  }
}

/// Everything the backward pass needs from one forward evaluation.
struct EncodeCache {
  std::vector<Vector> activations;  // [0] = input, [l] = output of layer l-1 (post-tanh when hidden)
  Vector raw_output;                // last layer output before normalization
  double raw_norm = 0.0;
};

struct Encoded {
  Vector feature;
  EncodeCache cache;
};

/// Forward pass. Throws Shape on dimension mismatch and Degenerate when the
/// raw output has zero norm.
Encoded encode(const EncoderParams& params, std::span<const double> x);
Vector encode_feature(const EncoderParams& params, std::span<const double> x);

/// Gradient of a scalar loss with respect to every parameter, given the
/// gradient with respect to the normalized feature.
EncoderParams encode_backward(const EncoderParams& params, const EncodeCache& cache,
                              std::span<const double> grad_feature);
/// Same as encode_backward but adds scale * gradient into `grads`.
void encode_backward_accumulate(const EncoderParams& params, const EncodeCache& cache,
                                std::span<const double> grad_feature, double scale,
                                EncoderParams& grads);

/// params - lr * (grads + weight_decay * params). Throws Numeric on a
/// non-finite gradient.
EncoderParams sgd_step(const EncoderParams& params, const EncoderParams& grads, double lr,
                       double weight_decay);

struct MomentumParams {
  EncoderParams params;
  std::uint64_t step = 0;

  /// A^0 = theta.
  static MomentumParams start(const EncoderParams& theta) { return {theta, 0}; }

  bool operator==(const MomentumParams&) const = default;
};

/// A^k = lambda * A^{k-1} + (1 - lambda) * theta. lambda must lie in [0, 1).
MomentumParams momentum_update(const MomentumParams& previous, const EncoderParams& theta,
                               double lambda);

/// base_lr / 10^floor(epoch / 20)
double learning_rate_at(int epoch, double base_lr);

}  // namespace smcr
