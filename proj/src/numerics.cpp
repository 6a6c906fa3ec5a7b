#include "smcr/numerics.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "smcr/error.hpp"

namespace smcr {

double Rng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = 0.0;
  do {
    u1 = uniform();
  } while (u1 <= 0.0);
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

std::size_t Rng::below(std::size_t n) {
  if (n == 0) fail(ErrorKind::Domain, "Rng::below requires n > 0");
  const std::uint64_t bound = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t v = 0;
  do {
    v = engine_();
  } while (v >= limit);
  return static_cast<std::size_t>(v % bound);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix transpose(const Matrix& m) {
  Matrix t(m.cols, m.rows);
  for (std::size_t r = 0; r < m.rows; ++r)
    for (std::size_t c = 0; c < m.cols; ++c) t(c, r) = m(r, c);
  return t;
}

Matrix multiply(const Matrix& a, const Matrix& b) {
  if (a.cols != b.rows) fail(ErrorKind::Shape, "matrix product inner dimensions differ");
  Matrix out(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i) {
    for (std::size_t k = 0; k < a.cols; ++k) {
      const double aik = a(i, k);
      for (std::size_t j = 0; j < b.cols; ++j) out(i, j) += aik * b(k, j);
    }
  }
  return out;
}

Vector multiply(const Matrix& m, std::span<const double> x) {
  if (m.cols != x.size()) fail(ErrorKind::Shape, "matrix-vector product dimension mismatch");
  Vector y(m.rows, 0.0);
  for (std::size_t r = 0; r < m.rows; ++r) y[r] = dot(m.row(r), x);
  return y;
}

Vector multiply_transposed(const Matrix& m, std::span<const double> x) {
  if (m.rows != x.size()) fail(ErrorKind::Shape, "transposed product dimension mismatch");
  Vector y(m.cols, 0.0);
  for (std::size_t r = 0; r < m.rows; ++r) {
    const double xr = x[r];
    const auto row = m.row(r);
    for (std::size_t c = 0; c < m.cols; ++c) y[c] += row[c] * xr;
  }
  return y;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

Vector l2_normalized(std::span<const double> v) {
  const double n = norm2(v);
  if (!(n > 0.0) || !std::isfinite(n)) fail(ErrorKind::Degenerate, "cannot normalize a zero-norm vector");
  Vector out(v.begin(), v.end());
  for (double& x : out) x /= n;
  return out;
}

bool all_finite(std::span<const double> v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

void orthonormalize_columns(Matrix& m) {
  for (std::size_t c = 0; c < m.cols; ++c) {
    for (std::size_t p = 0; p < c; ++p) {
      double proj = 0.0;
      for (std::size_t r = 0; r < m.rows; ++r) proj += m(r, c) * m(r, p);
      for (std::size_t r = 0; r < m.rows; ++r) m(r, c) -= proj * m(r, p);
    }
    double n = 0.0;
    for (std::size_t r = 0; r < m.rows; ++r) n += m(r, c) * m(r, c);
    n = std::sqrt(n);
    if (!(n > 1e-300)) fail(ErrorKind::Degenerate, "columns are linearly dependent");
    for (std::size_t r = 0; r < m.rows; ++r) m(r, c) /= n;
  }
}

// ---------------------------------------------------------------------------

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::Tanh: return "tanh";
  }
  return "unknown";
}

std::size_t EncoderParams::input_dim() const {
  return layers.empty() ? 0 : layers.front().weight.cols;
}

std::size_t EncoderParams::output_dim() const {
  return layers.empty() ? 0 : layers.back().weight.rows;
}

std::vector<std::size_t> EncoderParams::dims() const {
  std::vector<std::size_t> d;
  if (layers.empty()) return d;
  d.push_back(input_dim());
  for (const auto& l : layers) d.push_back(l.weight.rows);
  return d;
}

std::size_t EncoderParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weight.data.size() + l.bias.size();
  return n;
}

void EncoderParams::validate() const {
  if (layers.empty()) fail(ErrorKind::Shape, "encoder has no layers");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    if (l.weight.rows == 0 || l.weight.cols == 0)
      fail(ErrorKind::Shape, "layer " + std::to_string(i) + " has an empty weight matrix");
    if (l.weight.data.size() != l.weight.rows * l.weight.cols)
      fail(ErrorKind::Shape, "layer " + std::to_string(i) + " weight storage size is inconsistent");
    if (l.bias.size() != l.weight.rows)
      fail(ErrorKind::Shape, "layer " + std::to_string(i) + " bias length differs from output size");
    if (i > 0 && layers[i - 1].weight.rows != l.weight.cols)
      fail(ErrorKind::Shape, "layer " + std::to_string(i) + " input does not match previous output");
    if (!all_finite(l.weight.data) || !all_finite(l.bias))
      fail(ErrorKind::Numeric, "layer " + std::to_string(i) + " has non-finite entries");
  }
}

EncoderParams init_encoder(std::span<const std::size_t> dims, std::uint64_t seed) {
  if (dims.size() < 2) fail(ErrorKind::Shape, "encoder needs at least input and output dims");
  for (std::size_t d : dims)
    if (d == 0) fail(ErrorKind::Shape, "encoder dims must be positive");
  Rng rng(seed);
  EncoderParams p;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    DenseLayer layer{Matrix(dims[i + 1], dims[i]), Vector(dims[i + 1])};
    const double bound = 1.0 / std::sqrt(static_cast<double>(dims[i]));
    for (double& w : layer.weight.data) w = rng.uniform(-bound, bound);
    for (double& b : layer.bias) b = rng.uniform(-bound, bound);
    p.layers.push_back(std::move(layer));
  }
  return p;
}

EncoderParams zeros_like(const EncoderParams& params) {
  EncoderParams z = params;
  for_each_parameter(z, [](double& v) { v = 0.0; });
  return z;
}

bool same_shape(const EncoderParams& a, const EncoderParams& b) {
  if (a.layers.size() != b.layers.size()) return false;
  for (std::size_t i = 0; i < a.layers.size(); ++i) {
    if (a.layers[i].weight.rows != b.layers[i].weight.rows ||
        a.layers[i].weight.cols != b.layers[i].weight.cols ||
        a.layers[i].bias.size() != b.layers[i].bias.size())
      return false;
  }
  return true;
}

Encoded encode(const EncoderParams& params, std::span<const double> x) {
  if (params.layers.empty()) fail(ErrorKind::Shape, "encoder has no layers");
  if (x.size() != params.input_dim())
    fail(ErrorKind::Shape, "input has dimension " + std::to_string(x.size()) + ", encoder expects " +
                               std::to_string(params.input_dim()));
  Encoded out;
  auto& acts = out.cache.activations;
  acts.reserve(params.layers.size());
  acts.emplace_back(x.begin(), x.end());
  const std::size_t last = params.layers.size() - 1;
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const auto& layer = params.layers[l];
    Vector z = multiply(layer.weight, acts.back());
    for (std::size_t i = 0; i < z.size(); ++i) z[i] += layer.bias[i];
    if (l == last) {
      out.cache.raw_output = std::move(z);
    } else {
      for (double& v : z) v = std::tanh(v);
      acts.push_back(std::move(z));
    }
  }
  const double n = norm2(out.cache.raw_output);
  if (!(n > 1e-300)) fail(ErrorKind::Degenerate, "encoder output has zero norm");
  out.cache.raw_norm = n;
  out.feature = out.cache.raw_output;
  for (double& v : out.feature) v /= n;
  return out;
}

Vector encode_feature(const EncoderParams& params, std::span<const double> x) {
  return encode(params, x).feature;
}

void encode_backward_accumulate(const EncoderParams& params, const EncodeCache& cache,
                                std::span<const double> grad_feature, double scale,
                                EncoderParams& grads) {
  const std::size_t depth = params.layers.size();
  if (cache.activations.size() != depth || cache.raw_output.size() != params.output_dim() ||
      cache.activations.front().size() != params.input_dim())
    fail(ErrorKind::Shape, "forward cache does not match encoder params");
  if (grad_feature.size() != params.output_dim())
    fail(ErrorKind::Shape, "feature gradient has the wrong dimension");
  if (!same_shape(params, grads)) fail(ErrorKind::Shape, "gradient accumulator shape mismatch");

  // Through f = y / |y|: dL/dy = (g - f (f.g)) / |y|
  const double n = cache.raw_norm;
  Vector delta(cache.raw_output.size());
  double fg = 0.0;
  for (std::size_t i = 0; i < delta.size(); ++i) fg += cache.raw_output[i] / n * grad_feature[i];
  for (std::size_t i = 0; i < delta.size(); ++i)
    delta[i] = (grad_feature[i] - cache.raw_output[i] / n * fg) / n;

  for (std::size_t l = depth; l-- > 0;) {
    const auto& layer = params.layers[l];
    auto& g = grads.layers[l];
    const Vector& input = cache.activations[l];
    for (std::size_t r = 0; r < layer.weight.rows; ++r) {
      const double d = scale * delta[r];
      if (d == 0.0) continue;
      auto grow = g.weight.row(r);
      for (std::size_t c = 0; c < layer.weight.cols; ++c) grow[c] += d * input[c];
      g.bias[r] += d;
    }
    if (l == 0) break;
    Vector upstream = multiply_transposed(layer.weight, delta);
    // input[l] is tanh(z) of the previous layer
    for (std::size_t i = 0; i < upstream.size(); ++i) upstream[i] *= 1.0 - input[i] * input[i];
    delta = std::move(upstream);
  }
}

EncoderParams encode_backward(const EncoderParams& params, const EncodeCache& cache,
                              std::span<const double> grad_feature) {
  EncoderParams grads = zeros_like(params);
  encode_backward_accumulate(params, cache, grad_feature, 1.0, grads);
  return grads;
}

EncoderParams sgd_step(const EncoderParams& params, const EncoderParams& grads, double lr,
                       double weight_decay) {
  if (!same_shape(params, grads)) fail(ErrorKind::Shape, "gradient shape does not match params");
  if (!(lr >= 0.0) || !std::isfinite(lr)) fail(ErrorKind::Domain, "learning rate must be finite and non-negative");
  if (!(weight_decay >= 0.0)) fail(ErrorKind::Domain, "weight decay must be non-negative");
  EncoderParams out = params;
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const auto& g = grads.layers[l];
    auto& o = out.layers[l];
    if (!all_finite(g.weight.data) || !all_finite(g.bias))
      fail(ErrorKind::Numeric, "non-finite gradient in layer " + std::to_string(l));
    if (lr == 0.0) continue;
    for (std::size_t i = 0; i < o.weight.data.size(); ++i)
      o.weight.data[i] -= lr * (g.weight.data[i] + weight_decay * o.weight.data[i]);
    for (std::size_t i = 0; i < o.bias.size(); ++i)
      o.bias[i] -= lr * (g.bias[i] + weight_decay * o.bias[i]);
  }
  return out;
}

MomentumParams momentum_update(const MomentumParams& previous, const EncoderParams& theta,
                               double lambda) {
  if (!(lambda >= 0.0 && lambda < 1.0))
    fail(ErrorKind::Domain, "momentum coefficient must lie in [0, 1), got " + std::to_string(lambda));
  if (!same_shape(previous.params, theta)) fail(ErrorKind::Shape, "momentum params do not match encoder");
  MomentumParams next = previous;
  const double keep = 1.0 - lambda;
  for (std::size_t l = 0; l < theta.layers.size(); ++l) {
    auto& a = next.params.layers[l];
    const auto& t = theta.layers[l];
    for (std::size_t i = 0; i < a.weight.data.size(); ++i)
      a.weight.data[i] = lambda * a.weight.data[i] + keep * t.weight.data[i];
    for (std::size_t i = 0; i < a.bias.size(); ++i) a.bias[i] = lambda * a.bias[i] + keep * t.bias[i];
  }
  ++next.step;
  return next;
}

double learning_rate_at(int epoch, double base_lr) {
  if (epoch < 0) fail(ErrorKind::Domain, "epoch must be non-negative");
  return base_lr / std::pow(10.0, epoch / 20);
}

}  // namespace smcr
