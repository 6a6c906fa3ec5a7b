#include "smcr/translator.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "smcr/error.hpp"

namespace smcr {
namespace {

struct Moments {
  Eigen::VectorXd mean;
  Eigen::MatrixXd axes;    // columns, descending variance
  Eigen::VectorXd spread;  // variance along each axis
};

Eigen::MatrixXd to_eigen(std::span<const Vector> rows, std::size_t dim) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != dim) fail(ErrorKind::Shape, "translator input rows differ in dimension");
    for (std::size_t d = 0; d < dim; ++d) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d)) = rows[i][d];
  }
  return m;
}

Moments principal_moments(const Eigen::MatrixXd& x, const char* which) {
  const auto n = static_cast<double>(x.rows());
  Moments m;
  m.mean = x.colwise().mean().transpose();
  const Eigen::MatrixXd centered = x.rowwise() - m.mean.transpose();
  const Eigen::MatrixXd cov = centered.transpose() * centered / n;

  for (Eigen::Index d = 0; d < cov.rows(); ++d) {
    const double mu = m.mean(d);
    if (!(cov(d, d) > 1e-20 * (1.0 + mu * mu)))
      fail(ErrorKind::Degenerate, std::string(which) + " coordinate " + std::to_string(d) + " has zero variance");
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success) fail(ErrorKind::Numeric, "eigen decomposition failed");
  const Eigen::Index dim = cov.rows();
  m.axes.resize(dim, dim);
  m.spread.resize(dim);
  for (Eigen::Index k = 0; k < dim; ++k) {
    m.axes.col(k) = eig.eigenvectors().col(dim - 1 - k);
    m.spread(k) = eig.eigenvalues()(dim - 1 - k);
  }
  const double top = m.spread(0);
  for (Eigen::Index k = 0; k < dim; ++k) {
    if (!(m.spread(k) > 1e-12 * top))
      fail(ErrorKind::Degenerate, std::string(which) + " covariance is rank-deficient (principal axis " +
                                      std::to_string(k) + ")");
    // Orient each axis so that the projected data has non-negative skew; fall
    // back to a positive largest-magnitude component when the skew vanishes.
    const Eigen::VectorXd proj = centered * m.axes.col(k);
    const double m3 = proj.array().cube().mean();
    const double scale3 = std::pow(m.spread(k), 1.5);
    bool flip = false;
    if (std::abs(m3) > 1e-6 * scale3) {
      flip = m3 < 0.0;
    } else {
      Eigen::Index arg = 0;
      m.axes.col(k).cwiseAbs().maxCoeff(&arg);
      flip = m.axes(arg, k) < 0.0;
    }
    if (flip) m.axes.col(k) = -m.axes.col(k);
  }
  return m;
}

Matrix from_eigen(const Eigen::MatrixXd& e) {
  Matrix m(static_cast<std::size_t>(e.rows()), static_cast<std::size_t>(e.cols()));
  for (Eigen::Index r = 0; r < e.rows(); ++r)
    for (Eigen::Index c = 0; c < e.cols(); ++c) m(r, c) = e(r, c);
  return m;
}

double orthogonality_error(const Matrix& q) {
  const Matrix qtq = multiply(transpose(q), q);
  double worst = 0.0;
  for (std::size_t r = 0; r < qtq.rows; ++r)
    for (std::size_t c = 0; c < qtq.cols; ++c)
      worst = std::max(worst, std::abs(qtq(r, c) - (r == c ? 1.0 : 0.0)));
  return worst;
}

}  // namespace

TranslatorParams TranslatorParams::identity(std::size_t dim) {
  return {Vector(dim, 1.0), Matrix::identity(dim), Matrix::identity(dim), Vector(dim, 0.0)};
}

void TranslatorParams::validate() const {
  const std::size_t n = scale.size();
  if (n == 0) fail(ErrorKind::Shape, "translator has zero dimension");
  if (rotation.rows != n || rotation.cols != n || frame.rows != n || frame.cols != n || offset.size() != n)
    fail(ErrorKind::Shape, "translator components disagree in dimension");
  for (double s : scale)
    if (!(s > 0.0) || !std::isfinite(s)) fail(ErrorKind::Domain, "translator scale entries must be positive");
  if (orthogonality_error(rotation) > 1e-9) fail(ErrorKind::Domain, "translator rotation is not orthogonal");
  if (orthogonality_error(frame) > 1e-9) fail(ErrorKind::Domain, "translator frame is not orthogonal");
}

Matrix TranslatorParams::linear_map() const {
  Matrix scaled_frame = frame;
  for (std::size_t r = 0; r < scaled_frame.rows; ++r)
    for (std::size_t c = 0; c < scaled_frame.cols; ++c) scaled_frame(r, c) *= scale[c];
  return multiply(rotation, multiply(scaled_frame, transpose(frame)));
}

TranslatorParams fit_translator(std::span<const Vector> src, std::span<const Vector> dst) {
  if (src.empty() || dst.empty()) fail(ErrorKind::Domain, "translator fitting needs non-empty collections");
  const std::size_t dim = src.front().size();
  if (dim == 0 || dst.front().size() != dim) fail(ErrorKind::Shape, "source and target dimensions differ");

  const Moments s = principal_moments(to_eigen(src, dim), "source");
  const Moments d = principal_moments(to_eigen(dst, dim), "target");

  const Eigen::MatrixXd rotation = d.axes * s.axes.transpose();
  const Eigen::VectorXd scale = (d.spread.array() / s.spread.array()).sqrt();
  const Eigen::MatrixXd linear = d.axes * scale.asDiagonal() * s.axes.transpose();
  const Eigen::VectorXd offset = d.mean - linear * s.mean;

  TranslatorParams p;
  p.scale.assign(scale.data(), scale.data() + scale.size());
  p.rotation = from_eigen(rotation);
  p.frame = from_eigen(s.axes);
  p.offset.assign(offset.data(), offset.data() + offset.size());
  return p;
}

Vector translate(const TranslatorParams& params, std::span<const double> x) {
  if (x.size() != params.dim()) fail(ErrorKind::Shape, "sample dimension differs from translator");
  Vector local = multiply_transposed(params.frame, x);
  for (std::size_t i = 0; i < local.size(); ++i) local[i] *= params.scale[i];
  Vector y = multiply(params.rotation, multiply(params.frame, local));
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += params.offset[i];
  return y;
}

Vector untranslate(const TranslatorParams& params, std::span<const double> y) {
  if (y.size() != params.dim()) fail(ErrorKind::Shape, "sample dimension differs from translator");
  Vector shifted(y.begin(), y.end());
  for (std::size_t i = 0; i < shifted.size(); ++i) shifted[i] -= params.offset[i];
  Vector local = multiply_transposed(params.frame, multiply_transposed(params.rotation, shifted));
  for (std::size_t i = 0; i < local.size(); ++i) local[i] /= params.scale[i];
  return multiply(params.frame, local);
}

Sample translate(const TranslatorParams& params, const Sample& s, DomainTag new_tag) {
  return Sample{translate(params, s.x), s.identity, new_tag, s.camera};
}

DomainDataset translate_dataset(const TranslatorParams& params, const DomainDataset& ds, DomainTag new_tag) {
  DomainDataset out;
  out.domain = new_tag;
  out.num_identities = ds.num_identities;
  out.num_cameras = ds.num_cameras;
  out.dim = ds.dim;
  out.samples.reserve(ds.samples.size());
  for (const auto& s : ds.samples) out.samples.push_back(translate(params, s, new_tag));
  return out;
}

TranslatorParams perturb_translator(const TranslatorParams& params, double noise, std::uint64_t seed) {
  if (noise <= 0.0) return params;
  Rng rng(seed);
  TranslatorParams p = params;
  for (double& v : p.rotation.data) v += noise * rng.normal();
  orthonormalize_columns(p.rotation);
  for (double& s : p.scale) s *= std::exp(noise * rng.normal());
  double rms = 0.0;
  for (double o : p.offset) rms += o * o;
  rms = std::sqrt(rms / static_cast<double>(std::max<std::size_t>(1, p.offset.size())));
  for (double& o : p.offset) o += noise * (1.0 + rms) * rng.normal();
  return p;
}

}  // namespace smcr
