#pragma once

// DBSCAN pseudo-label generation with shrink/enlarge stability analysis and
// the two-criterion reliability filter.

#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "smcr/numerics.hpp"

namespace smcr {

inline constexpr int kNoise = -1;

/// Symmetric matrix of pairwise squared Euclidean distances.
struct DistanceMatrix {
  std::size_t n = 0;
  std::vector<double> squared;

  double sq(std::size_t i, std::size_t j) const { return squared[i * n + j]; }
};

/// Row blocks are computed on up to `threads` workers; the result does not
/// depend on the thread count.
DistanceMatrix pairwise_distances(std::span<const Vector> features, int threads = 1);

struct ClusterAssignment {
  std::vector<int> labels;  // cluster id >= 0 or kNoise
  int num_clusters = 0;
  double eps = 0.0;
  int min_pts = 1;

  /// Member indices per cluster, ascending.
  std::vector<std::vector<std::size_t>> members() const;
};

/// Standard DBSCAN; the neighbourhood includes the point itself and uses
/// distance <= eps. Points are scanned in ascending index order and a border
/// point joins the first cluster that reaches it. Throws Domain on eps <= 0 or
/// min_pts < 1.
ClusterAssignment dbscan(std::span<const Vector> features, double eps, int min_pts);
ClusterAssignment dbscan(const DistanceMatrix& dist, double eps, int min_pts);

/// |a ∩ b| / |a ∪ b| over index sets (duplicates ignored). Throws Domain when
/// both are empty.
double overlap_ratio(std::span<const std::size_t> a, std::span<const std::size_t> b);

/// Mean over points of the distance to their min_pts-th nearest other point.
double auto_eps(const DistanceMatrix& dist, int min_pts);

struct StabilityRatios {
  std::vector<double> shrink;   // Jaccard of the point's cluster at eps vs eps_shrink
  std::vector<double> enlarge;  // Jaccard of the point's cluster at eps vs eps_enlarge
  ClusterAssignment base;
  ClusterAssignment shrunk;
  ClusterAssignment enlarged;
};

/// A noise point's cluster is the singleton {point}. Throws Domain unless
/// eps_shrink < eps < eps_enlarge.
StabilityRatios stability_ratios(std::span<const Vector> features, double eps, double eps_shrink,
                                 double eps_enlarge, int min_pts);
StabilityRatios stability_ratios(const DistanceMatrix& dist, double eps, double eps_shrink,
                                 double eps_enlarge, int min_pts);

struct Thresholds {
  double eta1 = 0.0;
  double eta2 = 0.0;
  double shrink_quantile_value = 0.0;
  double enlarge_max = 0.0;
};

/// q = nearest-rank `quantile` of the first-epoch shrink ratios, m = max of the
/// current enlarge ratios; eta1 = q + m, eta2 = q - m (eta2 may be negative).
Thresholds compute_thresholds(std::span<const double> first_epoch_shrink_ratios,
                              std::span<const double> current_enlarge_ratios, double quantile = 0.9);

struct ReliabilityReport {
  std::vector<double> ratio_shrink;
  std::vector<double> ratio_enlarge;
  std::vector<double> c1;
  std::vector<double> c2;
  std::vector<char> accepted;
  double eta1 = 0.0;
  double eta2 = 0.0;
  double eps = 0.0;
};

void write_reliability_csv(const ReliabilityReport& report, std::ostream& out);

struct PseudoLabels {
  std::vector<int> labels;  // in [0, num_clusters + num_outliers)
  int num_clusters = 0;     // reliable clusters
  int num_outliers = 0;     // singleton instances

  int num_classes() const { return num_clusters + num_outliers; }
  bool is_cluster_label(int label) const { return label >= 0 && label < num_clusters; }
};

struct PseudoLabelConfig {
  double eps = 0.0;  // <= 0 selects eps_scale * auto_eps each call
  double eps_scale = 1.0;
  double shrink_factor = 0.9;
  double enlarge_factor = 1.1;
  int min_pts = 4;
  bool criteria_enabled = true;
  double shrink_quantile = 0.9;
  int threads = 1;
};

/// Shrink ratios captured at the first clustering; reused for eta thresholds
/// in every later call.
struct FirstEpochRatios {
  std::optional<std::vector<double>> shrink;
};

struct PseudoLabelResult {
  PseudoLabels labels;
  ReliabilityReport report;
  ClusterAssignment clusters;
};

/// Points with c1 > 0 and c2 > 0 keep their cluster's label; every other point
/// (including all noise) becomes its own singleton class. With criteria
/// disabled every clustered point is kept.
PseudoLabelResult generate_pseudo_labels(std::span<const Vector> features, const PseudoLabelConfig& config,
                                         FirstEpochRatios& first_epoch);

}  // namespace smcr
