#include "smcr/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <ostream>
#include <string>
#include <thread>

#include "smcr/error.hpp"
#include "smcr/text_format.hpp"

namespace smcr {

DistanceMatrix pairwise_distances(std::span<const Vector> features, int threads) {
  DistanceMatrix d;
  d.n = features.size();
  d.squared.assign(d.n * d.n, 0.0);
  if (d.n == 0) return d;
  const std::size_t dim = features.front().size();
  for (const auto& f : features)
    if (f.size() != dim) fail(ErrorKind::Shape, "features differ in dimension");

  auto rows = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i)
      for (std::size_t j = i + 1; j < d.n; ++j) d.squared[i * d.n + j] = squared_distance(features[i], features[j]);
  };
  const std::size_t workers = std::clamp<std::size_t>(threads < 1 ? 1 : threads, 1, d.n);
  if (workers == 1) {
    rows(0, d.n);
  } else {
    // Upper-triangle rows shrink with i; interleave blocks so work balances.
    std::vector<std::thread> pool;
    const std::size_t block = 16;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t b = w * block; b < d.n; b += workers * block) rows(b, std::min(d.n, b + block));
      });
    }
    for (auto& t : pool) t.join();
  }
  for (std::size_t i = 0; i < d.n; ++i)
    for (std::size_t j = 0; j < i; ++j) d.squared[i * d.n + j] = d.squared[j * d.n + i];
  return d;
}

std::vector<std::vector<std::size_t>> ClusterAssignment::members() const {
  std::vector<std::vector<std::size_t>> out(num_clusters);
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] >= 0) out[labels[i]].push_back(i);
  return out;
}

ClusterAssignment dbscan(const DistanceMatrix& dist, double eps, int min_pts) {
  if (!(eps > 0.0)) fail(ErrorKind::Domain, "eps must be positive");
  if (min_pts < 1) fail(ErrorKind::Domain, "min_pts must be at least 1");
  constexpr int kUnvisited = -2;
  const std::size_t n = dist.n;
  const double eps_sq = eps * eps;

  auto neighbours = [&](std::size_t i) {
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < n; ++j)
      if (dist.sq(i, j) <= eps_sq) out.push_back(j);
    return out;
  };

  ClusterAssignment result;
  result.eps = eps;
  result.min_pts = min_pts;
  result.labels.assign(n, kUnvisited);
  int cluster = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (result.labels[i] != kUnvisited) continue;
    auto seeds = neighbours(i);
    if (seeds.size() < static_cast<std::size_t>(min_pts)) {
      result.labels[i] = kNoise;
      continue;
    }
    result.labels[i] = cluster;
    std::deque<std::size_t> queue(seeds.begin(), seeds.end());
    while (!queue.empty()) {
      const std::size_t j = queue.front();
      queue.pop_front();
      if (result.labels[j] == kNoise) {
        result.labels[j] = cluster;  // border point
        continue;
      }
      if (result.labels[j] != kUnvisited) continue;
      result.labels[j] = cluster;
      auto more = neighbours(j);
      if (more.size() >= static_cast<std::size_t>(min_pts)) queue.insert(queue.end(), more.begin(), more.end());
    }
    ++cluster;
  }
  result.num_clusters = cluster;
  return result;
}

ClusterAssignment dbscan(std::span<const Vector> features, double eps, int min_pts) {
  if (features.empty()) fail(ErrorKind::Domain, "dbscan needs at least one point");
  return dbscan(pairwise_distances(features), eps, min_pts);
}

double overlap_ratio(std::span<const std::size_t> a, std::span<const std::size_t> b) {
  std::vector<std::size_t> sa(a.begin(), a.end());
  std::vector<std::size_t> sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  sa.erase(std::unique(sa.begin(), sa.end()), sa.end());
  std::sort(sb.begin(), sb.end());
  sb.erase(std::unique(sb.begin(), sb.end()), sb.end());
  if (sa.empty() && sb.empty()) fail(ErrorKind::Domain, "overlap ratio of two empty sets is undefined");
  std::size_t inter = 0;
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < sa.size() && j < sb.size()) {
    if (sa[i] == sb[j]) {
      ++inter;
      ++i;
      ++j;
    } else if (sa[i] < sb[j]) {
      ++i;
    } else {
      ++j;
    }
  }
  const std::size_t uni = sa.size() + sb.size() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

double auto_eps(const DistanceMatrix& dist, int min_pts) {
  if (dist.n < 2) fail(ErrorKind::Domain, "auto eps needs at least two points");
  if (min_pts < 1) fail(ErrorKind::Domain, "min_pts must be at least 1");
  const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(min_pts), dist.n - 1);
  double total = 0.0;
  std::vector<double> row;
  for (std::size_t i = 0; i < dist.n; ++i) {
    row.clear();
    for (std::size_t j = 0; j < dist.n; ++j)
      if (j != i) row.push_back(dist.sq(i, j));
    std::nth_element(row.begin(), row.begin() + (k - 1), row.end());
    total += std::sqrt(row[k - 1]);
  }
  const double eps = total / static_cast<double>(dist.n);
  if (!(eps > 0.0)) fail(ErrorKind::Degenerate, "all points coincide; cannot choose eps");
  return eps;
}

namespace {

// Jaccard ratio between each point's cluster under `a` and under `b`.
std::vector<double> per_point_overlap(const ClusterAssignment& a, const ClusterAssignment& b) {
  const auto ma = a.members();
  const auto mb = b.members();
  const std::size_t n = a.labels.size();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t self[1] = {i};
    std::span<const std::size_t> sa = a.labels[i] >= 0 ? std::span<const std::size_t>(ma[a.labels[i]]) : self;
    std::span<const std::size_t> sb = b.labels[i] >= 0 ? std::span<const std::size_t>(mb[b.labels[i]]) : self;
    out[i] = overlap_ratio(sa, sb);
  }
  return out;
}

}  // namespace

StabilityRatios stability_ratios(const DistanceMatrix& dist, double eps, double eps_shrink, double eps_enlarge,
                                 int min_pts) {
  if (!(eps_shrink < eps && eps < eps_enlarge))
    fail(ErrorKind::Domain, "radii must satisfy eps_shrink < eps < eps_enlarge");
  StabilityRatios r;
  r.base = dbscan(dist, eps, min_pts);
  r.shrunk = dbscan(dist, eps_shrink, min_pts);
  r.enlarged = dbscan(dist, eps_enlarge, min_pts);
  r.shrink = per_point_overlap(r.base, r.shrunk);
  r.enlarge = per_point_overlap(r.base, r.enlarged);
  return r;
}

StabilityRatios stability_ratios(std::span<const Vector> features, double eps, double eps_shrink,
                                 double eps_enlarge, int min_pts) {
  if (features.empty()) fail(ErrorKind::Domain, "stability analysis needs at least one point");
  return stability_ratios(pairwise_distances(features), eps, eps_shrink, eps_enlarge, min_pts);
}

Thresholds compute_thresholds(std::span<const double> first_epoch_shrink_ratios,
                              std::span<const double> current_enlarge_ratios, double quantile) {
  if (first_epoch_shrink_ratios.empty() || current_enlarge_ratios.empty())
    fail(ErrorKind::Domain, "threshold statistics need non-empty ratio lists");
  if (!(quantile > 0.0 && quantile <= 1.0)) fail(ErrorKind::Domain, "quantile must lie in (0, 1]");
  std::vector<double> sorted(first_epoch_shrink_ratios.begin(), first_epoch_shrink_ratios.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  auto rank = static_cast<std::size_t>(std::ceil(quantile * n - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  Thresholds t;
  t.shrink_quantile_value = sorted[rank - 1];
  t.enlarge_max = *std::max_element(current_enlarge_ratios.begin(), current_enlarge_ratios.end());
  t.eta1 = t.shrink_quantile_value + t.enlarge_max;
  t.eta2 = t.shrink_quantile_value - t.enlarge_max;
  return t;
}

void write_reliability_csv(const ReliabilityReport& report, std::ostream& out) {
  out << "# eta1=" << format_double(report.eta1) << " eta2=" << format_double(report.eta2)
      << " eps=" << format_double(report.eps) << "\n";
  out << "index,ratio_shrink,ratio_enlarge,c1,c2,accepted\n";
  for (std::size_t i = 0; i < report.accepted.size(); ++i) {
    out << i << ',' << format_double(report.ratio_shrink[i]) << ',' << format_double(report.ratio_enlarge[i])
        << ',' << format_double(report.c1[i]) << ',' << format_double(report.c2[i]) << ','
        << (report.accepted[i] ? 1 : 0) << '\n';
  }
}

PseudoLabelResult generate_pseudo_labels(std::span<const Vector> features, const PseudoLabelConfig& config,
                                         FirstEpochRatios& first_epoch) {
  if (features.empty()) fail(ErrorKind::Domain, "pseudo labels need at least one feature");
  if (!(config.shrink_factor < 1.0 && config.enlarge_factor > 1.0 && config.shrink_factor > 0.0))
    fail(ErrorKind::Domain, "shrink factor must lie in (0,1) and enlarge factor above 1");
  const DistanceMatrix dist = pairwise_distances(features, config.threads);
  const double eps = config.eps > 0.0 ? config.eps : config.eps_scale * auto_eps(dist, config.min_pts);
  StabilityRatios ratios =
      stability_ratios(dist, eps, eps * config.shrink_factor, eps * config.enlarge_factor, config.min_pts);

  if (!first_epoch.shrink) first_epoch.shrink = ratios.shrink;
  const Thresholds eta = compute_thresholds(*first_epoch.shrink, ratios.enlarge, config.shrink_quantile);

  const std::size_t n = features.size();
  PseudoLabelResult out;
  auto& rep = out.report;
  rep.eta1 = eta.eta1;
  rep.eta2 = eta.eta2;
  rep.eps = eps;
  rep.ratio_shrink = ratios.shrink;
  rep.ratio_enlarge = ratios.enlarge;
  rep.c1.resize(n);
  rep.c2.resize(n);
  rep.accepted.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    rep.c1[i] = std::max(0.0, ratios.shrink[i] + ratios.enlarge[i] - eta.eta1);
    rep.c2[i] = std::max(0.0, ratios.shrink[i] - ratios.enlarge[i] - eta.eta2);
    rep.accepted[i] = rep.c1[i] > 0.0 && rep.c2[i] > 0.0;
  }

  const auto& base = ratios.base;
  auto keeps = [&](std::size_t i) {
    return base.labels[i] >= 0 && (!config.criteria_enabled || rep.accepted[i]);
  };
  std::vector<int> remap(base.num_clusters, -1);
  int next = 0;
  // Reliable clusters are numbered in order of their original cluster id.
  std::vector<char> has_member(base.num_clusters, 0);
  for (std::size_t i = 0; i < n; ++i)
    if (keeps(i)) has_member[base.labels[i]] = 1;
  for (int c = 0; c < base.num_clusters; ++c)
    if (has_member[c]) remap[c] = next++;

  auto& pl = out.labels;
  pl.num_clusters = next;
  pl.labels.resize(n);
  int singleton = next;
  for (std::size_t i = 0; i < n; ++i) pl.labels[i] = keeps(i) ? remap[base.labels[i]] : singleton++;
  pl.num_outliers = singleton - next;
  out.clusters = std::move(ratios.base);
  return out;
}

}  // namespace smcr
