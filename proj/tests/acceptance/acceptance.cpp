// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
// Usage: smcr_acceptance [--only <name>]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "smcr/clustering.hpp"
#include "smcr/config.hpp"
#include "smcr/eval.hpp"
#include "smcr/losses.hpp"
#include "smcr/numerics.hpp"
#include "smcr/pipeline.hpp"
#include "unit/scratch_dir.hpp"

using namespace smcr;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

Vector random_vector(Rng& rng, std::size_t dim) {
  Vector v(dim);
  for (double& x : v) x = rng.normal();
  return v;
}

Vector unit(Rng& rng, std::size_t dim) { return l2_normalized(random_vector(rng, dim)); }

// ---------------------------------------------------------------------------
// Gradients

struct GradStats {
  std::size_t checked = 0;
  std::size_t excluded = 0;
  std::size_t bad = 0;
  double worst = 0.0;

  void add(double analytic, double numeric) {
    const double e = oracle::relative_error(analytic, numeric);
    ++checked;
    worst = std::max(worst, e);
    if (!(e < 1e-4)) ++bad;
  }
};

std::vector<double> flatten(EncoderParams p) {
  std::vector<double> out;
  for_each_parameter(p, [&](double& v) { out.push_back(v); });
  return out;
}

// Sum over the batch of encode_backward(grad_i), i.e. the parameter gradient
// of a loss whose feature gradients are `feature_grads`.
EncoderParams chain(const EncoderParams& p, const std::vector<Vector>& xs, const std::vector<Vector>& feature_grads) {
  EncoderParams g = zeros_like(p);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const Encoded e = encode(p, xs[i]);
    encode_backward_accumulate(p, e.cache, feature_grads[i], 1.0, g);
  }
  return g;
}

std::vector<Vector> encode_all(const EncoderParams& p, const std::vector<Vector>& xs) {
  std::vector<Vector> f;
  for (const auto& x : xs) f.push_back(encode_feature(p, x));
  return f;
}

bool same_mining(const std::vector<SoftTripletScore>& a, const std::vector<SoftTripletScore>& b) {
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i].positive != b[i].positive || a[i].negative != b[i].negative) return false;
  return true;
}

Outcome gradient_suite() {
  const auto t0 = Clock::now();
  GradStats enc, joint, col;
  const int configs = 120;
  for (int c = 0; c < configs; ++c) {
    Rng rng(1000 + c);
    const std::vector<std::size_t> dims{2 + rng.below(7), 2 + rng.below(7), 2 + rng.below(7)};
    EncoderParams p = init_encoder(dims, 7000 + c);
    const std::size_t classes = 3 + rng.below(4);
    const std::size_t out = dims.back();

    // encode: L = <E(x), g>
    {
      const Vector x = random_vector(rng, dims[0]);
      const Vector g = random_vector(rng, out);
      const auto analytic = flatten(encode_backward(p, encode(p, x).cache, g));
      std::size_t k = 0;
      for_each_parameter(p, [&](double& w) {
        enc.add(analytic[k++], oracle::central_difference([&] { return dot(encode_feature(p, x), g); }, w));
      });
    }

    // joint contrastive, through the features and through the encoder
    {
      std::vector<Vector> protos;
      std::vector<int> proto_labels;
      for (std::size_t k = 0; k < classes; ++k) {
        protos.push_back(unit(rng, out));
        proto_labels.push_back(static_cast<int>(k));
      }
      const HybridLabelSystem hls =
          build_label_system(protos, proto_labels, static_cast<int>(classes), {}, PseudoLabels{});
      const double tau = rng.uniform(0.05, 1.0);
      std::vector<Vector> xs;
      std::vector<int> labels;
      for (int i = 0; i < 5; ++i) {
        xs.push_back(random_vector(rng, dims[0]));
        labels.push_back(static_cast<int>(rng.below(classes)));
      }
      std::vector<Vector> f = encode_all(p, xs);
      const LossWithGrad r = joint_contrastive(f, labels, hls, tau);
      for (std::size_t i = 0; i < f.size(); ++i)
        for (std::size_t d = 0; d < out; ++d)
          joint.add(r.grad[i][d],
                    oracle::central_difference([&] { return joint_contrastive(f, labels, hls, tau).loss; }, f[i][d]));
      const auto analytic = flatten(chain(p, xs, r.grad));
      std::size_t k = 0;
      for_each_parameter(p, [&](double& w) {
        joint.add(analytic[k++], oracle::central_difference(
                                     [&] { return joint_contrastive(encode_all(p, xs), labels, hls, tau).loss; }, w));
      });
    }

    // collaborative loss with re-mining; coordinates whose perturbation changes
    // the mined positive or negative sit on an argmax boundary and are skipped
    {
      std::vector<Vector> xs;
      std::vector<int> labels;
      for (std::size_t k = 0; k < classes; ++k)
        for (int s = 0; s < 2; ++s) {
          xs.push_back(random_vector(rng, dims[0]));
          labels.push_back(static_cast<int>(k));
        }
      auto mine = [&](const std::vector<Vector>& f) {
        std::vector<SoftTripletScore> s;
        for (std::size_t a = 0; a < f.size(); ++a) s.push_back(softmax_triplet(f, labels, a));
        return s;
      };
      const std::vector<Vector> f0 = encode_all(p, xs);
      const auto student = mine(f0);
      std::vector<SoftTripletScore> teacher = student;
      for (auto& t : teacher) t.score = rng.uniform(0.05, 0.95);
      for (auto form : {CollaborativeForm::BinaryCrossEntropy, CollaborativeForm::Verbatim}) {
        const LossWithGrad r = collaborative_loss(f0, student, teacher, form);
        // Mining must be identical at every stencil point.
        auto guarded = [&](const std::function<std::vector<Vector>()>& feats, double& target, double analytic) {
          const double saved = target;
          bool stable = true;
          for (double s : {2e-5, 1e-5, -1e-5, -2e-5}) {
            target = saved + s;
            stable = stable && same_mining(mine(feats()), student);
          }
          target = saved;
          if (!stable) {
            ++col.excluded;
            return;
          }
          col.add(analytic, oracle::central_difference4(
                                [&] {
                                  const auto f = feats();
                                  return collaborative_loss(f, mine(f), teacher, form).loss;
                                },
                                target));
        };
        std::vector<Vector> f = f0;
        for (std::size_t i = 0; i < f.size(); ++i)
          for (std::size_t d = 0; d < out; ++d) guarded([&] { return f; }, f[i][d], r.grad[i][d]);
        const auto analytic = flatten(chain(p, xs, r.grad));
        std::size_t k = 0;
        for_each_parameter(p, [&](double& w) { guarded([&] { return encode_all(p, xs); }, w, analytic[k++]); });
      }
    }
  }
  const double elapsed = seconds_since(t0);
  std::ostringstream d;
  d << configs << " configs; encode " << enc.checked << " entries (max rel err " << enc.worst << "), joint "
    << joint.checked << " (" << joint.worst << "), collaborative " << col.checked << " (" << col.worst << ", "
    << col.excluded << " at mining boundaries); " << elapsed << " s";
  return {enc.bad + joint.bad + col.bad == 0 && col.checked > 0 && elapsed < 30.0, d.str()};
}

// ---------------------------------------------------------------------------
// DBSCAN

Outcome dbscan_oracle() {
  const auto t0 = Clock::now();
  int agree = 0;
  int with_border = 0;
  const int instances = 100;
  for (int t = 0; t < instances; ++t) {
    Rng rng(500 + t);
    const std::size_t n = 1 + rng.below(64);
    const std::size_t dim = 1 + rng.below(4);
    const std::size_t blobs = 1 + rng.below(5);
    std::vector<Vector> centers;
    for (std::size_t b = 0; b < blobs; ++b) {
      Vector c = random_vector(rng, dim);
      for (double& v : c) v *= 4.0;
      centers.push_back(c);
    }
    std::vector<Vector> pts;
    for (std::size_t i = 0; i < n; ++i) {
      Vector x = centers[rng.below(blobs)];
      const double spread = rng.uniform(0.2, 1.5);
      for (double& v : x) v += spread * rng.normal();
      pts.push_back(x);
    }
    const double eps = rng.uniform(0.3, 1.5);
    const int min_pts = 1 + static_cast<int>(rng.below(6));
    const auto got = dbscan(pts, eps, min_pts);
    const auto want = oracle::dbscan_labels(pts, eps, min_pts);
    const auto ref = oracle::dbscan_reference(pts, eps, min_pts);
    for (const auto& o : ref.border_options) with_border += o.size() > 1;
    agree += oracle::same_partition(got.labels, want) &&
             got.num_clusters == static_cast<int>(ref.core_components.size());
  }
  const double elapsed = seconds_since(t0);
  std::ostringstream d;
  d << agree << "/" << instances << " instances match (" << with_border << " ambiguous border points); " << elapsed
    << " s";
  return {agree == instances && elapsed < 10.0, d.str()};
}

// ---------------------------------------------------------------------------
// Reliability traces on 1-D point sets

struct Trace {
  std::string name;
  std::vector<double> points;
  double eps;
  int min_pts;
  double quantile;
  std::optional<std::vector<double>> preset_shrink;
  std::vector<double> rs, re, c1, c2;
  std::vector<char> accepted;
  std::vector<int> labels;
  int clusters, outliers;
};

std::vector<Trace> hand_traces() {
  std::vector<Trace> t;
  auto c = [](double v) { return std::max(0.0, v); };
  {
    // Two perfectly stable clusters; the first epoch sets q = 1, so eta2 = 0
    // and c2 = 0 everywhere.
    const double e1 = 1.0 + 1.0, e2 = 1.0 - 1.0;
    const double c1 = c(1.0 + 1.0 - e1), c2 = c(1.0 - 1.0 - e2);
    t.push_back({"stable pair, first epoch", {0, .1, .2, .3, 10, 10.1, 10.2, 10.3}, 1.0, 2, 0.1, std::nullopt,
                 std::vector<double>(8, 1.0), std::vector<double>(8, 1.0), std::vector<double>(8, c1),
                 std::vector<double>(8, c2), std::vector<char>(8, 0), {0, 1, 2, 3, 4, 5, 6, 7}, 0, 8});
  }
  {
    // Same points, first-epoch shrink ratios {0.5}: q = 0.5, m = 1.
    const double e1 = 0.5 + 1.0, e2 = 0.5 - 1.0;
    const double c1 = c(1.0 + 1.0 - e1), c2 = c(1.0 - 1.0 - e2);
    t.push_back({"stable pair, preset ratios", {0, .1, .2, .3, 10, 10.1, 10.2, 10.3}, 1.0, 2, 0.1,
                 std::vector<double>{0.5}, std::vector<double>(8, 1.0), std::vector<double>(8, 1.0),
                 std::vector<double>(8, c1), std::vector<double>(8, c2), std::vector<char>(8, 1),
                 {0, 0, 0, 0, 1, 1, 1, 1}, 2, 0});
  }
  {
    // {0, 1} splits when eps shrinks (ratio 1/2); 5 is noise; the 10s are stable.
    // Sorted first-epoch ratios .5 .5 1 1 1 1, nearest rank ceil(0.6) = 1 -> q = .5.
    const double e1 = 0.5 + 1.0, e2 = 0.5 - 1.0;
    const double pair_c1 = c(0.5 + 1.0 - e1), pair_c2 = c(0.5 - 1.0 - e2);
    const double s_c1 = c(1.0 + 1.0 - e1), s_c2 = c(1.0 - 1.0 - e2);
    t.push_back({"splitting pair and a noise point", {0, 1.0, 5, 10, 10.2, 10.4}, 1.05, 2, 0.1, std::nullopt,
                 {0.5, 0.5, 1, 1, 1, 1}, {1, 1, 1, 1, 1, 1}, {pair_c1, pair_c1, s_c1, s_c1, s_c1, s_c1},
                 {pair_c2, pair_c2, s_c2, s_c2, s_c2, s_c2}, {0, 0, 1, 1, 1, 1}, {1, 2, 3, 0, 0, 0}, 1, 3});
  }
  {
    // A = {0, .4} and B = {1.45, 1.85} merge at 1.1 eps (gap 1.05): enlarge ratio
    // 2/4. C is stable. Preset q = .3, m = 1.
    const double e1 = 0.3 + 1.0, e2 = 0.3 - 1.0;
    const double ab_c1 = c(1.0 + 0.5 - e1), ab_c2 = c(1.0 - 0.5 - e2);
    const double c_c1 = c(1.0 + 1.0 - e1), c_c2 = c(1.0 - 1.0 - e2);
    t.push_back({"merging neighbours", {0, .4, 1.45, 1.85, 10, 10.3, 10.6}, 1.0, 2, 0.1, std::vector<double>{0.3},
                 {1, 1, 1, 1, 1, 1, 1}, {0.5, 0.5, 0.5, 0.5, 1, 1, 1},
                 {ab_c1, ab_c1, ab_c1, ab_c1, c_c1, c_c1, c_c1}, {ab_c2, ab_c2, ab_c2, ab_c2, c_c2, c_c2, c_c2},
                 {1, 1, 1, 1, 1, 1, 1}, {0, 0, 1, 1, 2, 2, 2}, 3, 0});
  }
  {
    // 1.55 is a border point of {0, .3, .6} at eps 1 and noise at 0.9:
    // members keep 3/4, the border point 1/4. Sorted ratios .25 .75 .75 .75 1 1 1,
    // rank ceil(3.5) = 4 -> q = .75.
    const double e1 = 0.75 + 1.0, e2 = 0.75 - 1.0;
    const double a_c1 = c(0.75 + 1.0 - e1), a_c2 = c(0.75 - 1.0 - e2);
    const double p_c1 = c(0.25 + 1.0 - e1), p_c2 = c(0.25 - 1.0 - e2);
    const double s_c1 = c(1.0 + 1.0 - e1), s_c2 = c(1.0 - 1.0 - e2);
    t.push_back({"border point", {0, .3, .6, 1.55, 10, 10.3, 10.6}, 1.0, 3, 0.5, std::nullopt,
                 {0.75, 0.75, 0.75, 0.25, 1, 1, 1}, {1, 1, 1, 1, 1, 1, 1},
                 {a_c1, a_c1, a_c1, p_c1, s_c1, s_c1, s_c1}, {a_c2, a_c2, a_c2, p_c2, s_c2, s_c2, s_c2},
                 {0, 0, 0, 0, 1, 1, 1}, {1, 2, 3, 4, 0, 0, 0}, 1, 4});
  }
  return t;
}

bool label_count_holds(const PseudoLabels& p) {
  const std::set<int> distinct(p.labels.begin(), p.labels.end());
  if (static_cast<int>(distinct.size()) != p.num_classes()) return false;
  return std::all_of(p.labels.begin(), p.labels.end(), [&](int l) { return l >= 0 && l < p.num_classes(); });
}

Outcome reliability_traces() {
  int exact = 0;
  std::ostringstream d;
  const auto traces = hand_traces();
  for (const auto& t : traces) {
    std::vector<Vector> pts;
    for (double v : t.points) pts.push_back({v});
    PseudoLabelConfig cfg;
    cfg.eps = t.eps;
    cfg.min_pts = t.min_pts;
    cfg.shrink_quantile = t.quantile;
    FirstEpochRatios first;
    first.shrink = t.preset_shrink;
    const auto r = generate_pseudo_labels(pts, cfg, first);
    const bool ok = r.report.ratio_shrink == t.rs && r.report.ratio_enlarge == t.re && r.report.c1 == t.c1 &&
                    r.report.c2 == t.c2 && r.report.accepted == t.accepted && r.labels.labels == t.labels &&
                    r.labels.num_clusters == t.clusters && r.labels.num_outliers == t.outliers &&
                    label_count_holds(r.labels);
    exact += ok;
    if (!ok) d << "[mismatch: " << t.name << "] ";
  }
  // The label count identity on random inputs, criteria on and off.
  int counted = 0;
  const int random_cases = 60;
  for (int k = 0; k < random_cases; ++k) {
    Rng rng(90 + k);
    std::vector<Vector> pts;
    const std::size_t n = 2 + rng.below(40);
    const std::size_t dim = 1 + rng.below(3);
    for (std::size_t i = 0; i < n; ++i) pts.push_back(random_vector(rng, dim));
    PseudoLabelConfig cfg;
    cfg.eps_scale = rng.uniform(0.5, 1.5);
    cfg.min_pts = 1 + static_cast<int>(rng.below(4));
    cfg.criteria_enabled = k % 2 == 0;
    cfg.shrink_quantile = rng.uniform(0.05, 0.95);
    FirstEpochRatios first;
    const auto r1 = generate_pseudo_labels(pts, cfg, first);
    const auto r2 = generate_pseudo_labels(pts, cfg, first);
    counted += label_count_holds(r1.labels) && label_count_holds(r2.labels) &&
               static_cast<int>(r1.labels.labels.size()) == static_cast<int>(n);
  }
  d << exact << "/" << traces.size() << " traces exact; label count identity on " << counted << "/" << random_cases
    << " random inputs";
  return {exact == static_cast<int>(traces.size()) && counted == random_cases, d.str()};
}

// ---------------------------------------------------------------------------
// Retrieval metrics

Outcome evaluation_oracle() {
  double worst = 0.0;
  bool monotone = true;
  bool invariant = true;
  const int instances = 50;
  for (int t = 0; t < instances; ++t) {
    Rng rng(300 + t);
    const std::size_t dim = 2 + rng.below(5);
    const int ids = 2 + static_cast<int>(rng.below(6));
    RetrievalSet q, g;
    auto fill = [&](RetrievalSet& s, std::size_t n) {
      for (std::size_t i = 0; i < n; ++i) {
        // Occasional exact duplicates exercise the tie rule.
        if (!s.features.empty() && rng.uniform() < 0.15)
          s.features.push_back(s.features[rng.below(s.features.size())]);
        else
          s.features.push_back(random_vector(rng, dim));
        s.identities.push_back(static_cast<int>(rng.below(ids)));
        s.cameras.push_back(static_cast<int>(rng.below(2)));
      }
    };
    fill(q, 3 + rng.below(10));
    fill(g, 5 + rng.below(30));
    oracle::Gallery og{g.features, g.identities, g.cameras};

    double ap_sum = 0.0;
    std::size_t evaluated = 0;
    std::vector<double> hits(10, 0.0);
    for (std::size_t i = 0; i < q.size(); ++i) {
      const oracle::Query oq{q.features[i], q.identities[i], q.cameras[i]};
      const auto ap = oracle::average_precision(oq, og);
      if (!ap) continue;
      ++evaluated;
      ap_sum += *ap;
      const std::size_t first = *oracle::first_hit(oq, og);
      for (std::size_t k = first; k <= 10; ++k) hits[k - 1] += 1.0;
    }
    if (evaluated == 0) continue;
    const double want_map = ap_sum / static_cast<double>(evaluated);
    worst = std::max(worst, std::abs(mean_ap(q, g) - want_map));
    double prev = 0.0;
    for (std::size_t k = 1; k <= 10; ++k) {
      const double got = cmc(q, g, k);
      worst = std::max(worst, std::abs(got - hits[k - 1] / static_cast<double>(evaluated)));
      monotone = monotone && got >= prev;
      prev = got;
    }
    // Positive power-of-two rescaling of any vector is exact in floating point,
    // so cosine rankings must not move at all.
    RetrievalSet qs = q, gs = g;
    for (auto& f : qs.features) {
      const double s = std::ldexp(1.0, static_cast<int>(rng.below(9)) - 4);
      for (double& v : f) v *= s;
    }
    for (auto& f : gs.features) {
      const double s = std::ldexp(1.0, static_cast<int>(rng.below(9)) - 4);
      for (double& v : f) v *= s;
    }
    for (std::size_t i = 0; i < q.size(); ++i)
      invariant = invariant && rank_gallery(q.features[i], q.identities[i], q.cameras[i], g) ==
                                   rank_gallery(qs.features[i], qs.identities[i], qs.cameras[i], gs);
    invariant = invariant && mean_ap(q, g) == mean_ap(qs, gs);
  }
  std::ostringstream d;
  d << instances << " instances; max |impl - oracle| " << worst << "; CMC monotone " << (monotone ? "yes" : "no")
    << "; rescaling invariant " << (invariant ? "yes" : "no");
  return {worst <= 1e-12 && monotone && invariant, d.str()};
}

// ---------------------------------------------------------------------------
// Momentum and fusion

EncoderParams scalar_encoder(double w, double b) {
  EncoderParams p;
  p.layers.push_back({Matrix(1, 1, w), Vector{b}});
  return p;
}

BranchState hand_branch(BranchKind kind, const EncoderParams& enc, const std::vector<Vector>& feats,
                        const std::vector<int>& labels, int clusters) {
  BranchState b = BranchState::start(kind, enc, 0);
  PseudoLabels p;
  p.labels = labels;
  p.num_clusters = clusters;
  b.label_system = build_label_system({}, {}, 0, feats, p);
  return b;
}

Outcome momentum_and_fusion() {
  std::ostringstream d;
  // lambda = 0 copies theta exactly.
  bool copy = true;
  for (int t = 0; t < 20; ++t) {
    const std::vector<std::size_t> dims{3, 5, 2};
    const EncoderParams prev = init_encoder(dims, 40 + t);
    const EncoderParams theta = init_encoder(dims, 80 + t);
    copy = copy && momentum_update(MomentumParams::start(prev), theta, 0.0).params == theta;
  }
  // Two steps at 0.9 from A = 1 toward theta = 0.
  MomentumParams a = MomentumParams::start(scalar_encoder(1.0, 1.0));
  const EncoderParams zero = scalar_encoder(0.0, 0.0);
  a = momentum_update(momentum_update(a, zero, 0.9), zero, 0.9);
  const bool two_step = a.params.layers[0].weight(0, 0) == 0.81 && a.params.layers[0].bias[0] == 0.81;

  // Fusion at the endpoints: scores depend on one branch only and equal its
  // cosine scores against that branch's prototypes.
  Rng rng(12);
  bool endpoints = true;
  for (int t = 0; t < 20; ++t) {
    const std::size_t dim = 3;
    std::vector<Vector> feats;
    std::vector<int> l1, l2;
    for (int i = 0; i < 12; ++i) {
      feats.push_back(unit(rng, dim));
      l1.push_back(i / 4);
      l2.push_back(2 - i / 4);
    }
    const std::vector<std::size_t> dims{4, 6, dim};
    const BranchState b1 = hand_branch(BranchKind::Dthr, init_encoder(dims, 1 + t), feats, l1, 3);
    const BranchState b2 = hand_branch(BranchKind::Rihr, init_encoder(dims, 100 + t), feats, l2, 3);
    BranchState b1_other = b1, b2_other = b2;
    b1_other.encoder = init_encoder(dims, 200 + t);
    b2_other.encoder = init_encoder(dims, 300 + t);
    const Vector x = random_vector(rng, 4);
    const Vector only1 = fuse_predict(b1, b2, x, 1.0);
    const Vector only2 = fuse_predict(b1, b2, x, 0.0);
    endpoints = endpoints && only1 == fuse_predict(b1, b2_other, x, 1.0) && only2 == fuse_predict(b1_other, b2, x, 0.0);
    const Vector f1 = encode_feature(b1.encoder, x);
    const Vector f2 = encode_feature(b2.encoder, x);
    for (std::size_t k = 0; k < 3; ++k) {
      endpoints = endpoints && std::abs(only1[k] - oracle::cosine(f1, b1.label_system.classes[k].prototype)) < 1e-15;
      // branch-1 cluster k holds samples 4k..4k+3, which branch 2 calls 2 - k
      endpoints =
          endpoints && std::abs(only2[k] - oracle::cosine(f2, b2.label_system.classes[2 - k].prototype)) < 1e-15;
    }
  }
  d << "lambda=0 copy " << (copy ? "exact" : "differs") << "; two steps at 0.9 -> " << a.params.layers[0].weight(0, 0)
    << "; fusion endpoints " << (endpoints ? "single-branch" : "mixed");
  return {copy && two_step && endpoints, d.str()};
}

// ---------------------------------------------------------------------------
// Toy benchmark

struct SeedResult {
  double source_only = 0.0;
  double col_fused = 0.0;
  double ind_dthr = 0.0;
  double ind_rihr = 0.0;
  double no_pretrain = 0.0;
  double purity_criteria = 0.0;
  double purity_no_criteria = 0.0;
};

double final_purity(const RunReport& r) {
  const auto& e = r.epochs.back();
  return 0.5 * (e.dthr.purity + e.rihr.purity);
}

SeedResult run_seed(const DomainSpecSet& clean, const DomainSpecSet& noisy, TrainConfig cfg, std::uint64_t seed) {
  cfg.seed = seed;
  SeedResult out;
  {
    const DomainSpecSet s = reseed(clean, seed);
    const DomainDataset syn = generate_domain(s.synthetic);
    const DomainDataset src = generate_domain(s.source);
    const DomainDataset tgt = generate_domain(s.target);
    const DomainDataset unlabeled = strip_labels(tgt);
    out.source_only = evaluate_encoder(source_only_pretrain(src, cfg), tgt, "m").at("m_map");
    const EncoderParams pre = synthetic_pretrain(syn, src, cfg);

    const AdaptResult col = adapt(pre, src, unlabeled, cfg);
    out.col_fused = evaluate_model(col.dthr.encoder, col.rihr.encoder, tgt, cfg.alpha).at("fused_map");

    TrainConfig ind = cfg;
    ind.mode = TrainMode::Independent;
    const AdaptResult r = adapt(pre, src, unlabeled, ind);
    const auto mi = evaluate_model(r.dthr.encoder, r.rihr.encoder, tgt, cfg.alpha);
    out.ind_dthr = mi.at("dthr_map");
    out.ind_rihr = mi.at("rihr_map");

    const AdaptResult np = adapt(initial_encoder(src.dim, cfg), src, unlabeled, cfg);
    out.no_pretrain = evaluate_model(np.dthr.encoder, np.rihr.encoder, tgt, cfg.alpha).at("fused_map");
  }
  {
    const DomainSpecSet s = reseed(noisy, seed);
    const DomainDataset syn = generate_domain(s.synthetic);
    const DomainDataset src = generate_domain(s.source);
    const DomainDataset tgt = generate_domain(s.target);
    const DomainDataset unlabeled = strip_labels(tgt);
    const PurityAuditor auditor(identity_labels(tgt));
    const EncoderParams pre = synthetic_pretrain(syn, src, cfg);
    out.purity_criteria = final_purity(adapt(pre, src, unlabeled, cfg, &auditor).report);
    TrainConfig off = cfg;
    off.criteria_enabled = false;
    out.purity_no_criteria = final_purity(adapt(pre, src, unlabeled, off, &auditor).report);
  }
  return out;
}

Outcome toy_trend() {
  const auto t0 = Clock::now();
  const fs::path dir = SMCR_CONFIG_DIR;
  const DomainSpecSet clean = parse_domain_specs(KeyValues::load(dir / "toy_spec.txt"));
  const DomainSpecSet noisy = parse_domain_specs(KeyValues::load(dir / "toy_spec_noisy.txt"));
  const TrainConfig cfg = load_experiment_config(dir / "toy_experiment.txt").train;
  int a = 0, b = 0, c = 0, dd = 0;
  std::ostringstream d;
  for (std::uint64_t seed : {1, 2, 3}) {
    const SeedResult r = run_seed(clean, noisy, cfg, seed);
    const bool ra = r.col_fused >= r.source_only + 0.10;
    const bool rb = r.col_fused >= r.ind_dthr && r.col_fused >= r.ind_rihr;
    const bool rc = r.purity_criteria >= r.purity_no_criteria;
    const bool rd = r.col_fused >= r.no_pretrain;
    a += ra;
    b += rb;
    c += rc;
    dd += rd;
    char line[320];
    std::snprintf(line, sizeof line,
                  "    seed %llu: source-only %.3f, col fused %.3f, ind %.3f/%.3f, no-pretrain %.3f, noisy purity "
                  "%.3f vs %.3f without criteria [a%c b%c c%c d%c]\n",
                  static_cast<unsigned long long>(seed), r.source_only, r.col_fused, r.ind_dthr, r.ind_rihr,
                  r.no_pretrain, r.purity_criteria, r.purity_no_criteria, ra ? '+' : '-', rb ? '+' : '-',
                  rc ? '+' : '-', rd ? '+' : '-');
    std::cout << line << std::flush;
  }
  const double elapsed = seconds_since(t0);
  d << "seeds passing: (a) " << a << "/3, (b) " << b << "/3, (c) " << c << "/3, (d) " << dd << "/3; " << elapsed
    << " s";
  return {a >= 2 && b >= 2 && c >= 2 && dd >= 2 && elapsed < 900.0, d.str()};
}

// ---------------------------------------------------------------------------
// Determinism of the adapt command

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string("\"") + SMCR_CLI_PATH + "\" " + args + " > /dev/null 2>&1";
  return std::system(cmd.c_str());
}

Outcome adapt_determinism() {
  ScratchDir work("acceptance_determinism");
  const fs::path cfg_dir = work / "configs";
  fs::create_directories(cfg_dir);
  fs::copy_file(fs::path(SMCR_CONFIG_DIR) / "toy_experiment.txt", cfg_dir / "toy_experiment.txt");
  const std::string cfg = "--config \"" + (cfg_dir / "toy_experiment.txt").string() + "\"";
  const std::string data = (work / "data").string();
  bool ok = run_cli("gen-data --config \"" + (fs::path(SMCR_CONFIG_DIR) / "toy_spec.txt").string() + "\" --out \"" +
                    data + "\"") == 0;
  ok = ok && run_cli("pretrain " + cfg + " --out \"" + (work / "run1").string() + "\"") == 0;
  fs::create_directories(work / "run2");
  if (ok) fs::copy_file(work / "run1" / "pretrained_encoder.txt", work / "run2" / "pretrained_encoder.txt");
  ok = ok && run_cli("adapt " + cfg + " --out \"" + (work / "run1").string() + "\"") == 0;
  ok = ok && run_cli("adapt " + cfg + " --out \"" + (work / "run2").string() + "\"") == 0;
  if (!ok) return {false, "a CLI step failed"};
  const std::string r1 = slurp(work / "run1" / "run_report.csv");
  const std::string r2 = slurp(work / "run2" / "run_report.csv");
  std::ostringstream d;
  d << "run_report.csv " << r1.size() << " bytes, " << (r1 == r2 ? "identical" : "differs") << " across two runs";
  return {!r1.empty() && r1 == r2, d.str()};
}

}  // namespace

int main(int argc, char** argv) {
  std::string only;
  if (argc == 3 && std::string(argv[1]) == "--only") only = argv[2];
  const std::vector<std::pair<std::string, std::function<Outcome()>>> checks{
      {"gradients", gradient_suite},     {"dbscan", dbscan_oracle},       {"reliability_traces", reliability_traces},
      {"evaluation", evaluation_oracle}, {"momentum_fusion", momentum_and_fusion},
      {"toy_trend", toy_trend},          {"determinism", adapt_determinism}};
  int failed = 0;
  for (const auto& [name, check] : checks) {
    if (!only.empty() && name != only) continue;
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
