#include "smcr/losses.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "smcr/error.hpp"

namespace smcr {

int HybridLabelSystem::source_class(int label) const {
  if (label < 0 || static_cast<std::size_t>(label) >= source_class_of_label.size() ||
      source_class_of_label[label] < 0)
    fail(ErrorKind::Lookup, "source label " + std::to_string(label) + " has no class");
  return source_class_of_label[label];
}

namespace {

Vector normalized_mean(std::span<const Vector> features, std::span<const std::size_t> members) {
  Vector mean(features[members.front()].size(), 0.0);
  for (std::size_t m : members)
    for (std::size_t d = 0; d < mean.size(); ++d) mean[d] += features[m][d];
  for (double& v : mean) v /= static_cast<double>(members.size());
  return l2_normalized(mean);
}

void check_class(const HybridLabelSystem& hls, int c) {
  if (c < 0 || static_cast<std::size_t>(c) >= hls.classes.size())
    fail(ErrorKind::Lookup, "class " + std::to_string(c) + " is not in the label system");
}

}  // namespace

HybridLabelSystem build_label_system(std::span<const Vector> source_features, std::span<const int> source_labels,
                                     int num_source_labels, std::span<const Vector> target_features,
                                     const PseudoLabels& pseudo) {
  if (source_features.size() != source_labels.size()) fail(ErrorKind::Shape, "source features/labels differ in length");
  if (target_features.size() != pseudo.labels.size()) fail(ErrorKind::Shape, "target features/labels differ in length");
  std::size_t dim = 0;
  if (!source_features.empty()) dim = source_features.front().size();
  if (!target_features.empty()) {
    if (dim != 0 && target_features.front().size() != dim) fail(ErrorKind::Shape, "source and target feature dims differ");
    dim = target_features.front().size();
  }

  std::vector<std::vector<std::size_t>> source_members(std::max(0, num_source_labels));
  for (std::size_t i = 0; i < source_labels.size(); ++i) {
    const int y = source_labels[i];
    if (y < 0 || y >= num_source_labels) fail(ErrorKind::Lookup, "source label " + std::to_string(y) + " out of range");
    source_members[y].push_back(i);
  }
  std::vector<std::vector<std::size_t>> target_members(pseudo.num_classes());
  for (std::size_t i = 0; i < pseudo.labels.size(); ++i) {
    const int y = pseudo.labels[i];
    if (y < 0 || y >= pseudo.num_classes()) fail(ErrorKind::Lookup, "pseudo label " + std::to_string(y) + " out of range");
    target_members[y].push_back(i);
  }

  HybridLabelSystem hls;
  hls.source_class_of_label.assign(source_members.size(), -1);
  for (std::size_t y = 0; y < source_members.size(); ++y) {
    if (source_members[y].empty()) {
      hls.warnings.push_back("source label " + std::to_string(y) + " has no samples; class excluded");
      continue;
    }
    const int id = static_cast<int>(hls.classes.size());
    hls.source_class_of_label[y] = id;
    hls.classes.push_back({id, ClassOrigin::SourceGroundTruth, normalized_mean(source_features, source_members[y]),
                           source_members[y]});
  }
  hls.num_source = static_cast<int>(hls.classes.size());
  for (std::size_t y = 0; y < target_members.size(); ++y) {
    if (target_members[y].empty()) {
      hls.warnings.push_back("pseudo label " + std::to_string(y) + " has no samples");
      continue;
    }
    const int id = static_cast<int>(hls.classes.size());
    const auto origin = pseudo.is_cluster_label(static_cast<int>(y)) ? ClassOrigin::TargetCluster
                                                                      : ClassOrigin::TargetSingleton;
    hls.classes.push_back({id, origin, normalized_mean(target_features, target_members[y]), target_members[y]});
  }
  hls.num_target = static_cast<int>(hls.classes.size()) - hls.num_source;
  (void)dim;
  return hls;
}

void update_prototypes(HybridLabelSystem& hls, std::span<const Vector> batch_features,
                       std::span<const int> batch_classes, double momentum) {
  if (batch_features.size() != batch_classes.size()) fail(ErrorKind::Shape, "batch features/classes differ in length");
  if (!(momentum >= 0.0 && momentum <= 1.0)) fail(ErrorKind::Domain, "prototype momentum must lie in [0, 1]");
  std::map<int, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < batch_classes.size(); ++i) {
    check_class(hls, batch_classes[i]);
    groups[batch_classes[i]].push_back(i);
  }
  for (const auto& [c, idx] : groups) {
    auto& proto = hls.classes[c].prototype;
    Vector mean(proto.size(), 0.0);
    for (std::size_t i : idx)
      for (std::size_t d = 0; d < mean.size(); ++d) mean[d] += batch_features[i][d];
    for (double& v : mean) v /= static_cast<double>(idx.size());
    for (std::size_t d = 0; d < proto.size(); ++d) mean[d] = momentum * proto[d] + (1.0 - momentum) * mean[d];
    proto = l2_normalized(mean);
  }
}

namespace {

// logits / tau and their log-sum-exp
double class_logits(std::span<const double> f, const HybridLabelSystem& hls, double tau, Vector& logits) {
  logits.resize(hls.classes.size());
  double top = -INFINITY;
  for (std::size_t j = 0; j < hls.classes.size(); ++j) {
    logits[j] = dot(f, hls.classes[j].prototype) / tau;
    top = std::max(top, logits[j]);
  }
  double sum = 0.0;
  for (double z : logits) sum += std::exp(z - top);
  return top + std::log(sum);
}

}  // namespace

Vector class_probabilities(std::span<const double> feature, const HybridLabelSystem& hls, double tau) {
  if (!(tau > 0.0)) fail(ErrorKind::Domain, "temperature must be positive");
  Vector logits;
  const double lse = class_logits(feature, hls, tau, logits);
  for (double& z : logits) z = std::exp(z - lse);
  return logits;
}

LossWithGrad joint_contrastive(std::span<const Vector> features, std::span<const int> classes,
                               const HybridLabelSystem& hls, double tau) {
  if (!(tau > 0.0)) fail(ErrorKind::Domain, "temperature must be positive");
  if (features.size() != classes.size()) fail(ErrorKind::Shape, "features/classes differ in length");
  if (hls.classes.empty()) fail(ErrorKind::Lookup, "label system is empty");
  LossWithGrad out;
  out.grad.resize(features.size());
  if (features.empty()) return out;
  const double inv_batch = 1.0 / static_cast<double>(features.size());
  Vector logits;
  for (std::size_t i = 0; i < features.size(); ++i) {
    check_class(hls, classes[i]);
    const auto& f = features[i];
    if (f.size() != hls.dim()) fail(ErrorKind::Shape, "feature dimension differs from prototypes");
    const double lse = class_logits(f, hls, tau, logits);
    out.loss += (lse - logits[classes[i]]) * inv_batch;
    Vector g(f.size(), 0.0);
    for (std::size_t j = 0; j < hls.classes.size(); ++j) {
      const double p = std::exp(logits[j] - lse) - (static_cast<int>(j) == classes[i] ? 1.0 : 0.0);
      if (p == 0.0) continue;
      const auto& proto = hls.classes[j].prototype;
      for (std::size_t d = 0; d < g.size(); ++d) g[d] += p * proto[d];
    }
    for (double& v : g) v *= inv_batch / tau;
    out.grad[i] = std::move(g);
  }
  return out;
}

double softmax_pair(double a, double b) {
  // exp(a) / (exp(a) + exp(b)) = 1 / (1 + exp(b - a))
  const double d = b - a;
  if (d >= 0.0) {
    const double e = std::exp(-d);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(d));
}

SoftTripletScore softmax_triplet_at(std::span<const Vector> features, std::size_t anchor, std::size_t positive,
                                    std::size_t negative) {
  const std::size_t n = features.size();
  if (anchor >= n || positive >= n || negative >= n) fail(ErrorKind::Shape, "triplet index out of range");
  SoftTripletScore s;
  s.anchor = anchor;
  s.positive = positive;
  s.negative = negative;
  s.d_pos = std::sqrt(squared_distance(features[anchor], features[positive]));
  s.d_neg = std::sqrt(squared_distance(features[anchor], features[negative]));
  s.score = softmax_pair(s.d_pos, s.d_neg);
  return s;
}

SoftTripletScore softmax_triplet(std::span<const Vector> features, std::span<const int> labels, std::size_t anchor) {
  if (features.size() != labels.size()) fail(ErrorKind::Shape, "features/labels differ in length");
  if (anchor >= features.size()) fail(ErrorKind::Shape, "anchor index out of range");
  std::size_t pos = features.size();
  std::size_t neg = features.size();
  double best_pos = -1.0;
  double best_neg = INFINITY;
  for (std::size_t j = 0; j < features.size(); ++j) {
    if (j == anchor) continue;
    const double d = squared_distance(features[anchor], features[j]);
    if (labels[j] == labels[anchor]) {
      if (d > best_pos) {
        best_pos = d;
        pos = j;
      }
    } else if (d < best_neg) {
      best_neg = d;
      neg = j;
    }
  }
  if (pos == features.size()) fail(ErrorKind::Mining, "anchor " + std::to_string(anchor) + " has no positive in the batch");
  if (neg == features.size()) fail(ErrorKind::Mining, "anchor " + std::to_string(anchor) + " has no negative in the batch");
  return softmax_triplet_at(features, anchor, pos, neg);
}

LossWithGrad collaborative_loss(std::span<const Vector> student_features,
                                std::span<const SoftTripletScore> student_scores,
                                std::span<const SoftTripletScore> teacher_scores, CollaborativeForm form) {
  if (student_scores.size() != teacher_scores.size()) fail(ErrorKind::Shape, "student/teacher score lists differ in length");
  LossWithGrad out;
  out.grad.assign(student_features.size(), Vector(student_features.empty() ? 0 : student_features.front().size(), 0.0));
  if (student_scores.empty()) return out;
  const double inv_n = 1.0 / static_cast<double>(student_scores.size());

  auto add_distance_grad = [&](std::size_t a, std::size_t b, double dist, double coeff) {
    // d|f_a - f_b| / d f_a = (f_a - f_b) / |f_a - f_b|; zero at coincident points
    if (coeff == 0.0 || dist <= 0.0) return;
    const auto& fa = student_features[a];
    const auto& fb = student_features[b];
    for (std::size_t d = 0; d < fa.size(); ++d) {
      const double g = coeff * (fa[d] - fb[d]) / dist;
      out.grad[a][d] += g;
      out.grad[b][d] -= g;
    }
  };

  for (std::size_t i = 0; i < student_scores.size(); ++i) {
    const auto& s = student_scores[i];
    const double t = teacher_scores[i].score;
    if (!(s.score > 0.0 && s.score < 1.0) || !(t > 0.0 && t < 1.0))
      fail(ErrorKind::Numeric, "triplet score outside (0, 1) at position " + std::to_string(i));
    double dl_du = 0.0;  // u = D+ - D-, s = sigmoid(u)
    if (form == CollaborativeForm::BinaryCrossEntropy) {
      out.loss -= inv_n * (t * std::log(s.score) + (1.0 - t) * std::log1p(-s.score));
      dl_du = inv_n * (s.score - t);
    } else {
      out.loss -= inv_n * s.score * std::log(t);
      dl_du = -inv_n * std::log(t) * s.score * (1.0 - s.score);
    }
    if (s.anchor >= student_features.size() || s.positive >= student_features.size() ||
        s.negative >= student_features.size())
      fail(ErrorKind::Shape, "score indices exceed the student feature list");
    add_distance_grad(s.anchor, s.positive, s.d_pos, dl_du);
    add_distance_grad(s.anchor, s.negative, s.d_neg, -dl_du);
  }
  return out;
}

double mean_binary_entropy(std::span<const SoftTripletScore> scores) {
  if (scores.empty()) return 0.0;
  double h = 0.0;
  for (const auto& s : scores) h -= s.score * std::log(s.score) + (1.0 - s.score) * std::log1p(-s.score);
  return h / static_cast<double>(scores.size());
}

double total_loss(double joint1, double joint2, double collaborative, double alpha, double beta) {
  return beta * collaborative + 2.0 * (1.0 - beta) * (alpha * joint1 + (1.0 - alpha) * joint2);
}

}  // namespace smcr
