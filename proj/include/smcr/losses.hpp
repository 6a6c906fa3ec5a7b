#pragma once

// Prototype memory over the hybrid (source ground-truth + target pseudo) class
// space, the joint contrastive loss, hardest-mined softmax-triplet scores and
// the collaborative loss between branches. Gradients are with respect to the
// encoder's normalized output features; prototypes are treated as constants.

#include <span>
#include <string>
#include <vector>

#include "smcr/clustering.hpp"
#include "smcr/numerics.hpp"

namespace smcr {

enum class ClassOrigin { SourceGroundTruth, TargetCluster, TargetSingleton };

struct HybridClass {
  int id = 0;
  ClassOrigin origin = ClassOrigin::SourceGroundTruth;
  Vector prototype;                  // unit norm
  std::vector<std::size_t> members;  // indices into the source or target collection
};

struct HybridLabelSystem {
  std::vector<HybridClass> classes;  // classes[i].id == i
  int num_source = 0;
  int num_target = 0;
  /// Class id of each source label (-1 when the label had no members).
  std::vector<int> source_class_of_label;
  std::vector<std::string> warnings;

  std::size_t size() const { return classes.size(); }
  std::size_t dim() const { return classes.empty() ? 0 : classes.front().prototype.size(); }
  int target_class(int pseudo_label) const { return num_source + pseudo_label; }
  /// Source label -> class id. Throws Lookup when the label has no class.
  int source_class(int label) const;
};

/// One class per non-empty source label in [0, num_source_labels) and one per
/// pseudo label. Prototypes start as the normalized member mean. Empty source
/// labels are skipped and recorded in `warnings`.
HybridLabelSystem build_label_system(std::span<const Vector> source_features, std::span<const int> source_labels,
                                     int num_source_labels, std::span<const Vector> target_features,
                                     const PseudoLabels& pseudo);

/// For each class present in the batch:
/// prototype <- normalize(m * prototype + (1 - m) * batch class mean).
void update_prototypes(HybridLabelSystem& hls, std::span<const Vector> batch_features,
                       std::span<const int> batch_classes, double momentum);

struct LossWithGrad {
  double loss = 0.0;
  std::vector<Vector> grad;  // d loss / d feature, one per input feature
};

/// Mean over the batch of -log softmax(<f_i, p_j> / tau)[class_i], softmax over
/// every class of the label system.
LossWithGrad joint_contrastive(std::span<const Vector> features, std::span<const int> classes,
                               const HybridLabelSystem& hls, double tau);

/// Class probabilities for one feature (used to check normalization).
Vector class_probabilities(std::span<const double> feature, const HybridLabelSystem& hls, double tau);

struct SoftTripletScore {
  double score = 0.5;  // exp(D+) / (exp(D+) + exp(D-))
  std::size_t anchor = 0;
  std::size_t positive = 0;
  std::size_t negative = 0;
  double d_pos = 0.0;
  double d_neg = 0.0;
};

/// exp(a) / (exp(a) + exp(b)) evaluated without overflow.
double softmax_pair(double a, double b);

/// Hardest positive (largest distance, same label, other position) and
/// hardest negative (smallest distance, different label). Ties resolve to the
/// lowest index. Throws Mining when either is missing.
SoftTripletScore softmax_triplet(std::span<const Vector> features, std::span<const int> labels,
                                 std::size_t anchor);
/// Score at fixed positive/negative indices.
SoftTripletScore softmax_triplet_at(std::span<const Vector> features, std::size_t anchor, std::size_t positive,
                                    std::size_t negative);

/// Which way round the teacher and student enter the collaborative loss.
enum class CollaborativeForm {
  /// -mean[t log s + (1 - t) log(1 - s)]
  BinaryCrossEntropy,
  /// -mean[s log t], the literal printed orientation
  Verbatim,
};

/// Loss over aligned student/teacher scores plus its gradient with respect to
/// the student features the scores were mined from (teacher scores are
/// constants). Throws Numeric when a score is outside (0, 1).
LossWithGrad collaborative_loss(std::span<const Vector> student_features,
                                std::span<const SoftTripletScore> student_scores,
                                std::span<const SoftTripletScore> teacher_scores,
                                CollaborativeForm form = CollaborativeForm::BinaryCrossEntropy);

/// Binary entropy of the teacher scores, averaged; the lower bound of the
/// cross-entropy form.
double mean_binary_entropy(std::span<const SoftTripletScore> scores);

/// beta * L_col + 2 (1 - beta) (alpha * L_joint1 + (1 - alpha) * L_joint2)
double total_loss(double joint1, double joint2, double collaborative, double alpha, double beta);

}  // namespace smcr
