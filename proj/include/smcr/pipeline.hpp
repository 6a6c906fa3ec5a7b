#pragma once

// End-to-end orchestration: synthetic pretraining, per-epoch pseudo-label
// regeneration, the two refinement branches (translated-source DTHR and
// raw-source RIHR), their collaborative coupling through momentum teachers,
// and fused inference.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "smcr/clustering.hpp"
#include "smcr/data.hpp"
#include "smcr/losses.hpp"
#include "smcr/numerics.hpp"
#include "smcr/translator.hpp"

namespace smcr {

enum class BranchKind { Dthr, Rihr };
enum class TrainMode { Independent, Collaborative };

std::string_view to_string(BranchKind b);
std::string_view to_string(TrainMode m);

struct TrainConfig {
  int epochs = 50;
  int pretrain_epochs = 50;
  int batch_p = 16;
  int batch_k = 4;
  double base_lr = 0.00035;
  double weight_decay = 0.0005;
  double momentum_lambda = 0.999;
  double alpha = 0.5;
  double beta = 0.01;
  double tau = 0.05;
  double prototype_momentum = 0.2;
  TrainMode mode = TrainMode::Collaborative;
  bool criteria_enabled = true;
  std::uint64_t seed = 1;
  std::vector<std::size_t> hidden_dims{128};
  std::size_t output_dim = 64;
  PseudoLabelConfig clustering;
  double translator_noise = 0.0;
  CollaborativeForm collaborative_form = CollaborativeForm::BinaryCrossEntropy;
  int threads = 1;

  /// Throws Config naming the offending field.
  void validate() const;
  std::vector<std::size_t> encoder_dims(std::size_t input_dim) const;
};

struct BranchState {
  BranchKind kind = BranchKind::Dthr;
  EncoderParams encoder;
  MomentumParams momentum;
  HybridLabelSystem label_system;
  PseudoLabels pseudo;
  FirstEpochRatios first_epoch;
  std::uint64_t sampling_seed = 0;

  /// Starts from `init` with A^0 = theta.
  static BranchState start(BranchKind kind, const EncoderParams& init, std::uint64_t sampling_seed);
};

struct BranchEpochStats {
  double joint_loss = 0.0;
  double collaborative_loss = 0.0;
  int clusters = 0;
  int outliers = 0;
  double purity = 0.0;  // NaN without an auditor
  double eta1 = 0.0;
  double eta2 = 0.0;
  double eps = 0.0;
  int steps = 0;
};

struct EpochRecord {
  int epoch = 0;
  double learning_rate = 0.0;
  BranchEpochStats dthr;
  BranchEpochStats rihr;
  double total_loss = 0.0;
};

struct RunReport {
  std::vector<EpochRecord> epochs;
  std::map<std::string, double> final_metrics;
};

std::string run_report_csv(const RunReport& report);

/// Scores pseudo labels against withheld identities. Kept apart from every
/// training input so ground truth never reaches a training code path.
class PurityAuditor {
 public:
  explicit PurityAuditor(std::vector<int> truth) : truth_(std::move(truth)) {}
  double purity(const PseudoLabels& pseudo) const;

 private:
  std::vector<int> truth_;
};

std::vector<Vector> extract_embeddings(const EncoderParams& encoder, const DomainDataset& ds);
/// Concatenates sqrt(alpha) * f1 and sqrt(1 - alpha) * f2.
std::vector<Vector> extract_fused_embeddings(const EncoderParams& e1, const EncoderParams& e2, const DomainDataset& ds,
                                             double alpha);

/// Trains one encoder with the joint contrastive loss over the concatenated
/// ground-truth classes of `labeled` (labels offset per dataset).
EncoderParams supervised_train(const EncoderParams& init, const std::vector<const DomainDataset*>& labeled,
                               const TrainConfig& config, int epochs);

/// Seeded random initialization for the given input dimension.
EncoderParams initial_encoder(std::size_t input_dim, const TrainConfig& config);

/// Fits synthetic -> source translation, then trains on translated synthetic
/// plus source data for `config.pretrain_epochs`. Zero epochs returns the
/// seeded initialization.
EncoderParams synthetic_pretrain(const DomainDataset& synthetic, const DomainDataset& source,
                                 const TrainConfig& config);

/// Source-only baseline encoder.
EncoderParams source_only_pretrain(const DomainDataset& source, const TrainConfig& config);

/// One epoch of one branch trained alone: re-cluster the target, rebuild the
/// hybrid label system, then run P x K batches over labeled_pool + target.
/// `target` must be unlabeled.
BranchState run_epoch_branch(BranchState branch, const DomainDataset& labeled_pool, const DomainDataset& target,
                             int epoch, const TrainConfig& config, BranchEpochStats* stats = nullptr,
                             const PurityAuditor* auditor = nullptr);

struct AdaptResult {
  BranchState dthr;
  BranchState rihr;
  TranslatorParams translator;
  RunReport report;
};

/// Both branches start from `pretrained`. `target` must be unlabeled; pass an
/// auditor to record per-epoch purity.
AdaptResult adapt(const EncoderParams& pretrained, const DomainDataset& source, const DomainDataset& target,
                  const TrainConfig& config, const PurityAuditor* auditor = nullptr);

/// Greedy one-to-one matching of branch-1 target clusters to branch-2 target
/// clusters by descending member overlap. Throws Alignment (message carries
/// the overlap matrix) when a branch-1 cluster has no overlapping partner.
std::vector<int> align_target_classes(const HybridLabelSystem& a, const HybridLabelSystem& b);

/// alpha * C1(E1(x)) + (1 - alpha) * C2(E2(x)) over branch-1's target clusters,
/// where C_b is cosine scoring against branch b's cluster prototypes.
Vector fuse_predict(const BranchState& b1, const BranchState& b2, std::span<const double> x, double alpha);

/// mAP and CMC@{1,5,10} for each branch and the fused embedding, every target
/// sample querying all others. `target` must carry identities.
std::map<std::string, double> evaluate_model(const EncoderParams& dthr, const EncoderParams& rihr,
                                             const DomainDataset& target, double alpha);
std::map<std::string, double> evaluate_encoder(const EncoderParams& encoder, const DomainDataset& target,
                                               const std::string& prefix);

}  // namespace smcr
