#include "smcr/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "smcr/error.hpp"
#include "smcr/eval.hpp"
#include "smcr/text_format.hpp"

namespace smcr {

std::string_view to_string(BranchKind b) { return b == BranchKind::Dthr ? "dthr" : "rihr"; }
std::string_view to_string(TrainMode m) { return m == TrainMode::Independent ? "ind" : "col"; }

void TrainConfig::validate() const {
  auto bad = [](const std::string& what) { fail(ErrorKind::Config, what); };
  if (epochs < 0) bad("epochs must be non-negative");
  if (pretrain_epochs < 0) bad("pretrain_epochs must be non-negative");
  if (batch_p < 1 || batch_k < 1) bad("batch_p and batch_k must be positive");
  if (!(base_lr >= 0.0)) bad("base_lr must be non-negative");
  if (!(weight_decay >= 0.0)) bad("weight_decay must be non-negative");
  if (!(momentum_lambda >= 0.0 && momentum_lambda < 1.0)) bad("lambda must lie in [0, 1)");
  if (!(alpha >= 0.0 && alpha <= 1.0)) bad("alpha must lie in [0, 1]");
  if (!(beta >= 0.0 && beta <= 1.0)) bad("beta must lie in [0, 1]");
  if (!(tau > 0.0)) bad("tau must be positive");
  if (!(prototype_momentum >= 0.0 && prototype_momentum <= 1.0)) bad("prototype_momentum must lie in [0, 1]");
  if (output_dim == 0) bad("output_dim must be positive");
  for (auto h : hidden_dims)
    if (h == 0) bad("hidden dims must be positive");
  if (clustering.min_pts < 1) bad("min_pts must be at least 1");
  if (!(clustering.shrink_factor > 0.0 && clustering.shrink_factor < 1.0)) bad("shrink_factor must lie in (0, 1)");
  if (!(clustering.enlarge_factor > 1.0)) bad("enlarge_factor must exceed 1");
  if (!(clustering.shrink_quantile > 0.0 && clustering.shrink_quantile <= 1.0)) bad("shrink_quantile must lie in (0, 1]");
  if (!(clustering.eps_scale > 0.0)) bad("eps_scale must be positive");
  if (!(translator_noise >= 0.0)) bad("translator_noise must be non-negative");
  if (threads < 1) bad("threads must be at least 1");
}

std::vector<std::size_t> TrainConfig::encoder_dims(std::size_t input_dim) const {
  std::vector<std::size_t> dims{input_dim};
  dims.insert(dims.end(), hidden_dims.begin(), hidden_dims.end());
  dims.push_back(output_dim);
  return dims;
}

BranchState BranchState::start(BranchKind kind, const EncoderParams& init, std::uint64_t sampling_seed) {
  BranchState b;
  b.kind = kind;
  b.encoder = init;
  b.momentum = MomentumParams::start(init);
  b.sampling_seed = sampling_seed;
  return b;
}

double PurityAuditor::purity(const PseudoLabels& pseudo) const { return pseudo_label_purity(pseudo.labels, truth_); }

std::vector<Vector> extract_embeddings(const EncoderParams& encoder, const DomainDataset& ds) {
  std::vector<Vector> out;
  out.reserve(ds.samples.size());
  for (const auto& s : ds.samples) out.push_back(encode_feature(encoder, s.x));
  return out;
}

std::vector<Vector> extract_fused_embeddings(const EncoderParams& e1, const EncoderParams& e2, const DomainDataset& ds,
                                             double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) fail(ErrorKind::Domain, "alpha must lie in [0, 1]");
  const double w1 = std::sqrt(alpha);
  const double w2 = std::sqrt(1.0 - alpha);
  std::vector<Vector> out;
  out.reserve(ds.samples.size());
  for (const auto& s : ds.samples) {
    Vector f = encode_feature(e1, s.x);
    const Vector g = encode_feature(e2, s.x);
    for (double& v : f) v *= w1;
    for (double v : g) f.push_back(w2 * v);
    out.push_back(std::move(f));
  }
  return out;
}

namespace {

constexpr std::uint64_t kInitStream = 0;
constexpr std::uint64_t kPretrainStream = 3;
constexpr std::uint64_t kDthrStream = 1;
constexpr std::uint64_t kRihrStream = 2;
constexpr std::uint64_t kTranslatorStream = 4;

std::uint64_t batch_seed(std::uint64_t stream_seed, int epoch, int step) {
  return derive_seed(stream_seed, static_cast<std::uint64_t>(epoch) * 1000003ULL + static_cast<std::uint64_t>(step));
}

// Labeled pool followed by target, indexed jointly.
struct EpochContext {
  std::vector<const Vector*> inputs;
  std::vector<int> classes;
  std::vector<int> sampler_labels;  // -1 for classes with a single member
  std::vector<char> from_target;
  int steps = 0;
  int batch_p = 0;
};

void fill_sampler(EpochContext& ctx, const HybridLabelSystem& hls, int batch_p, int batch_k) {
  ctx.sampler_labels.resize(ctx.classes.size());
  int eligible = 0;
  for (const auto& c : hls.classes)
    if (c.members.size() >= 2) ++eligible;
  for (std::size_t i = 0; i < ctx.classes.size(); ++i)
    ctx.sampler_labels[i] = hls.classes[ctx.classes[i]].members.size() >= 2 ? ctx.classes[i] : -1;
  if (eligible == 0) {
    // Nothing with two members; fall back to sampling every class.
    ctx.sampler_labels = ctx.classes;
    eligible = static_cast<int>(hls.classes.size());
  }
  ctx.batch_p = std::min(batch_p, eligible);
  const std::size_t per_batch = static_cast<std::size_t>(batch_p) * static_cast<std::size_t>(batch_k);
  ctx.steps = static_cast<int>(std::max<std::size_t>(1, ctx.classes.size() / per_batch));
}

struct StepLosses {
  double joint = 0.0;
  double collaborative = 0.0;
};

// One SGD step on `encoder`; updates prototypes and, when given, the momentum
// average. `teacher` enables the collaborative term.
StepLosses train_step(EncoderParams& encoder, HybridLabelSystem& hls, MomentumParams* momentum,
                      const EpochContext& ctx, std::span<const std::size_t> batch, const MomentumParams* teacher,
                      double w_joint, double w_col, double lr, const TrainConfig& config) {
  const std::size_t b = batch.size();
  std::vector<Encoded> enc;
  enc.reserve(b);
  std::vector<Vector> feats;
  feats.reserve(b);
  std::vector<int> classes(b);
  for (std::size_t i = 0; i < b; ++i) {
    enc.push_back(encode(encoder, *ctx.inputs[batch[i]]));
    feats.push_back(enc.back().feature);
    classes[i] = ctx.classes[batch[i]];
  }

  StepLosses losses;
  const auto joint = joint_contrastive(feats, classes, hls, config.tau);
  losses.joint = joint.loss;
  std::vector<Vector> grad = joint.grad;
  for (auto& g : grad)
    for (double& v : g) v *= w_joint;

  if (teacher != nullptr) {
    std::vector<Vector> teacher_feats;
    teacher_feats.reserve(b);
    for (std::size_t i = 0; i < b; ++i) teacher_feats.push_back(encode_feature(teacher->params, *ctx.inputs[batch[i]]));
    std::vector<SoftTripletScore> student_scores;
    std::vector<SoftTripletScore> teacher_scores;
    for (std::size_t i = 0; i < b; ++i) {
      if (!ctx.from_target[batch[i]]) continue;
      bool has_pos = false;
      bool has_neg = false;
      for (std::size_t j = 0; j < b; ++j) {
        if (j == i) continue;
        (classes[j] == classes[i] ? has_pos : has_neg) = true;
      }
      if (!has_pos || !has_neg) continue;
      student_scores.push_back(softmax_triplet(feats, classes, i));
      teacher_scores.push_back(softmax_triplet(teacher_feats, classes, i));
    }
    if (!student_scores.empty()) {
      const auto col = collaborative_loss(feats, student_scores, teacher_scores, config.collaborative_form);
      losses.collaborative = col.loss;
      for (std::size_t i = 0; i < b; ++i)
        for (std::size_t d = 0; d < grad[i].size(); ++d) grad[i][d] += w_col * col.grad[i][d];
    }
  }

  EncoderParams grads = zeros_like(encoder);
  for (std::size_t i = 0; i < b; ++i) encode_backward_accumulate(encoder, enc[i].cache, grad[i], 1.0, grads);
  encoder = sgd_step(encoder, grads, lr, config.weight_decay);
  update_prototypes(hls, feats, classes, config.prototype_momentum);
  if (momentum != nullptr) *momentum = momentum_update(*momentum, encoder, config.momentum_lambda);
  return losses;
}

EpochContext prepare_branch_epoch(BranchState& branch, const DomainDataset& pool, const DomainDataset& target,
                                  const TrainConfig& config, BranchEpochStats& stats, const PurityAuditor* auditor) {
  const auto target_feats = extract_embeddings(branch.encoder, target);
  PseudoLabelConfig cluster_cfg = config.clustering;
  cluster_cfg.criteria_enabled = config.criteria_enabled;
  cluster_cfg.threads = config.threads;
  auto pseudo = generate_pseudo_labels(target_feats, cluster_cfg, branch.first_epoch);
  branch.pseudo = std::move(pseudo.labels);

  const auto pool_feats = extract_embeddings(branch.encoder, pool);
  const auto pool_labels = identity_labels(pool);
  branch.label_system = build_label_system(pool_feats, pool_labels, pool.num_identities, target_feats, branch.pseudo);

  EpochContext ctx;
  const std::size_t total = pool.size() + target.size();
  ctx.inputs.reserve(total);
  ctx.classes.reserve(total);
  ctx.from_target.reserve(total);
  for (const auto& s : pool.samples) {
    ctx.inputs.push_back(&s.x);
    ctx.classes.push_back(branch.label_system.source_class(s.identity));
    ctx.from_target.push_back(0);
  }
  for (std::size_t i = 0; i < target.size(); ++i) {
    ctx.inputs.push_back(&target.samples[i].x);
    ctx.classes.push_back(branch.label_system.target_class(branch.pseudo.labels[i]));
    ctx.from_target.push_back(1);
  }
  fill_sampler(ctx, branch.label_system, config.batch_p, config.batch_k);

  stats = BranchEpochStats{};
  stats.clusters = branch.pseudo.num_clusters;
  stats.outliers = branch.pseudo.num_outliers;
  stats.eta1 = pseudo.report.eta1;
  stats.eta2 = pseudo.report.eta2;
  stats.eps = pseudo.report.eps;
  stats.purity = auditor ? auditor->purity(branch.pseudo) : std::numeric_limits<double>::quiet_NaN();
  return ctx;
}

void require_unlabeled(const DomainDataset& target) {
  for (const auto& s : target.samples)
    if (s.identity != kUnlabeled) fail(ErrorKind::Contract, "target identities must be stripped before training");
}

void require_labeled(const DomainDataset& ds, const char* what) {
  if (!ds.labeled()) fail(ErrorKind::Contract, std::string(what) + " dataset must be fully labeled");
}

double branch_weight(BranchKind kind, double alpha) { return kind == BranchKind::Dthr ? alpha : 1.0 - alpha; }

}  // namespace

EncoderParams initial_encoder(std::size_t input_dim, const TrainConfig& config) {
  const auto dims = config.encoder_dims(input_dim);
  return init_encoder(dims, derive_seed(config.seed, kInitStream));
}

EncoderParams supervised_train(const EncoderParams& init, const std::vector<const DomainDataset*>& labeled,
                               const TrainConfig& config, int epochs) {
  config.validate();
  EncoderParams encoder = init;
  if (epochs == 0 || labeled.empty()) return encoder;
  int total_labels = 0;
  std::vector<int> offsets;
  std::vector<Vector> inputs;
  std::vector<int> labels;
  for (const auto* ds : labeled) {
    require_labeled(*ds, "pretraining");
    offsets.push_back(total_labels);
    for (const auto& s : ds->samples) {
      inputs.push_back(s.x);
      labels.push_back(total_labels + s.identity);
    }
    total_labels += ds->num_identities;
  }
  const std::uint64_t stream = derive_seed(config.seed, kPretrainStream);
  const PseudoLabels no_target;
  for (int epoch = 0; epoch < epochs; ++epoch) {
    std::vector<Vector> feats;
    feats.reserve(inputs.size());
    for (const auto& x : inputs) feats.push_back(encode_feature(encoder, x));
    HybridLabelSystem hls = build_label_system(feats, labels, total_labels, {}, no_target);
    EpochContext ctx;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      ctx.inputs.push_back(&inputs[i]);
      ctx.classes.push_back(hls.source_class(labels[i]));
      ctx.from_target.push_back(0);
    }
    fill_sampler(ctx, hls, config.batch_p, config.batch_k);
    const double lr = learning_rate_at(epoch, config.base_lr);
    for (int step = 0; step < ctx.steps; ++step) {
      const auto batch = pk_batch(ctx.sampler_labels, ctx.batch_p, config.batch_k, batch_seed(stream, epoch, step));
      train_step(encoder, hls, nullptr, ctx, batch, nullptr, 1.0, 0.0, lr, config);
    }
  }
  return encoder;
}

EncoderParams synthetic_pretrain(const DomainDataset& synthetic, const DomainDataset& source,
                                 const TrainConfig& config) {
  config.validate();
  require_labeled(synthetic, "synthetic");
  require_labeled(source, "source");
  if (synthetic.dim != source.dim) fail(ErrorKind::Shape, "synthetic and source dimensions differ");
  const EncoderParams init = initial_encoder(source.dim, config);
  if (config.pretrain_epochs == 0) return init;
  const auto translator = fit_translator(raw_vectors(synthetic), raw_vectors(source));
  const DomainDataset synth_to_source = translate_dataset(translator, synthetic, DomainTag::Synth2Src);
  return supervised_train(init, {&synth_to_source, &source}, config, config.pretrain_epochs);
}

EncoderParams source_only_pretrain(const DomainDataset& source, const TrainConfig& config) {
  config.validate();
  require_labeled(source, "source");
  return supervised_train(initial_encoder(source.dim, config), {&source}, config, config.pretrain_epochs);
}

BranchState run_epoch_branch(BranchState branch, const DomainDataset& labeled_pool, const DomainDataset& target,
                             int epoch, const TrainConfig& config, BranchEpochStats* stats,
                             const PurityAuditor* auditor) {
  config.validate();
  require_unlabeled(target);
  require_labeled(labeled_pool, "labeled pool");
  BranchEpochStats local;
  auto ctx = prepare_branch_epoch(branch, labeled_pool, target, config, local, auditor);
  const double lr = learning_rate_at(epoch, config.base_lr);
  const double w_joint = 2.0 * branch_weight(branch.kind, config.alpha);
  for (int step = 0; step < ctx.steps; ++step) {
    const auto batch = pk_batch(ctx.sampler_labels, ctx.batch_p, config.batch_k,
                                batch_seed(branch.sampling_seed, epoch, step));
    const auto l = train_step(branch.encoder, branch.label_system, &branch.momentum, ctx, batch, nullptr, w_joint, 0.0,
                              lr, config);
    local.joint_loss += l.joint;
  }
  local.steps = ctx.steps;
  local.joint_loss /= ctx.steps;
  if (stats) *stats = local;
  return branch;
}

AdaptResult adapt(const EncoderParams& pretrained, const DomainDataset& source, const DomainDataset& target,
                  const TrainConfig& config, const PurityAuditor* auditor) {
  config.validate();
  require_labeled(source, "source");
  require_unlabeled(target);
  if (source.dim != target.dim || pretrained.input_dim() != source.dim)
    fail(ErrorKind::Shape, "encoder, source and target dimensions must agree");

  AdaptResult result;
  result.translator = perturb_translator(fit_translator(raw_vectors(source), raw_vectors(target)),
                                         config.translator_noise, derive_seed(config.seed, kTranslatorStream));
  const DomainDataset source_to_target = translate_dataset(result.translator, source, DomainTag::Src2Tgt);

  result.dthr = BranchState::start(BranchKind::Dthr, pretrained, derive_seed(config.seed, kDthrStream));
  result.rihr = BranchState::start(BranchKind::Rihr, pretrained, derive_seed(config.seed, kRihrStream));
  const bool collaborative = config.mode == TrainMode::Collaborative;
  const double beta = collaborative ? config.beta : 0.0;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    EpochRecord rec;
    rec.epoch = epoch;
    rec.learning_rate = learning_rate_at(epoch, config.base_lr);
    if (!collaborative) {
      result.dthr = run_epoch_branch(std::move(result.dthr), source_to_target, target, epoch, config, &rec.dthr, auditor);
      result.rihr = run_epoch_branch(std::move(result.rihr), source, target, epoch, config, &rec.rihr, auditor);
    } else {
      auto ctx1 = prepare_branch_epoch(result.dthr, source_to_target, target, config, rec.dthr, auditor);
      auto ctx2 = prepare_branch_epoch(result.rihr, source, target, config, rec.rihr, auditor);
      const int steps = std::min(ctx1.steps, ctx2.steps);
      const double a1 = branch_weight(BranchKind::Dthr, config.alpha);
      const double a2 = branch_weight(BranchKind::Rihr, config.alpha);
      for (int step = 0; step < steps; ++step) {
        // Teachers are the other branch's momentum encoder as of batch start.
        const MomentumParams teacher_for_dthr = result.rihr.momentum;
        const MomentumParams teacher_for_rihr = result.dthr.momentum;
        const auto batch1 = pk_batch(ctx1.sampler_labels, ctx1.batch_p, config.batch_k,
                                     batch_seed(result.dthr.sampling_seed, epoch, step));
        const auto batch2 = pk_batch(ctx2.sampler_labels, ctx2.batch_p, config.batch_k,
                                     batch_seed(result.rihr.sampling_seed, epoch, step));
        const auto l1 = train_step(result.dthr.encoder, result.dthr.label_system, &result.dthr.momentum, ctx1, batch1,
                                   &teacher_for_dthr, 2.0 * (1.0 - beta) * a1, beta * a1, rec.learning_rate, config);
        const auto l2 = train_step(result.rihr.encoder, result.rihr.label_system, &result.rihr.momentum, ctx2, batch2,
                                   &teacher_for_rihr, 2.0 * (1.0 - beta) * a2, beta * a2, rec.learning_rate, config);
        rec.dthr.joint_loss += l1.joint;
        rec.dthr.collaborative_loss += l1.collaborative;
        rec.rihr.joint_loss += l2.joint;
        rec.rihr.collaborative_loss += l2.collaborative;
      }
      for (auto* s : {&rec.dthr, &rec.rihr}) {
        s->steps = steps;
        s->joint_loss /= steps;
        s->collaborative_loss /= steps;
      }
    }
    const double col = config.alpha * rec.dthr.collaborative_loss + (1.0 - config.alpha) * rec.rihr.collaborative_loss;
    rec.total_loss = total_loss(rec.dthr.joint_loss, rec.rihr.joint_loss, col, config.alpha, beta);
    result.report.epochs.push_back(rec);
  }
  if (!result.report.epochs.empty()) {
    const auto& last = result.report.epochs.back();
    result.report.final_metrics["dthr_clusters"] = last.dthr.clusters;
    result.report.final_metrics["dthr_outliers"] = last.dthr.outliers;
    result.report.final_metrics["rihr_clusters"] = last.rihr.clusters;
    result.report.final_metrics["rihr_outliers"] = last.rihr.outliers;
    if (auditor) {
      result.report.final_metrics["dthr_purity"] = last.dthr.purity;
      result.report.final_metrics["rihr_purity"] = last.rihr.purity;
    }
  }
  result.report.final_metrics["epochs"] = static_cast<double>(result.report.epochs.size());
  return result;
}

std::string run_report_csv(const RunReport& report) {
  std::ostringstream out;
  out << "epoch,lr,total_loss";
  for (const char* b : {"dthr", "rihr"})
    out << ',' << b << "_joint," << b << "_col," << b << "_clusters," << b << "_outliers," << b << "_purity," << b
        << "_eta1," << b << "_eta2," << b << "_eps";
  out << '\n';
  for (const auto& e : report.epochs) {
    out << e.epoch << ',' << format_double(e.learning_rate) << ',' << format_double(e.total_loss);
    for (const auto* s : {&e.dthr, &e.rihr})
      out << ',' << format_double(s->joint_loss) << ',' << format_double(s->collaborative_loss) << ',' << s->clusters
          << ',' << s->outliers << ',' << format_double(s->purity) << ',' << format_double(s->eta1) << ','
          << format_double(s->eta2) << ',' << format_double(s->eps);
    out << '\n';
  }
  return out.str();
}

std::vector<int> align_target_classes(const HybridLabelSystem& a, const HybridLabelSystem& b) {
  std::vector<const HybridClass*> ca;
  std::vector<const HybridClass*> cb;
  for (const auto& c : a.classes)
    if (c.origin == ClassOrigin::TargetCluster) ca.push_back(&c);
  for (const auto& c : b.classes)
    if (c.origin == ClassOrigin::TargetCluster) cb.push_back(&c);

  std::vector<std::vector<std::size_t>> overlap(ca.size(), std::vector<std::size_t>(cb.size(), 0));
  for (std::size_t i = 0; i < ca.size(); ++i)
    for (std::size_t j = 0; j < cb.size(); ++j) {
      const auto& ma = ca[i]->members;
      const auto& mb = cb[j]->members;
      std::size_t n = 0;
      for (std::size_t x : ma) n += std::binary_search(mb.begin(), mb.end(), x) ? 1 : 0;
      overlap[i][j] = n;
    }

  std::vector<int> match(ca.size(), -1);
  std::vector<char> used(cb.size(), 0);
  while (true) {
    std::size_t best = 0;
    std::size_t bi = 0;
    std::size_t bj = 0;
    for (std::size_t i = 0; i < ca.size(); ++i) {
      if (match[i] >= 0) continue;
      for (std::size_t j = 0; j < cb.size(); ++j)
        if (!used[j] && overlap[i][j] > best) {
          best = overlap[i][j];
          bi = i;
          bj = j;
        }
    }
    if (best == 0) break;
    match[bi] = static_cast<int>(bj);
    used[bj] = 1;
  }
  if (ca.empty() || std::find(match.begin(), match.end(), -1) != match.end()) {
    std::ostringstream msg;
    msg << "cannot align target classes (" << ca.size() << " vs " << cb.size() << "); overlap matrix:";
    for (const auto& row : overlap) {
      msg << "\n ";
      for (std::size_t v : row) msg << ' ' << v;
    }
    fail(ErrorKind::Alignment, msg.str());
  }
  // Return label-system class ids of the partners.
  std::vector<int> partner(match.size());
  for (std::size_t i = 0; i < match.size(); ++i) partner[i] = cb[match[i]]->id;
  return partner;
}

Vector fuse_predict(const BranchState& b1, const BranchState& b2, std::span<const double> x, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) fail(ErrorKind::Domain, "alpha must lie in [0, 1]");
  const auto partner = align_target_classes(b1.label_system, b2.label_system);
  const Vector f1 = encode_feature(b1.encoder, x);
  const Vector f2 = encode_feature(b2.encoder, x);
  auto cosine = [](std::span<const double> f, std::span<const double> p) { return dot(f, p) / (norm2(f) * norm2(p)); };
  Vector y;
  std::size_t k = 0;
  for (const auto& c : b1.label_system.classes) {
    if (c.origin != ClassOrigin::TargetCluster) continue;
    const double s1 = cosine(f1, c.prototype);
    const double s2 = cosine(f2, b2.label_system.classes[partner[k]].prototype);
    y.push_back(alpha * s1 + (1.0 - alpha) * s2);
    ++k;
  }
  return y;
}

namespace {

RetrievalSet retrieval_set(std::vector<Vector> feats, const DomainDataset& ds) {
  RetrievalSet set;
  set.features = std::move(feats);
  for (const auto& s : ds.samples) {
    set.identities.push_back(s.identity);
    set.cameras.push_back(s.camera);
  }
  return set;
}

void add_metrics(std::map<std::string, double>& out, const std::string& prefix, const RetrievalSet& set) {
  const auto m = evaluate_retrieval(set, set, 10);
  out[prefix + "_map"] = m.mean_ap;
  out[prefix + "_cmc1"] = m.cmc_at(1);
  out[prefix + "_cmc5"] = m.cmc_at(5);
  out[prefix + "_cmc10"] = m.cmc_at(10);
}

}  // namespace

std::map<std::string, double> evaluate_encoder(const EncoderParams& encoder, const DomainDataset& target,
                                               const std::string& prefix) {
  require_labeled(target, "evaluation");
  std::map<std::string, double> out;
  add_metrics(out, prefix, retrieval_set(extract_embeddings(encoder, target), target));
  return out;
}

std::map<std::string, double> evaluate_model(const EncoderParams& dthr, const EncoderParams& rihr,
                                             const DomainDataset& target, double alpha) {
  require_labeled(target, "evaluation");
  std::map<std::string, double> out;
  add_metrics(out, "dthr", retrieval_set(extract_embeddings(dthr, target), target));
  add_metrics(out, "rihr", retrieval_set(extract_embeddings(rihr, target), target));
  add_metrics(out, "fused", retrieval_set(extract_fused_embeddings(dthr, rihr, target, alpha), target));
  return out;
}

}  // namespace smcr
