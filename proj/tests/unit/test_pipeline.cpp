#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "smcr/error.hpp"
#include "smcr/eval.hpp"
#include "smcr/pipeline.hpp"

using namespace smcr;

namespace {

DomainSpec spec(DomainTag tag, std::uint64_t seed, double scale) {
  DomainSpec s;
  s.domain = tag;
  s.num_identities = 6;
  s.samples_per_identity = 3;
  s.num_cameras = 2;
  s.input_dim = 8;
  s.identity_spread = 0.15;
  s.camera_shift_scale = 0.05;
  s.rng_seed = seed;
  s.transform.rotation_seed = seed + 50;
  s.transform.rotation_strength = 0.1;
  s.transform.scale = Vector(8, scale);
  return s;
}

struct Toy {
  DomainDataset synthetic = generate_domain(spec(DomainTag::Synthetic, 1, 1.0));
  DomainDataset source = generate_domain(spec(DomainTag::Source, 2, 1.0));
  DomainDataset target = generate_domain(spec(DomainTag::Target, 3, 1.3));
  DomainDataset unlabeled = strip_labels(target);
};

TrainConfig small_config() {
  TrainConfig c;
  c.epochs = 2;
  c.pretrain_epochs = 2;
  c.batch_p = 4;
  c.batch_k = 2;
  c.base_lr = 0.1;
  c.hidden_dims = {8};
  c.output_dim = 4;
  c.clustering.min_pts = 2;
  c.clustering.shrink_quantile = 0.1;
  c.translator_noise = 0.02;
  c.seed = 5;
  return c;
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::Config;
}

BranchState hand_branch(const std::vector<Vector>& target_feats, const std::vector<int>& labels, int clusters) {
  EncoderParams id;
  id.layers.push_back({Matrix::identity(2), Vector(2, 0.0)});
  BranchState b = BranchState::start(BranchKind::Dthr, id, 0);
  PseudoLabels p;
  p.labels = labels;
  p.num_clusters = clusters;
  p.num_outliers = 0;
  b.label_system = build_label_system({}, {}, 0, target_feats, p);
  return b;
}

}  // namespace

TEST_CASE("train config validation names the field") {
  TrainConfig c;
  CHECK_NOTHROW(c.validate());
  c.momentum_lambda = 1.0;
  CHECK(kind_of([&] { c.validate(); }) == ErrorKind::Config);
  c = TrainConfig{};
  c.alpha = 1.5;
  CHECK(kind_of([&] { c.validate(); }) == ErrorKind::Config);
  c = TrainConfig{};
  c.tau = 0.0;
  CHECK(kind_of([&] { c.validate(); }) == ErrorKind::Config);
  CHECK(TrainConfig{}.encoder_dims(64) == std::vector<std::size_t>{64, 128, 64});
}

TEST_CASE("pretraining") {
  const Toy toy;
  TrainConfig c = small_config();
  SUBCASE("zero epochs returns the seeded initialization") {
    c.pretrain_epochs = 0;
    CHECK(synthetic_pretrain(toy.synthetic, toy.source, c) == initial_encoder(8, c));
  }
  SUBCASE("unlabeled input is a contract error") {
    CHECK(kind_of([&] { synthetic_pretrain(toy.synthetic, strip_labels(toy.source), c); }) == ErrorKind::Contract);
  }
  SUBCASE("pretraining is deterministic and moves the weights") {
    const EncoderParams a = synthetic_pretrain(toy.synthetic, toy.source, c);
    CHECK(a == synthetic_pretrain(toy.synthetic, toy.source, c));
    CHECK_FALSE(a == initial_encoder(8, c));
  }
}

TEST_CASE("frozen epoch still regenerates pseudo labels") {
  const Toy toy;
  TrainConfig c = small_config();
  c.base_lr = 0.0;
  c.weight_decay = 0.0;
  const EncoderParams init = initial_encoder(8, c);
  BranchEpochStats stats;
  const BranchState after = run_epoch_branch(BranchState::start(BranchKind::Rihr, init, 9), toy.source, toy.unlabeled, 0,
                                             c, &stats);
  CHECK(after.encoder == init);
  CHECK(after.pseudo.labels.size() == toy.target.size());
  CHECK(after.pseudo.num_classes() == stats.clusters + stats.outliers);
  CHECK(after.label_system.num_source == toy.source.num_identities);
  CHECK(after.first_epoch.shrink.has_value());
}

TEST_CASE("branches differ only through their labeled pool") {
  const Toy toy;
  const TrainConfig c = small_config();
  const EncoderParams init = initial_encoder(8, c);
  const BranchState a = run_epoch_branch(BranchState::start(BranchKind::Dthr, init, 4), toy.source, toy.unlabeled, 0, c);
  const BranchState b = run_epoch_branch(BranchState::start(BranchKind::Rihr, init, 4), toy.source, toy.unlabeled, 0, c);
  CHECK(a.encoder == b.encoder);
  CHECK(a.momentum == b.momentum);
  CHECK(a.pseudo.labels == b.pseudo.labels);
  const BranchState other =
      run_epoch_branch(BranchState::start(BranchKind::Rihr, init, 4), toy.synthetic, toy.unlabeled, 0, c);
  CHECK_FALSE(other.encoder == a.encoder);
}

TEST_CASE("target labels must be hidden from training") {
  const Toy toy;
  const TrainConfig c = small_config();
  const EncoderParams init = initial_encoder(8, c);
  CHECK(kind_of([&] { adapt(init, toy.source, toy.target, c); }) == ErrorKind::Contract);
  CHECK(kind_of([&] {
          run_epoch_branch(BranchState::start(BranchKind::Rihr, init, 1), toy.source, toy.target, 0, c);
        }) == ErrorKind::Contract);
}

TEST_CASE("adapt is deterministic and reports every epoch") {
  const Toy toy;
  TrainConfig c = small_config();
  const EncoderParams init = synthetic_pretrain(toy.synthetic, toy.source, c);
  const PurityAuditor auditor(identity_labels(toy.target));
  for (auto mode : {TrainMode::Collaborative, TrainMode::Independent}) {
    c.mode = mode;
    const AdaptResult a = adapt(init, toy.source, toy.unlabeled, c, &auditor);
    const AdaptResult b = adapt(init, toy.source, toy.unlabeled, c, &auditor);
    CHECK(run_report_csv(a.report) == run_report_csv(b.report));
    CHECK(a.dthr.encoder == b.dthr.encoder);
    CHECK(a.report.epochs.size() == static_cast<std::size_t>(c.epochs));
    CHECK(a.report.final_metrics.at("epochs") == c.epochs);
    for (const auto& e : a.report.epochs) {
      CHECK((e.dthr.purity >= 0.0 && e.dthr.purity <= 1.0));
      CHECK(std::isfinite(e.total_loss));
      if (mode == TrainMode::Independent) CHECK(e.dthr.collaborative_loss == 0.0);
    }
    CHECK(same_shape(a.dthr.momentum.params, a.dthr.encoder));
    CHECK(a.dthr.label_system.dim() == a.dthr.encoder.output_dim());
  }
}

TEST_CASE("independent branches do not influence each other") {
  const Toy toy;
  TrainConfig c = small_config();
  c.mode = TrainMode::Independent;
  const EncoderParams init = initial_encoder(8, c);
  const AdaptResult a = adapt(init, toy.source, toy.unlabeled, c);
  c.translator_noise = 0.3;  // only the translated-source branch sees this
  c.beta = 0.5;              // ignored in independent mode
  const AdaptResult b = adapt(init, toy.source, toy.unlabeled, c);
  CHECK(a.rihr.encoder == b.rihr.encoder);
  CHECK(a.rihr.momentum == b.rihr.momentum);
  CHECK_FALSE(a.dthr.encoder == b.dthr.encoder);
}

TEST_CASE("fusion weights") {
  // Two clusters on the unit circle; branch 2 stores them in the other order.
  const std::vector<Vector> feats{{1.0, 0.0}, {0.8, 0.6}, {0.0, 1.0}, {-0.6, 0.8}};
  const BranchState b1 = hand_branch(feats, {0, 0, 1, 1}, 2);
  BranchState b2 = hand_branch(feats, {1, 1, 0, 0}, 2);
  b2.encoder.layers[0].weight(0, 1) = 0.5;
  const Vector x{0.6, 0.8};
  const Vector only1 = fuse_predict(b1, b2, x, 1.0);
  const Vector only2 = fuse_predict(b1, b2, x, 0.0);
  const Vector half = fuse_predict(b1, b2, x, 0.5);
  REQUIRE(only1.size() == 2);
  // branch-1 cosine scores by hand
  const Vector f1 = encode_feature(b1.encoder, x);
  for (std::size_t k = 0; k < 2; ++k) {
    const auto& p = b1.label_system.classes[k].prototype;
    CHECK(only1[k] == dot(f1, p) / (norm2(f1) * norm2(p)));
    CHECK(half[k] == doctest::Approx(0.5 * only1[k] + 0.5 * only2[k]).epsilon(1e-15));
  }
  // class k of branch 1 pairs with the differently numbered class of branch 2
  const Vector f2 = encode_feature(b2.encoder, x);
  const auto& q = b2.label_system.classes[1].prototype;
  CHECK(only2[0] == dot(f2, q) / (norm2(f2) * norm2(q)));
  CHECK(align_target_classes(b1.label_system, b2.label_system) == std::vector<int>{1, 0});
  CHECK(kind_of([&] { fuse_predict(b1, b2, x, 1.5); }) == ErrorKind::Domain);
}

TEST_CASE("unalignable label spaces") {
  const std::vector<Vector> feats{{1.0, 0.0}, {0.8, 0.6}, {0.0, 1.0}, {-0.6, 0.8}};
  const BranchState b1 = hand_branch(feats, {0, 0, 1, 1}, 2);
  const BranchState b2 = hand_branch(feats, {0, 0, 0, 0}, 1);
  try {
    align_target_classes(b1.label_system, b2.label_system);
    FAIL("expected alignment error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Alignment);
    CHECK(std::string(e.what()).find("overlap matrix") != std::string::npos);
  }
}

TEST_CASE("embedding extraction") {
  const Toy toy;
  EncoderParams id;
  id.layers.push_back({Matrix::identity(8), Vector(8, 0.0)});
  const auto e = extract_embeddings(id, toy.source);
  for (std::size_t i = 0; i < e.size(); ++i) {
    const Vector want = l2_normalized(toy.source.samples[i].x);
    for (std::size_t d = 0; d < 8; ++d) CHECK(e[i][d] == doctest::Approx(want[d]).epsilon(1e-15));
  }
  const TrainConfig c = small_config();
  const EncoderParams r = initial_encoder(8, c);
  const auto per = extract_embeddings(r, toy.source);
  for (std::size_t i = 0; i < per.size(); ++i) CHECK(per[i] == encode_feature(r, toy.source.samples[i].x));
  for (double alpha : {0.0, 0.3, 1.0}) {
    const auto fused = extract_fused_embeddings(id, r, toy.source, alpha);
    for (const auto& f : fused) CHECK(norm2(f) <= std::sqrt(2.0) + 1e-12);
  }
}

TEST_CASE("fused retrieval at alpha 1 equals branch 1") {
  const Toy toy;
  const TrainConfig c = small_config();
  const EncoderParams a = initial_encoder(8, c);
  TrainConfig other = c;
  other.seed = 99;
  const EncoderParams b = initial_encoder(8, other);
  const auto m = evaluate_model(a, b, toy.target, 1.0);
  CHECK(m.at("fused_map") == m.at("dthr_map"));
  const auto m0 = evaluate_model(a, b, toy.target, 0.0);
  CHECK(m0.at("fused_map") == m0.at("rihr_map"));
  CHECK(m.count("fused_cmc10") == 1);
}

TEST_CASE("run report layout") {
  RunReport r;
  EpochRecord e;
  e.epoch = 0;
  e.learning_rate = 0.5;
  r.epochs.push_back(e);
  const std::string csv = run_report_csv(r);
  CHECK(csv.rfind("epoch,lr,total_loss,dthr_joint,", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);
}
