#include <doctest.h>

#include <cmath>
#include <limits>

#include "mvc/gradcheck.hpp"
#include "mvc/report.hpp"
#include "mvc/trainer.hpp"

using namespace mvc;

namespace {

std::vector<LesionRecord> tiny_dataset(std::uint64_t seed = 0,
                                       std::size_t per_class = 10) {
  SynthConfig cfg;
  cfg.latent_dim = 4;
  cfg.view_dim = 8;
  cfg.class_separation = 6.0;
  cfg.view_noise_sigma = 0.5;
  cfg.benign_lesions = per_class;
  cfg.malignant_lesions = per_class;
  cfg.min_views = 2;
  cfg.max_views = 4;
  cfg.seed = seed;
  return generate_synthetic(cfg);
}

TrainConfig tiny_config() {
  TrainConfig cfg;
  cfg.batch = BatchSpec{4, 4};
  cfg.hidden_dims = {8, 6};
  cfg.embed_dim = 4;
  cfg.epochs = 3;
  cfg.knn.k = 5;
  cfg.seed = 42;
  return cfg;
}

}  // namespace

TEST_CASE("shipped defaults stay at the documented operating point") {
  const TrainConfig cfg;
  CHECK(cfg.variant == PairVariant::LR);
  CHECK(cfg.alpha == 0.5);
  CHECK(cfg.temperature == 1.0);
  CHECK(cfg.epochs == 200);
  CHECK(cfg.base_lr == 1e-4);
  CHECK(cfg.batch.groups_per_batch == 8);
  CHECK(cfg.batch.views_per_group == 8);
  CHECK(cfg.batch.batch_size() == 64);
  CHECK(cfg.dual_view);
  CHECK(!cfg.normalize_positives);
  CHECK(cfg.threshold == 0.5);
  CHECK(cfg.knn.knn_temperature == 0.07);

  const AdamState adam;
  CHECK(adam.beta1 == 0.9);
  CHECK(adam.beta2 == 0.999);
  CHECK(adam.epsilon == 1e-8);
}

TEST_CASE("loss curve has one entry per epoch") {
  const auto data = tiny_dataset();
  TrainConfig cfg = tiny_config();
  cfg.epochs = 1;
  const FoldTraining ft = train_one_fold(data, cfg);
  CHECK(ft.loss_curve.size() == 1);
  cfg.epochs = 4;
  const FoldTraining ft4 = train_one_fold(data, cfg);
  CHECK(ft4.loss_curve.size() == 4);
  for (double l : ft4.loss_curve) CHECK(std::isfinite(l));
}

TEST_CASE("alpha=0 and disabled contrastive path are bitwise identical") {
  const auto data = tiny_dataset(3);
  TrainConfig zero = tiny_config();
  zero.epochs = 5;
  zero.alpha = 0.0;
  zero.contrastive_enabled = true;
  TrainConfig off = zero;
  off.contrastive_enabled = false;

  std::vector<std::vector<double>> zero_traj, off_traj;
  train_one_fold(data, zero, 123,
                 [&](std::size_t, const EncoderParams& p, double) {
                   zero_traj.push_back(p.flatten());
                 });
  train_one_fold(data, off, 123,
                 [&](std::size_t, const EncoderParams& p, double) {
                   off_traj.push_back(p.flatten());
                 });
  REQUIRE(zero_traj.size() == 5);
  REQUIRE(off_traj.size() == 5);
  for (std::size_t e = 0; e < 5; ++e) CHECK(zero_traj[e] == off_traj[e]);
}

TEST_CASE("training is a pure function of data, config and seed") {
  const auto data = tiny_dataset(4);
  const TrainConfig cfg = tiny_config();
  const FoldTraining a = train_one_fold(data, cfg, 9);
  const FoldTraining b = train_one_fold(data, cfg, 9);
  CHECK(a.params.flatten() == b.params.flatten());
  CHECK(a.loss_curve == b.loss_curve);
  const FoldTraining c = train_one_fold(data, cfg, 10);
  CHECK(a.params.flatten() != c.params.flatten());
}

TEST_CASE("training loss falls well below its start on separable data") {
  // At the default 1e-4 base rate this step budget barely moves the
  // parameters, so the descent checks run at 3e-3 (thresholds frozen
  // from pilot runs; see the floor note below).
  const auto data = tiny_dataset(5, 16);
  TrainConfig cfg = tiny_config();
  cfg.epochs = 100;
  cfg.base_lr = 3e-3;

  // Classification-only objective optimizes nearly to zero.
  TrainConfig cls_only = cfg;
  cls_only.alpha = 0.0;
  const FoldTraining cls_ft = train_one_fold(data, cls_only);
  CHECK(cls_ft.loss_curve.back() < 0.25 * cls_ft.loss_curve.front());

  // The joint objective is bounded below by the contrastive floor
  // (cosine similarities are bounded), so its ratio target is looser.
  const FoldTraining joint_ft = train_one_fold(data, cfg);
  CHECK(joint_ft.loss_curve.back() < 0.9 * joint_ft.loss_curve.front());
}

TEST_CASE("mean joint loss drops from the first epoch to the second") {
  SynthConfig scfg;
  scfg.class_separation = 6.0;
  scfg.view_noise_sigma = 0.5;
  scfg.benign_lesions = 40;
  scfg.malignant_lesions = 40;
  scfg.min_views = 2;
  scfg.max_views = 6;
  scfg.seed = 1;
  const auto data = generate_synthetic(scfg);
  int decreased = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    TrainConfig cfg;
    cfg.epochs = 2;
    cfg.seed = seed;
    cfg.base_lr = 3e-3;
    cfg.knn.k = 5;
    const FoldTraining ft = train_one_fold(data, cfg);
    if (ft.loss_curve.back() < ft.loss_curve.front()) ++decreased;
  }
  CHECK(decreased >= 18);  // calibrated: 20/20 in the pilot
}

TEST_CASE("non-finite inputs abort with a diagnostic") {
  auto data = tiny_dataset(6);
  for (auto& rec : data)
    rec.views[0][0] = std::numeric_limits<double>::quiet_NaN();
  TrainConfig cfg = tiny_config();
  cfg.epochs = 2;
  CHECK_THROWS_WITH_AS(train_one_fold(data, cfg),
                       doctest::Contains("diverged"), std::runtime_error);
}

TEST_CASE("divergence guards reject bad configs") {
  const auto data = tiny_dataset(7);
  TrainConfig cfg = tiny_config();
  cfg.epochs = 0;
  CHECK_THROWS_AS(train_one_fold(data, cfg), std::invalid_argument);
  cfg = tiny_config();
  cfg.alpha = -0.1;
  CHECK_THROWS_AS(train_one_fold(data, cfg), std::invalid_argument);
  cfg = tiny_config();
  cfg.batch.groups_per_batch = 100;
  CHECK_THROWS_AS(train_one_fold(data, cfg), std::runtime_error);
}

TEST_CASE("single-view IR counts skipped anchors") {
  const auto data = tiny_dataset(8);
  TrainConfig cfg = tiny_config();
  cfg.epochs = 1;
  cfg.dual_view = false;
  cfg.variant = PairVariant::IR;
  const FoldTraining ft = train_one_fold(data, cfg);
  // every anchor lacks positives in single-view IR
  CHECK(ft.skipped_anchors > 0);
}

TEST_CASE("cross_validate: fold bookkeeping and metric population") {
  const auto data = tiny_dataset(9, 16);
  TrainConfig cfg = tiny_config();
  cfg.epochs = 2;
  const RunResult run = cross_validate(data, cfg, 5);
  CHECK(run.fold_count == 5);
  REQUIRE(run.folds.size() == 5);
  REQUIRE(run.loss_curves.size() == 5);
  for (const auto& fold : run.folds) {
    CHECK(std::isfinite(fold.auc));
    CHECK(std::isfinite(fold.acc));
    CHECK(std::isfinite(fold.mcr));
    CHECK(std::isfinite(fold.knn_auc));
    CHECK(fold.tp + fold.fp + fold.tn + fold.fn > 0);
  }
  CHECK(std::isfinite(run.mean.acc));
  CHECK(std::isfinite(run.stddev.acc));
  CHECK_THROWS_AS(cross_validate(data, cfg, 1), std::invalid_argument);
}

TEST_CASE("cross_validate is byte-deterministic") {
  const auto data = tiny_dataset(10, 16);
  TrainConfig cfg = tiny_config();
  cfg.epochs = 2;
  const RunResult a = cross_validate(data, cfg, 3);
  const RunResult b = cross_validate(data, cfg, 3);
  CHECK(to_json(a).dump() == to_json(b).dump());
}

TEST_CASE("run_ablation rows mirror the published tables") {
  const auto data = tiny_dataset(11, 12);
  TrainConfig cfg = tiny_config();
  cfg.epochs = 1;

  const auto alpha_rows = run_ablation(data, cfg, AblationAxis::Alpha, 2);
  REQUIRE(alpha_rows.size() == 4);
  CHECK(alpha_rows[0].label == "alpha=0.1");
  CHECK(alpha_rows[2].label == "alpha=0.5");
  CHECK(alpha_rows[0].config.alpha == doctest::Approx(0.1));

  const auto neg_rows = run_ablation(data, cfg, AblationAxis::Negatives, 2);
  REQUIRE(neg_rows.size() == 4);
  CHECK(neg_rows[0].label == "LR(-)");
  CHECK(neg_rows[1].label == "LR(-SC)");
  CHECK(neg_rows[2].label == "LR(-DC)");
  CHECK(neg_rows[3].label == "LR");

  const auto method_rows = run_ablation(data, cfg, AblationAxis::Methods, 2);
  REQUIRE(method_rows.size() == 3);
  CHECK(method_rows[0].label == "Baseline");
  CHECK(method_rows[1].label == "IR");
  CHECK(method_rows[2].label == "LR");

  const std::string table = render_comparison_table(method_rows);
  CHECK(table.find("Baseline") != std::string::npos);
  CHECK(table.find("MCR") != std::string::npos);
}

TEST_CASE("composed backward path matches finite differences end to end") {
  // Same composition train_one_fold runs per batch: dual forward,
  // normalize, contrastive on both views, head + cross-entropy on view A.
  Rng rng(314);
  const std::size_t n = 6, in_dim = 5;
  EncoderParams params = init_encoder(in_dim, {7, 5}, 4, rng);
  for (auto& w : params.head.weight.data) w = rng.normal() * 0.5;
  Matrix x_a(n, in_dim), x_b(n, in_dim);
  for (auto& x : x_a.data) x = rng.normal();
  for (auto& x : x_b.data) x = rng.normal();
  BatchLabels labels{{0, 0, 1, 1, 2, 2}, {1, 1, 0, 0, 1, 1}};
  const PairSets pairs = build_pairs(PairVariant::LR, labels);
  const JointLossConfig jcfg{0.7, 1.0, false};

  auto joint_of = [&](const EncoderParams& p) {
    const auto [h_a, ca] = mlp_forward(p, x_a);
    const auto [h_b, cb] = mlp_forward(p, x_b);
    const auto logits = head_forward(p, h_a);
    std::vector<double> probs(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i)
      probs[i] = sigmoid(logits[i]);
    const LossOutput cls = binary_cross_entropy(probs, labels.class_labels);
    const LossOutput con =
        contrastive_loss(l2_normalize_rows(h_a), l2_normalize_rows(h_b),
                         pairs, jcfg.temperature);
    return joint_loss(cls, con, jcfg);
  };

  auto f = [&](std::span<const double> flat) {
    EncoderParams q = params;
    q.unflatten(flat);
    return joint_of(q).value;
  };
  const auto fd = finite_diff_grad(f, params.flatten(), 1e-5);

  // Analytic: identical call sequence to the trainer's backward.
  const auto [h_a, cache_a] = mlp_forward(params, x_a);
  const auto [h_b, cache_b] = mlp_forward(params, x_b);
  const LossOutput joint = joint_of(params);
  ParamGrads grads = ParamGrads::zeros_like(params);
  Matrix grad_h_a = head_backward(params, h_a, joint.grad_logits, grads);
  const Matrix dz_a = l2_normalize_rows_backward(h_a, joint.grad_anchors);
  for (std::size_t i = 0; i < grad_h_a.data.size(); ++i)
    grad_h_a.data[i] += dz_a.data[i];
  const Matrix grad_h_b =
      l2_normalize_rows_backward(h_b, joint.grad_candidates);
  grads.add(mlp_backward(params, cache_b, grad_h_b).grads);
  grads.add(mlp_backward(params, cache_a, grad_h_a).grads);
  CHECK(max_relative_error(grads.flatten(), fd) < 1e-5);
}

TEST_CASE("evaluation never mixes reference and query lesions") {
  const auto data = tiny_dataset(12, 12);
  std::vector<std::string> ids;
  for (const auto& rec : data) ids.push_back(rec.lesion_id);
  Rng rng(2);
  const FoldSplit split = kfold_split(ids, 4, rng);
  for (std::size_t fold = 0; fold < 4; ++fold) {
    std::vector<LesionRecord> train, test;
    for (const auto& rec : data)
      (split.assignment.at(rec.lesion_id) == fold ? test : train)
          .push_back(rec);
    for (const auto& tr : train)
      for (const auto& te : test) CHECK(tr.lesion_id != te.lesion_id);
  }
}
