#include "mvc/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace mvc {

namespace {

// Substream tags; see rng.hpp.
constexpr std::uint64_t kStreamSplit = 0x5F17;
constexpr std::uint64_t kStreamFoldBase = 0xF01D0000;
constexpr std::uint64_t kStreamInit = 1;
constexpr std::uint64_t kStreamSampler = 2;
constexpr std::uint64_t kStreamAugmentA = 3;
constexpr std::uint64_t kStreamAugmentB = 4;

std::size_t view_dim_of(const std::vector<LesionRecord>& records) {
  for (const auto& rec : records) {
    if (rec.views.empty())
      throw std::invalid_argument("train data: lesion " + rec.lesion_id +
                                  " has no views");
    return rec.views.front().size();
  }
  throw std::invalid_argument("train data: empty dataset");
}

Matrix assemble_batch(const std::vector<LesionRecord>& records,
                      const std::vector<SampledView>& batch,
                      const AugmentConfig& augment, std::size_t dim,
                      Rng& rng) {
  Matrix x(batch.size(), dim);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& view = records[batch[i].lesion].views[batch[i].view];
    const auto augmented = augment_view(view, augment, rng);
    std::copy(augmented.begin(), augmented.end(), x.row(i).begin());
  }
  return x;
}

}  // namespace

FoldTraining train_one_fold(const std::vector<LesionRecord>& train,
                            const TrainConfig& config, std::uint64_t fold_seed,
                            const EpochObserver& observer) {
  if (train.empty()) throw std::invalid_argument("train_one_fold: no data");
  if (config.epochs < 1)
    throw std::invalid_argument("train_one_fold: epochs must be >= 1");
  if (config.alpha < 0.0)
    throw std::invalid_argument("train_one_fold: alpha must be >= 0");
  if (train.size() < config.batch.groups_per_batch)
    throw std::runtime_error(
        "train_one_fold: fewer lesions than groups_per_batch");
  const std::size_t dim = view_dim_of(train);
  for (const auto& rec : train)
    for (const auto& v : rec.views)
      if (v.size() != dim)
        throw std::invalid_argument("train_one_fold: mixed view dimensions");

  Rng init_rng(derive_seed(fold_seed, kStreamInit));
  Rng sampler_rng(derive_seed(fold_seed, kStreamSampler));
  Rng augment_a_rng(derive_seed(fold_seed, kStreamAugmentA));
  Rng augment_b_rng(derive_seed(fold_seed, kStreamAugmentB));

  FoldTraining result;
  result.params =
      init_encoder(dim, config.hidden_dims, config.embed_dim, init_rng);
  AdamState adam = AdamState::for_params(result.params);

  std::vector<std::size_t> views_per_lesion;
  views_per_lesion.reserve(train.size());
  for (const auto& rec : train) views_per_lesion.push_back(rec.views.size());
  const std::size_t total_images = total_view_count(train);
  const std::size_t batch_size = config.batch.batch_size();
  const std::size_t batches_per_epoch =
      (total_images + batch_size - 1) / batch_size;

  const JointLossConfig joint_config{config.alpha, config.temperature,
                                     config.normalize_positives};
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const double lr = lr_schedule(epoch, config.base_lr);
    double epoch_loss = 0.0;
    for (std::size_t b = 0; b < batches_per_epoch; ++b) {
      const auto batch =
          sample_batch(views_per_lesion, config.batch, sampler_rng);
      BatchLabels labels;
      labels.lesion_ids.reserve(batch.size());
      labels.class_labels.reserve(batch.size());
      for (const auto& sv : batch) {
        labels.lesion_ids.push_back(static_cast<int>(sv.lesion));
        labels.class_labels.push_back(train[sv.lesion].label);
      }

      const Matrix x_a =
          assemble_batch(train, batch, config.augment, dim, augment_a_rng);
      auto [h_a, cache_a] = mlp_forward(result.params, x_a);
      auto diverged = [&](const char* where) {
        std::ostringstream diag;
        diag << "train_one_fold: diverged (" << where << ") at epoch " << epoch
             << " batch " << b << "; lr=" << lr
             << " variant=" << variant_name(config.variant)
             << " alpha=" << config.alpha;
        return std::runtime_error(diag.str());
      };
      // ReLU would silently clamp a NaN, so reject bad inputs up front.
      if (!all_finite(x_a)) throw diverged("non-finite batch inputs");
      if (!all_finite(h_a)) throw diverged("non-finite view-A embeddings");

      const auto logits = head_forward(result.params, h_a);
      std::vector<double> probs(logits.size());
      for (std::size_t i = 0; i < logits.size(); ++i)
        probs[i] = sigmoid(logits[i]);
      const LossOutput cls = binary_cross_entropy(probs, labels.class_labels);

      LossOutput con;
      Matrix h_b;
      ForwardCache cache_b;
      if (config.contrastive_enabled) {
        if (config.dual_view) {
          const Matrix x_b =
              assemble_batch(train, batch, config.augment, dim, augment_b_rng);
          std::tie(h_b, cache_b) = mlp_forward(result.params, x_b);
          if (!all_finite(h_b))
            throw diverged("non-finite view-B embeddings");
          const Matrix z_a = l2_normalize_rows(h_a);
          const Matrix z_b = l2_normalize_rows(h_b);
          const PairSets pairs =
              build_pairs(config.variant, labels, ViewMode::Dual);
          con = contrastive_loss(z_a, z_b, pairs, config.temperature,
                                 config.normalize_positives);
        } else {
          const Matrix z_a = l2_normalize_rows(h_a);
          const PairSets pairs =
              build_pairs(config.variant, labels, ViewMode::Single);
          con = contrastive_loss(z_a, z_a, pairs, config.temperature,
                                 config.normalize_positives);
        }
        result.skipped_anchors += con.skipped_anchors;
      }

      const LossOutput joint = joint_loss(cls, con, joint_config);
      if (!std::isfinite(joint.value)) throw diverged("non-finite joint loss");
      epoch_loss += joint.value;

      ParamGrads grads = ParamGrads::zeros_like(result.params);
      Matrix grad_h_a = head_backward(result.params, h_a, joint.grad_logits,
                                      grads);
      if (config.contrastive_enabled) {
        if (config.dual_view) {
          const Matrix dz_a = l2_normalize_rows_backward(h_a, joint.grad_anchors);
          for (std::size_t i = 0; i < grad_h_a.data.size(); ++i)
            grad_h_a.data[i] += dz_a.data[i];
          const Matrix grad_h_b =
              l2_normalize_rows_backward(h_b, joint.grad_candidates);
          const BackwardResult bw_b =
              mlp_backward(result.params, cache_b, grad_h_b);
          grads.add(bw_b.grads);
        } else {
          Matrix combined = joint.grad_anchors;
          for (std::size_t i = 0; i < combined.data.size(); ++i)
            combined.data[i] += joint.grad_candidates.data[i];
          const Matrix dz_a = l2_normalize_rows_backward(h_a, combined);
          for (std::size_t i = 0; i < grad_h_a.data.size(); ++i)
            grad_h_a.data[i] += dz_a.data[i];
        }
      }
      const BackwardResult bw_a = mlp_backward(result.params, cache_a, grad_h_a);
      grads.add(bw_a.grads);

      adam_step(result.params, grads, adam, lr);
    }
    result.loss_curve.push_back(epoch_loss /
                                static_cast<double>(batches_per_epoch));
    if (observer) observer(epoch, result.params, result.loss_curve.back());
  }
  return result;
}

FoldTraining train_one_fold(const std::vector<LesionRecord>& train,
                            const TrainConfig& config) {
  return train_one_fold(train, config, derive_seed(config.seed, kStreamFoldBase));
}

std::vector<PredictionRecord> predict_records(
    const EncoderParams& params, const std::vector<LesionRecord>& records) {
  const FlatViews flat = flatten_views(records);
  const Matrix embeddings = mlp_forward(params, flat.X).first;
  const auto logits = head_forward(params, embeddings);
  std::vector<PredictionRecord> preds(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i)
    preds[i] = {flat.lesion_ids[i], flat.labels[i], sigmoid(logits[i])};
  return preds;
}

MetricsReport evaluate_fold(const EncoderParams& params,
                            const std::vector<LesionRecord>& train,
                            const std::vector<LesionRecord>& test,
                            const TrainConfig& config) {
  const auto preds = predict_records(params, test);
  MetricsReport report = confusion_metrics(preds, config.threshold);
  report.auc = roc_auc(preds);
  report.mcr = mcr(preds, config.threshold);
  report.lesion_acc = lesion_majority_accuracy(preds, config.threshold);

  const FlatViews train_flat = flatten_views(train);
  const FlatViews test_flat = flatten_views(test);
  const Matrix train_emb =
      l2_normalize_rows(mlp_forward(params, train_flat.X).first);
  const Matrix test_emb =
      l2_normalize_rows(mlp_forward(params, test_flat.X).first);
  const auto knn_scores = weighted_knn_scores(train_emb, train_flat.labels,
                                              test_emb, config.knn);
  std::vector<PredictionRecord> knn_preds(knn_scores.size());
  for (std::size_t i = 0; i < knn_scores.size(); ++i)
    knn_preds[i] = {test_flat.lesion_ids[i], test_flat.labels[i],
                    knn_scores[i]};
  report.knn_auc = roc_auc(knn_preds);
  return report;
}

namespace {

double nan_safe_mean(const std::vector<double>& xs) {
  double sum = 0.0;
  for (double x : xs) sum += x;
  return sum / static_cast<double>(xs.size());
}

double nan_safe_std(const std::vector<double>& xs, double mean) {
  if (xs.size() < 2) return 0.0;
  double sq = 0.0;
  for (double x : xs) sq += (x - mean) * (x - mean);
  return std::sqrt(sq / static_cast<double>(xs.size() - 1));
}

void aggregate(RunResult& result) {
  auto fields = {
      std::pair<const char*, double MetricsReport::*>{"auc", &MetricsReport::auc},
      {"acc", &MetricsReport::acc},
      {"sensitivity", &MetricsReport::sensitivity},
      {"precision", &MetricsReport::precision},
      {"specificity", &MetricsReport::specificity},
      {"f1", &MetricsReport::f1},
      {"mcr", &MetricsReport::mcr},
      {"knn_auc", &MetricsReport::knn_auc},
      {"lesion_acc", &MetricsReport::lesion_acc},
  };
  for (auto [name, field] : fields) {
    std::vector<double> values;
    values.reserve(result.folds.size());
    for (const auto& fold : result.folds) values.push_back(fold.*field);
    const double m = nan_safe_mean(values);
    result.mean.*field = m;
    result.stddev.*field = nan_safe_std(values, m);
  }
  for (const auto& fold : result.folds) {
    result.mean.tp += fold.tp;
    result.mean.fp += fold.fp;
    result.mean.tn += fold.tn;
    result.mean.fn += fold.fn;
  }
}

}  // namespace

RunResult cross_validate(const std::vector<LesionRecord>& dataset,
                         const TrainConfig& config, std::size_t fold_count,
                         const FoldObserver& on_fold_trained) {
  if (fold_count < 2)
    throw std::invalid_argument("cross_validate: need at least 2 folds");
  std::vector<std::string> ids;
  ids.reserve(dataset.size());
  for (const auto& rec : dataset) ids.push_back(rec.lesion_id);
  Rng split_rng(derive_seed(config.seed, kStreamSplit));
  const FoldSplit split = kfold_split(ids, fold_count, split_rng);

  RunResult result;
  result.label = config.method_name();
  result.config = config;
  result.fold_count = fold_count;
  for (std::size_t fold = 0; fold < fold_count; ++fold) {
    std::vector<LesionRecord> train, test;
    for (const auto& rec : dataset) {
      if (split.assignment.at(rec.lesion_id) == fold)
        test.push_back(rec);
      else
        train.push_back(rec);
    }
    if (test.empty())
      throw std::runtime_error("cross_validate: empty fold " +
                               std::to_string(fold));
    const std::uint64_t fold_seed =
        derive_seed(config.seed, kStreamFoldBase + fold);
    FoldTraining trained = train_one_fold(train, config, fold_seed);
    if (on_fold_trained) on_fold_trained(fold, trained.params);
    result.folds.push_back(evaluate_fold(trained.params, train, test, config));
    result.loss_curves.push_back(std::move(trained.loss_curve));
    result.skipped_anchors.push_back(trained.skipped_anchors);
  }
  aggregate(result);
  return result;
}

std::vector<RunResult> run_ablation(const std::vector<LesionRecord>& dataset,
                                    const TrainConfig& base_config,
                                    AblationAxis axis,
                                    std::size_t fold_count) {
  std::vector<RunResult> rows;
  switch (axis) {
    case AblationAxis::Negatives:
      for (PairVariant v : {PairVariant::LRMinusAll, PairVariant::LRMinusSC,
                            PairVariant::LRMinusDC, PairVariant::LR}) {
        TrainConfig cfg = base_config;
        cfg.variant = v;
        cfg.contrastive_enabled = true;
        rows.push_back(cross_validate(dataset, cfg, fold_count));
      }
      break;
    case AblationAxis::Alpha:
      for (double alpha : {0.1, 0.2, 0.5, 1.0}) {
        TrainConfig cfg = base_config;
        cfg.alpha = alpha;
        cfg.contrastive_enabled = true;
        RunResult row = cross_validate(dataset, cfg, fold_count);
        char label[24];
        std::snprintf(label, sizeof(label), "alpha=%.1f", alpha);
        row.label = label;
        rows.push_back(std::move(row));
      }
      break;
    case AblationAxis::Methods: {
      TrainConfig baseline = base_config;
      baseline.contrastive_enabled = false;
      baseline.alpha = 0.0;
      rows.push_back(cross_validate(dataset, baseline, fold_count));
      for (PairVariant v : {PairVariant::IR, PairVariant::LR}) {
        TrainConfig cfg = base_config;
        cfg.variant = v;
        cfg.contrastive_enabled = true;
        rows.push_back(cross_validate(dataset, cfg, fold_count));
      }
      break;
    }
  }
  return rows;
}

}  // namespace mvc
