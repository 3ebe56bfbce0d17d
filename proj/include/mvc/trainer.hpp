#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mvc/adam.hpp"
#include "mvc/dataset.hpp"
#include "mvc/evaluation.hpp"
#include "mvc/losses.hpp"
#include "mvc/mlp.hpp"
#include "mvc/pairing.hpp"
#include "mvc/sampling.hpp"

namespace mvc {

/// Full training-run configuration. Defaults are the operating point the
/// ablations are run around: LR variant, α=0.5, τ=1, 8×8 batches, Adam at
/// 1e-4 with 0.1 step decay every 50 of 200 epochs.
struct TrainConfig {
  PairVariant variant = PairVariant::LR;
  double alpha = 0.5;
  double temperature = 1.0;
  std::size_t epochs = 200;
  double base_lr = 1e-4;
  BatchSpec batch;
  AugmentConfig augment{0.5, 0.1};
  std::uint64_t seed = 0;
  bool dual_view = true;
  bool contrastive_enabled = true;
  bool normalize_positives = false;
  std::vector<std::size_t> hidden_dims{64, 32};
  std::size_t embed_dim = 16;
  double threshold = 0.5;
  KnnConfig knn{10, 0.07};

  /// Row label used in comparison tables.
  std::string method_name() const {
    return contrastive_enabled ? variant_name(variant) : "Baseline";
  }
};

struct FoldTraining {
  EncoderParams params;
  std::vector<double> loss_curve;  // mean joint loss per epoch
  long skipped_anchors = 0;
};

/// Called after each epoch with the current parameters; used by tests and
/// progress reporting.
using EpochObserver =
    std::function<void(std::size_t epoch, const EncoderParams& params,
                       double mean_loss)>;

/// Trains on one lesion set. All randomness (init, batch sampling, the two
/// augmentation streams) derives from fold_seed through independent
/// substreams, so disabling the contrastive path leaves the view-A
/// pipeline untouched.
FoldTraining train_one_fold(const std::vector<LesionRecord>& train,
                            const TrainConfig& config, std::uint64_t fold_seed,
                            const EpochObserver& observer = nullptr);

/// fold_seed derived from config.seed.
FoldTraining train_one_fold(const std::vector<LesionRecord>& train,
                            const TrainConfig& config);

/// Deterministic per-image scores of a trained model (no augmentation).
std::vector<PredictionRecord> predict_records(
    const EncoderParams& params, const std::vector<LesionRecord>& records);

/// All per-image metrics plus the KNN probe (reference = train embeddings).
MetricsReport evaluate_fold(const EncoderParams& params,
                            const std::vector<LesionRecord>& train,
                            const std::vector<LesionRecord>& test,
                            const TrainConfig& config);

struct RunResult {
  std::string label;
  TrainConfig config;
  std::size_t fold_count = 0;
  std::vector<MetricsReport> folds;
  std::vector<std::vector<double>> loss_curves;
  std::vector<long> skipped_anchors;
  MetricsReport mean;    // counts are totals across folds
  MetricsReport stddev;  // sample std over folds; counts zero
};

/// Lesion-level k-fold cross-validation: per round trains on k-1 folds and
/// evaluates every metric on the holdout. on_fold_trained (optional) receives
/// each fold's final parameters, e.g. for snapshotting to disk.
using FoldObserver =
    std::function<void(std::size_t fold, const EncoderParams& params)>;
RunResult cross_validate(const std::vector<LesionRecord>& dataset,
                         const TrainConfig& config, std::size_t fold_count,
                         const FoldObserver& on_fold_trained = nullptr);

enum class AblationAxis { Negatives, Alpha, Methods };

/// One cross-validated run per setting along the axis:
///   Negatives — LR(-), LR(-SC), LR(-DC), LR
///   Alpha     — α ∈ {0.1, 0.2, 0.5, 1.0}
///   Methods   — Baseline, IR, LR
std::vector<RunResult> run_ablation(const std::vector<LesionRecord>& dataset,
                                    const TrainConfig& base_config,
                                    AblationAxis axis,
                                    std::size_t fold_count = 5);

}  // namespace mvc
