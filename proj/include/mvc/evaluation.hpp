#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "mvc/matrix.hpp"

namespace mvc {

/// One scored image: lesion identity, ground truth, malignant probability.
struct PredictionRecord {
  std::string lesion_id;
  int true_label = 0;
  double score = 0.0;
};

/// Metric bundle for one evaluation run. A NaN field means the metric is
/// undefined for this input (zero denominator); it is reported as null
/// in JSON and n/a in tables, never silently as 0.
struct MetricsReport {
  double auc = 0.0;
  double acc = 0.0;
  double sensitivity = 0.0;
  double precision = 0.0;
  double specificity = 0.0;
  double f1 = 0.0;
  double mcr = 0.0;
  long tp = 0, fp = 0, tn = 0, fn = 0;
  // Extensions beyond the per-image protocol, reported separately.
  double knn_auc = 0.0;
  double lesion_acc = 0.0;
};

/// Probability that a random positive outscores a random negative, ties
/// counting half (the Mann-Whitney statistic), computed via midranks.
/// Throws std::domain_error when only one class is present.
double roc_auc(const std::vector<PredictionRecord>& records);

/// Thresholded counts and rates; malignant (label 1) is the positive
/// class and is predicted when score >= threshold.
MetricsReport confusion_metrics(const std::vector<PredictionRecord>& records,
                                double threshold = 0.5);

/// Inner-lesion misclassification rate: mean of W/N over lesions with at
/// least one misclassified view; 0 when every view is correct.
double mcr(const std::vector<PredictionRecord>& records,
           double threshold = 0.5);

/// Accuracy of per-lesion majority vote (ties broken by mean score).
double lesion_majority_accuracy(const std::vector<PredictionRecord>& records,
                                double threshold = 0.5);

struct KnnConfig {
  std::size_t k = 10;
  double knn_temperature = 0.07;
};

/// Training-free probe over frozen embeddings: for each query, the k most
/// cosine-similar training rows vote with weight exp(S/τ); the score is
/// the malignant weight fraction. Ties at the k-th similarity break
/// toward the lower training index.
std::vector<double> weighted_knn_scores(const Matrix& train_embeddings,
                                        const std::vector<int>& train_labels,
                                        const Matrix& queries,
                                        const KnnConfig& config);

/// AUC of the weighted-KNN probe for each k, in input order.
std::vector<std::pair<std::size_t, double>> knn_auc_sweep(
    const Matrix& train_embeddings, const std::vector<int>& train_labels,
    const Matrix& queries, const std::vector<int>& query_labels,
    const std::vector<std::size_t>& ks, double knn_temperature = 0.07);

}  // namespace mvc
