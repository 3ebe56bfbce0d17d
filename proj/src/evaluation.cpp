#include "mvc/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>

namespace mvc {

namespace {
constexpr double kUndefined = std::numeric_limits<double>::quiet_NaN();

double ratio_or_nan(double num, double den) {
  return den > 0.0 ? num / den : kUndefined;
}
}  // namespace

double roc_auc(const std::vector<PredictionRecord>& records) {
  std::size_t n_pos = 0, n_neg = 0;
  for (const auto& r : records) (r.true_label == 1 ? n_pos : n_neg)++;
  if (n_pos == 0 || n_neg == 0)
    throw std::domain_error("roc_auc: need at least one record per class");

  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return records[a].score < records[b].score;
  });

  // Midranks over tie groups; rank sum of positives gives Mann-Whitney U.
  double pos_rank_sum = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j < order.size() &&
           records[order[j]].score == records[order[i]].score)
      ++j;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);  // 1-based
    for (std::size_t t = i; t < j; ++t)
      if (records[order[t]].true_label == 1) pos_rank_sum += midrank;
    i = j;
  }
  const double np = static_cast<double>(n_pos);
  const double nn = static_cast<double>(n_neg);
  return (pos_rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

MetricsReport confusion_metrics(const std::vector<PredictionRecord>& records,
                                double threshold) {
  MetricsReport m;
  for (const auto& r : records) {
    const bool predicted_malignant = r.score >= threshold;
    if (r.true_label == 1)
      (predicted_malignant ? m.tp : m.fn)++;
    else
      (predicted_malignant ? m.fp : m.tn)++;
  }
  const double tp = static_cast<double>(m.tp), fp = static_cast<double>(m.fp);
  const double tn = static_cast<double>(m.tn), fn = static_cast<double>(m.fn);
  m.acc = ratio_or_nan(tp + tn, tp + fp + tn + fn);
  m.sensitivity = ratio_or_nan(tp, tp + fn);
  m.specificity = ratio_or_nan(tn, tn + fp);
  m.precision = ratio_or_nan(tp, tp + fp);
  if (std::isnan(m.precision) || std::isnan(m.sensitivity) ||
      m.precision + m.sensitivity <= 0.0)
    m.f1 = kUndefined;
  else
    m.f1 = 2.0 * m.precision * m.sensitivity / (m.precision + m.sensitivity);
  m.auc = kUndefined;
  m.mcr = kUndefined;
  m.knn_auc = kUndefined;
  m.lesion_acc = kUndefined;
  return m;
}

double mcr(const std::vector<PredictionRecord>& records, double threshold) {
  if (records.empty()) throw std::domain_error("mcr: empty input");
  std::map<std::string, std::pair<std::size_t, std::size_t>> per_lesion;
  for (const auto& r : records) {
    auto& [wrong, total] = per_lesion[r.lesion_id];
    const int predicted = r.score >= threshold ? 1 : 0;
    if (predicted != r.true_label) ++wrong;
    ++total;
  }
  double sum = 0.0;
  std::size_t lesions_with_errors = 0;
  for (const auto& [id, counts] : per_lesion) {
    if (counts.first == 0) continue;
    sum += static_cast<double>(counts.first) /
           static_cast<double>(counts.second);
    ++lesions_with_errors;
  }
  if (lesions_with_errors == 0) return 0.0;
  return sum / static_cast<double>(lesions_with_errors);
}

double lesion_majority_accuracy(const std::vector<PredictionRecord>& records,
                                double threshold) {
  if (records.empty()) throw std::domain_error("lesion_majority_accuracy: empty");
  struct Tally {
    std::size_t malignant_votes = 0, total = 0;
    double score_sum = 0.0;
    int label = 0;
  };
  std::map<std::string, Tally> per_lesion;
  for (const auto& r : records) {
    auto& t = per_lesion[r.lesion_id];
    if (r.score >= threshold) ++t.malignant_votes;
    ++t.total;
    t.score_sum += r.score;
    t.label = r.true_label;
  }
  std::size_t correct = 0;
  for (const auto& [id, t] : per_lesion) {
    int verdict;
    if (2 * t.malignant_votes > t.total)
      verdict = 1;
    else if (2 * t.malignant_votes < t.total)
      verdict = 0;
    else
      verdict = (t.score_sum / static_cast<double>(t.total) >= threshold) ? 1 : 0;
    if (verdict == t.label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(per_lesion.size());
}

std::vector<double> weighted_knn_scores(const Matrix& train_embeddings,
                                        const std::vector<int>& train_labels,
                                        const Matrix& queries,
                                        const KnnConfig& config) {
  if (config.k < 1)
    throw std::invalid_argument("weighted_knn_scores: k must be >= 1");
  if (config.k > train_embeddings.rows)
    throw std::invalid_argument("weighted_knn_scores: k exceeds train size");
  if (config.knn_temperature <= 0.0)
    throw std::invalid_argument("weighted_knn_scores: temperature must be > 0");
  if (train_labels.size() != train_embeddings.rows)
    throw std::invalid_argument("weighted_knn_scores: label count mismatch");
  if (queries.cols != train_embeddings.cols)
    throw std::invalid_argument("weighted_knn_scores: dimension mismatch");

  std::vector<double> scores(queries.rows, 0.0);
  std::vector<std::size_t> idx(train_embeddings.rows);
  std::vector<double> sims(train_embeddings.rows);
  for (std::size_t q = 0; q < queries.rows; ++q) {
    for (std::size_t t = 0; t < train_embeddings.rows; ++t) {
      double dot = 0.0;
      for (std::size_t d = 0; d < queries.cols; ++d)
        dot += queries.at(q, d) * train_embeddings.at(t, d);
      sims[t] = dot;
    }
    std::iota(idx.begin(), idx.end(), 0);
    std::partial_sort(idx.begin(), idx.begin() + static_cast<long>(config.k),
                      idx.end(), [&](std::size_t a, std::size_t b) {
                        if (sims[a] != sims[b]) return sims[a] > sims[b];
                        return a < b;
                      });
    double weight_sum = 0.0, malignant_sum = 0.0;
    for (std::size_t r = 0; r < config.k; ++r) {
      const std::size_t t = idx[r];
      const double w = std::exp(sims[t] / config.knn_temperature);
      weight_sum += w;
      if (train_labels[t] == 1) malignant_sum += w;
    }
    scores[q] = malignant_sum / weight_sum;
  }
  return scores;
}

std::vector<std::pair<std::size_t, double>> knn_auc_sweep(
    const Matrix& train_embeddings, const std::vector<int>& train_labels,
    const Matrix& queries, const std::vector<int>& query_labels,
    const std::vector<std::size_t>& ks, double knn_temperature) {
  if (query_labels.size() != queries.rows)
    throw std::invalid_argument("knn_auc_sweep: query label count mismatch");
  std::vector<std::pair<std::size_t, double>> series;
  series.reserve(ks.size());
  for (std::size_t k : ks) {
    KnnConfig cfg{k, knn_temperature};
    const auto scores =
        weighted_knn_scores(train_embeddings, train_labels, queries, cfg);
    std::vector<PredictionRecord> recs(queries.rows);
    for (std::size_t q = 0; q < queries.rows; ++q)
      recs[q] = {"", query_labels[q], scores[q]};
    series.emplace_back(k, roc_auc(recs));
  }
  return series;
}

}  // namespace mvc
