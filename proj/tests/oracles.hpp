#pragma once

// Independent oracle implementations used only by tests. Each one takes a
// deliberately different route from the library code it checks: plain exp
// sums instead of log-sum-exp, O(n²) pairwise AUC instead of midranks,
// per-neuron loops instead of matrix products.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "mvc/evaluation.hpp"
#include "mvc/matrix.hpp"
#include "mvc/mlp.hpp"
#include "mvc/pairing.hpp"

namespace oracles {

/// Direct transcription of the contrastive objective: for every anchor and
/// every positive, -log of exp(S/τ) over the explicit sum of exp terms.
inline double contrastive_loss_bruteforce(const mvc::Matrix& anchors,
                                          const mvc::Matrix& candidates,
                                          const mvc::PairSets& pairs,
                                          double tau,
                                          bool normalize_positives = false) {
  auto dot = [&](std::size_t i, std::size_t k) {
    double acc = 0.0;
    for (std::size_t d = 0; d < anchors.cols; ++d)
      acc += anchors.at(i, d) * candidates.at(k, d);
    return acc;
  };
  double total = 0.0;
  for (std::size_t i = 0; i < anchors.rows; ++i) {
    const auto& pos = pairs.positives[i];
    const auto& neg = pairs.negatives[i];
    if (pos.empty()) continue;
    double denom = 0.0;
    for (int k : pos) denom += std::exp(dot(i, k) / tau);
    for (int k : neg) denom += std::exp(dot(i, k) / tau);
    double term = 0.0;
    for (int j : pos) term += -std::log(std::exp(dot(i, j) / tau) / denom);
    if (normalize_positives) term /= static_cast<double>(pos.size());
    total += term;
  }
  return total / static_cast<double>(anchors.rows);
}

/// Mann-Whitney by exhaustive (positive, negative) pair enumeration.
inline double auc_pairwise(const std::vector<mvc::PredictionRecord>& records) {
  double wins = 0.0;
  std::size_t pairs = 0;
  for (const auto& p : records) {
    if (p.true_label != 1) continue;
    for (const auto& n : records) {
      if (n.true_label != 0) continue;
      ++pairs;
      if (p.score > n.score)
        wins += 1.0;
      else if (p.score == n.score)
        wins += 0.5;
    }
  }
  return wins / static_cast<double>(pairs);
}

/// Per-lesion recount of the misclassification rate. Lesions are processed
/// in sorted-id order so the accumulation order is canonical and the
/// comparison against the library can be exact.
inline double mcr_recount(const std::vector<mvc::PredictionRecord>& records,
                          double threshold) {
  std::vector<std::string> ids;
  for (const auto& r : records) ids.push_back(r.lesion_id);
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  double sum = 0.0;
  std::size_t hit = 0;
  for (const auto& id : ids) {
    std::size_t wrong = 0, total = 0;
    for (const auto& q : records) {
      if (q.lesion_id != id) continue;
      ++total;
      const int pred = q.score >= threshold ? 1 : 0;
      if (pred != q.true_label) ++wrong;
    }
    if (wrong > 0) {
      sum += static_cast<double>(wrong) / static_cast<double>(total);
      ++hit;
    }
  }
  return hit == 0 ? 0.0 : sum / static_cast<double>(hit);
}

/// Per-sample per-neuron MLP forward, written against the stated layer
/// semantics rather than the library's matrix routines.
inline std::vector<double> mlp_forward_reference(
    const mvc::EncoderParams& params, const std::vector<double>& input) {
  std::vector<double> act = input;
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const auto& layer = params.layers[l];
    std::vector<double> next(layer.weight.cols, 0.0);
    for (std::size_t j = 0; j < layer.weight.cols; ++j) {
      double acc = layer.bias[j];
      for (std::size_t i = 0; i < layer.weight.rows; ++i)
        acc += act[i] * layer.weight.at(i, j);
      const bool last = (l + 1 == params.layers.size());
      next[j] = last ? acc : std::max(0.0, acc);
    }
    act = std::move(next);
  }
  return act;
}

/// Plain full-batch logistic regression, used to certify that synthetic
/// data is linearly separable at the expected level.
inline double logistic_fit_accuracy(const mvc::Matrix& x,
                                    const std::vector<int>& y,
                                    std::size_t iters = 2000,
                                    double lr = 0.05) {
  std::vector<double> w(x.cols, 0.0);
  double b = 0.0;
  const double inv_n = 1.0 / static_cast<double>(x.rows);
  for (std::size_t it = 0; it < iters; ++it) {
    std::vector<double> gw(x.cols, 0.0);
    double gb = 0.0;
    for (std::size_t i = 0; i < x.rows; ++i) {
      double z = b;
      for (std::size_t d = 0; d < x.cols; ++d) z += w[d] * x.at(i, d);
      const double p = 1.0 / (1.0 + std::exp(-z));
      const double g = (p - y[i]) * inv_n;
      for (std::size_t d = 0; d < x.cols; ++d) gw[d] += g * x.at(i, d);
      gb += g;
    }
    for (std::size_t d = 0; d < x.cols; ++d) w[d] -= lr * gw[d];
    b -= lr * gb;
  }
  std::size_t correct = 0;
  for (std::size_t i = 0; i < x.rows; ++i) {
    double z = b;
    for (std::size_t d = 0; d < x.cols; ++d) z += w[d] * x.at(i, d);
    if ((z >= 0.0 ? 1 : 0) == y[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(x.rows);
}

}  // namespace oracles
