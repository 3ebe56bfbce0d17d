#include "mvc/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mvc {

SimilarityMatrix cosine_similarity_matrix(const Matrix& anchors,
                                          const Matrix& candidates) {
  if (anchors.cols != candidates.cols)
    throw std::invalid_argument(
        "cosine_similarity_matrix: embedding dimension mismatch");
  return {matmul_trans_b(anchors, candidates)};
}

LossOutput contrastive_loss(const Matrix& anchors, const Matrix& candidates,
                            const PairSets& pairs, double temperature,
                            bool normalize_positives) {
  if (temperature <= 0.0)
    throw std::invalid_argument("contrastive_loss: temperature must be > 0");
  const std::size_t n = anchors.rows;
  if (pairs.positives.size() != n || pairs.negatives.size() != n)
    throw std::invalid_argument("contrastive_loss: pair sets do not match "
                                "anchor count");
  auto check_indices = [&](const std::vector<std::vector<int>>& lists) {
    for (const auto& idx : lists)
      for (int k : idx)
        if (k < 0 || static_cast<std::size_t>(k) >= candidates.rows)
          throw std::invalid_argument(
              "contrastive_loss: pair index out of candidate range");
  };
  check_indices(pairs.positives);
  check_indices(pairs.negatives);

  const SimilarityMatrix sim = cosine_similarity_matrix(anchors, candidates);
  const double inv_tau = 1.0 / temperature;

  LossOutput out;
  out.grad_anchors = Matrix(anchors.rows, anchors.cols);
  out.grad_candidates = Matrix(candidates.rows, candidates.cols);
  out.per_anchor.assign(n, 0.0);

  const double inv_n = 1.0 / static_cast<double>(n);
  std::vector<int> members;
  std::vector<double> probs;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& pos = pairs.positives[i];
    const auto& neg = pairs.negatives[i];
    if (pos.empty()) {
      ++out.skipped_anchors;
      continue;
    }
    members.clear();
    members.insert(members.end(), pos.begin(), pos.end());
    members.insert(members.end(), neg.begin(), neg.end());

    // log-sum-exp with max subtraction
    double mx = -HUGE_VAL;
    for (int k : members) mx = std::max(mx, sim.values.at(i, k) * inv_tau);
    double denom = 0.0;
    probs.assign(members.size(), 0.0);
    for (std::size_t m = 0; m < members.size(); ++m) {
      probs[m] = std::exp(sim.values.at(i, members[m]) * inv_tau - mx);
      denom += probs[m];
    }
    const double log_denom = mx + std::log(denom);

    const double pos_weight =
        normalize_positives ? 1.0 / static_cast<double>(pos.size()) : 1.0;
    double term = 0.0;
    for (int j : pos) term += log_denom - sim.values.at(i, j) * inv_tau;
    term *= pos_weight;
    out.per_anchor[i] = term;
    out.value += term * inv_n;

    // d term / d s_ik = w·|P| softmax_ik - w·1[k∈P], w = pos_weight
    const double softmax_scale =
        pos_weight * static_cast<double>(pos.size()) / denom;
    for (std::size_t m = 0; m < members.size(); ++m) {
      const int k = members[m];
      double g = softmax_scale * probs[m];
      if (m < pos.size()) g -= pos_weight;
      g *= inv_n * inv_tau;
      for (std::size_t d = 0; d < anchors.cols; ++d) {
        out.grad_anchors.at(i, d) += g * candidates.at(k, d);
        out.grad_candidates.at(k, d) += g * anchors.at(i, d);
      }
    }
  }
  if (!std::isfinite(out.value))
    throw std::runtime_error("contrastive_loss: non-finite value");
  return out;
}

LossOutput binary_cross_entropy(const std::vector<double>& scores,
                                const std::vector<int>& labels) {
  if (scores.size() != labels.size())
    throw std::invalid_argument("binary_cross_entropy: length mismatch");
  if (scores.empty())
    throw std::invalid_argument("binary_cross_entropy: empty batch");
  const double inv_n = 1.0 / static_cast<double>(scores.size());
  LossOutput out;
  out.grad_logits.assign(scores.size(), 0.0);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const double p = std::clamp(scores[i], 1e-12, 1.0 - 1e-12);
    const double y = static_cast<double>(labels[i]);
    out.value -= (y * std::log(p) + (1.0 - y) * std::log(1.0 - p)) * inv_n;
    out.grad_logits[i] = (scores[i] - y) * inv_n;
  }
  return out;
}

LossOutput joint_loss(const LossOutput& cls, const LossOutput& con,
                      const JointLossConfig& config) {
  LossOutput out;
  out.value = cls.value + config.alpha * con.value;
  out.grad_logits = cls.grad_logits;
  out.grad_anchors = con.grad_anchors;
  for (auto& g : out.grad_anchors.data) g *= config.alpha;
  out.grad_candidates = con.grad_candidates;
  for (auto& g : out.grad_candidates.data) g *= config.alpha;
  out.skipped_anchors = con.skipped_anchors;
  return out;
}

}  // namespace mvc
