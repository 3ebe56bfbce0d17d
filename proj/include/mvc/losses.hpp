#pragma once

#include <vector>

#include "mvc/matrix.hpp"
#include "mvc/pairing.hpp"

namespace mvc {

/// Pairwise similarities, anchors × candidates. With unit-normalized rows
/// every entry is a cosine similarity.
struct SimilarityMatrix {
  Matrix values;
};

/// Scalar loss value plus the analytic gradients that apply to it.
/// Contrastive losses fill grad_anchors/grad_candidates and per_anchor;
/// classification fills grad_logits.
struct LossOutput {
  double value = 0.0;
  Matrix grad_anchors;
  Matrix grad_candidates;
  std::vector<double> grad_logits;
  std::vector<double> per_anchor;
  int skipped_anchors = 0;  // anchors with empty P(i), single-view only
};

struct JointLossConfig {
  double alpha = 0.5;
  double temperature = 1.0;
  bool normalize_positives = false;
};

/// values[i][k] = dot(anchor_i, candidate_k). Rows are expected to be
/// unit-normalized upstream.
SimilarityMatrix cosine_similarity_matrix(const Matrix& anchors,
                                          const Matrix& candidates);

/// Contrastive loss over arbitrary pair sets:
///   -(1/N_b) Σ_i Σ_{j∈P(i)} log softmax_{P(i)∪N(i)}(S(z_i,z_j)/τ)
/// The positive sum is unnormalized unless normalize_positives is set.
/// Anchors with empty P(i) contribute zero and are counted in
/// skipped_anchors; the averaging denominator stays N_b.
LossOutput contrastive_loss(const Matrix& anchors, const Matrix& candidates,
                            const PairSets& pairs, double temperature,
                            bool normalize_positives = false);

/// Mean binary cross-entropy over probabilities in (0,1); probabilities
/// are clamped to [1e-12, 1-1e-12] before the log. grad_logits is the
/// gradient w.r.t. pre-sigmoid logits, (p - y)/N_b.
LossOutput binary_cross_entropy(const std::vector<double>& scores,
                                const std::vector<int>& labels);

/// value = cls + α·con; gradients combine linearly.
LossOutput joint_loss(const LossOutput& cls, const LossOutput& con,
                      const JointLossConfig& config);

}  // namespace mvc
