#pragma once

#include <string>
#include <vector>

namespace mvc {

/// Positive/negative set constructions for the contrastive loss.
///   LR          — positives are all views of the anchor's lesion.
///   IR          — each image is its own class; the only positive is the
///                 anchor's second augmentation.
///   LRMinusSC   — LR with same-class negatives removed.
///   LRMinusDC   — LR with different-class negatives removed.
///   LRMinusAll  — LR with no negatives at all.
enum class PairVariant { LR, IR, LRMinusSC, LRMinusDC, LRMinusAll };

/// Dual: anchors are view-A embeddings, candidates view-B; the anchor's
/// own second augmentation (index i) is always a positive.
/// Single: anchors == candidates; i is excluded from P(i) and the
/// denominator.
enum class ViewMode { Dual, Single };

/// Per-image lesion identity and class label for one mini-batch. Lesion
/// ids are opaque keys compared only for equality.
struct BatchLabels {
  std::vector<int> lesion_ids;
  std::vector<int> class_labels;  // 0 = benign, 1 = malignant

  std::size_t size() const { return lesion_ids.size(); }
  /// Throws std::invalid_argument when the arrays disagree in length or
  /// a lesion maps to two different class labels.
  void validate() const;
};

/// Index sets P(i) and N(i) over the candidate view of the batch.
struct PairSets {
  std::vector<std::vector<int>> positives;
  std::vector<std::vector<int>> negatives;
};

PairSets build_pairs(PairVariant variant, const BatchLabels& labels,
                     ViewMode mode = ViewMode::Dual);

std::string variant_name(PairVariant v);
PairVariant parse_variant(const std::string& name);

}  // namespace mvc
