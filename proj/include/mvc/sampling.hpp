#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "mvc/rng.hpp"

namespace mvc {

/// Lesion-grouped mini-batch geometry: groups_per_batch lesions ×
/// views_per_group views each.
struct BatchSpec {
  std::size_t groups_per_batch = 8;
  std::size_t views_per_group = 8;
  std::size_t batch_size() const { return groups_per_batch * views_per_group; }
};

struct SampledView {
  std::size_t lesion;  // index into the training record vector
  std::size_t view;    // index into that lesion's view list
};

/// Draws groups_per_batch distinct lesions uniformly without replacement,
/// then views_per_group views per lesion: without replacement when the
/// lesion has enough views; otherwise every view appears at least once
/// and the remaining slots are drawn with replacement.
std::vector<SampledView> sample_batch(
    const std::vector<std::size_t>& views_per_lesion, const BatchSpec& spec,
    Rng& rng);

/// Lesion-level fold assignment; all images of a lesion share its fold.
struct FoldSplit {
  std::size_t fold_count = 5;
  std::map<std::string, std::size_t> assignment;
};

/// Random disjoint folds covering all lesions, sizes differing by at most
/// one. Input order does not matter: ids are sorted before shuffling, so
/// the split is a pure function of (id set, k, seed).
FoldSplit kfold_split(std::vector<std::string> lesion_ids, std::size_t k,
                      Rng& rng);

}  // namespace mvc
