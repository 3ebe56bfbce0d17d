#include "mvc/sampling.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace mvc {

std::vector<SampledView> sample_batch(
    const std::vector<std::size_t>& views_per_lesion, const BatchSpec& spec,
    Rng& rng) {
  if (spec.groups_per_batch < 1 || spec.views_per_group < 1)
    throw std::invalid_argument("sample_batch: batch spec must be >= 1");
  if (views_per_lesion.size() < spec.groups_per_batch)
    throw std::runtime_error(
        "sample_batch: fewer lesions than groups_per_batch");

  // Partial Fisher-Yates for the lesion draw.
  std::vector<std::size_t> order(views_per_lesion.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<std::size_t> chosen;
  for (std::size_t g = 0; g < spec.groups_per_batch; ++g) {
    const std::size_t j =
        g + static_cast<std::size_t>(rng.uniform_below(order.size() - g));
    std::swap(order[g], order[j]);
    chosen.push_back(order[g]);
  }

  std::vector<SampledView> batch;
  batch.reserve(spec.batch_size());
  std::vector<std::size_t> views;
  for (std::size_t lesion : chosen) {
    const std::size_t v = views_per_lesion[lesion];
    if (v == 0) throw std::runtime_error("sample_batch: lesion has no views");
    views.clear();
    if (v >= spec.views_per_group) {
      std::vector<std::size_t> pool(v);
      std::iota(pool.begin(), pool.end(), 0);
      for (std::size_t s = 0; s < spec.views_per_group; ++s) {
        const std::size_t j =
            s + static_cast<std::size_t>(rng.uniform_below(pool.size() - s));
        std::swap(pool[s], pool[j]);
        views.push_back(pool[s]);
      }
    } else {
      // Every view appears at least once; the rest are replacement draws.
      for (std::size_t s = 0; s < v; ++s) views.push_back(s);
      for (std::size_t s = v; s < spec.views_per_group; ++s)
        views.push_back(static_cast<std::size_t>(rng.uniform_below(v)));
      rng.shuffle(views);
    }
    for (std::size_t view : views) batch.push_back({lesion, view});
  }
  return batch;
}

FoldSplit kfold_split(std::vector<std::string> lesion_ids, std::size_t k,
                      Rng& rng) {
  if (k < 1) throw std::invalid_argument("kfold_split: k must be >= 1");
  std::sort(lesion_ids.begin(), lesion_ids.end());
  lesion_ids.erase(std::unique(lesion_ids.begin(), lesion_ids.end()),
                   lesion_ids.end());
  if (lesion_ids.size() < k)
    throw std::invalid_argument("kfold_split: more folds than lesions");
  rng.shuffle(lesion_ids);
  FoldSplit split;
  split.fold_count = k;
  for (std::size_t i = 0; i < lesion_ids.size(); ++i)
    split.assignment.emplace(lesion_ids[i], i % k);
  return split;
}

}  // namespace mvc
