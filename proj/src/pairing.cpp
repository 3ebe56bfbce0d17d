#include "mvc/pairing.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <stdexcept>

namespace mvc {

void BatchLabels::validate() const {
  if (lesion_ids.empty())
    throw std::invalid_argument("BatchLabels: empty batch");
  if (lesion_ids.size() != class_labels.size())
    throw std::invalid_argument("BatchLabels: id/label length mismatch");
  std::map<int, int> lesion_class;
  for (std::size_t i = 0; i < lesion_ids.size(); ++i) {
    if (class_labels[i] != 0 && class_labels[i] != 1)
      throw std::invalid_argument("BatchLabels: label must be 0 or 1");
    auto [it, inserted] = lesion_class.emplace(lesion_ids[i], class_labels[i]);
    if (!inserted && it->second != class_labels[i])
      throw std::invalid_argument(
          "BatchLabels: lesion " + std::to_string(lesion_ids[i]) +
          " maps to two different class labels");
  }
}

PairSets build_pairs(PairVariant variant, const BatchLabels& labels,
                     ViewMode mode) {
  labels.validate();
  const int n = static_cast<int>(labels.size());
  PairSets sets;
  sets.positives.resize(n);
  sets.negatives.resize(n);
  const bool dual = (mode == ViewMode::Dual);
  for (int i = 0; i < n; ++i) {
    auto& pos = sets.positives[i];
    auto& neg = sets.negatives[i];
    for (int k = 0; k < n; ++k) {
      const bool same_lesion = labels.lesion_ids[k] == labels.lesion_ids[i];
      const bool same_class = labels.class_labels[k] == labels.class_labels[i];
      switch (variant) {
        case PairVariant::IR:
          if (k == i) {
            if (dual) pos.push_back(k);
          } else {
            neg.push_back(k);
          }
          break;
        case PairVariant::LR:
        case PairVariant::LRMinusSC:
        case PairVariant::LRMinusDC:
        case PairVariant::LRMinusAll:
          if (same_lesion) {
            if (dual || k != i) pos.push_back(k);
          } else {
            const bool keep =
                variant == PairVariant::LR ||
                (variant == PairVariant::LRMinusSC && !same_class) ||
                (variant == PairVariant::LRMinusDC && same_class);
            if (keep) neg.push_back(k);
          }
          break;
      }
    }
  }
  return sets;
}

std::string variant_name(PairVariant v) {
  switch (v) {
    case PairVariant::LR: return "LR";
    case PairVariant::IR: return "IR";
    case PairVariant::LRMinusSC: return "LR(-SC)";
    case PairVariant::LRMinusDC: return "LR(-DC)";
    case PairVariant::LRMinusAll: return "LR(-)";
  }
  return "?";
}

PairVariant parse_variant(const std::string& name) {
  std::string s;
  for (char c : name) s += static_cast<char>(std::tolower(c));
  if (s == "lr") return PairVariant::LR;
  if (s == "ir") return PairVariant::IR;
  if (s == "lr-sc" || s == "lr(-sc)") return PairVariant::LRMinusSC;
  if (s == "lr-dc" || s == "lr(-dc)") return PairVariant::LRMinusDC;
  if (s == "lr-none" || s == "lr(-)" || s == "lr-minus")
    return PairVariant::LRMinusAll;
  throw std::invalid_argument("unknown pair variant: " + name);
}

}  // namespace mvc
