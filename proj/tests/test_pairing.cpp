#include <doctest.h>

#include <algorithm>
#include <set>

#include "mvc/pairing.hpp"
#include "mvc/rng.hpp"

using namespace mvc;

namespace {

BatchLabels random_batch(Rng& rng, std::size_t n, std::size_t max_lesions) {
  BatchLabels labels;
  std::vector<int> lesion_class(max_lesions);
  for (auto& c : lesion_class) c = static_cast<int>(rng.uniform_below(2));
  for (std::size_t i = 0; i < n; ++i) {
    const int lesion = static_cast<int>(rng.uniform_below(max_lesions));
    labels.lesion_ids.push_back(lesion);
    labels.class_labels.push_back(lesion_class[lesion]);
  }
  return labels;
}

std::set<int> as_set(const std::vector<int>& v) { return {v.begin(), v.end()}; }

}  // namespace

TEST_CASE("LR pairs on the canonical [A,A,B,B] batch") {
  BatchLabels labels{{0, 0, 1, 1}, {1, 1, 0, 0}};
  const PairSets lr = build_pairs(PairVariant::LR, labels);
  CHECK(as_set(lr.positives[0]) == std::set<int>{0, 1});
  CHECK(as_set(lr.negatives[0]) == std::set<int>{2, 3});

  const PairSets ir = build_pairs(PairVariant::IR, labels);
  CHECK(as_set(ir.positives[0]) == std::set<int>{0});
  CHECK(as_set(ir.negatives[0]) == std::set<int>{1, 2, 3});
}

TEST_CASE("LR(-SC) removes only same-class negatives") {
  BatchLabels same_class_absent{{0, 0, 1, 1}, {1, 1, 0, 0}};
  const PairSets a = build_pairs(PairVariant::LRMinusSC, same_class_absent);
  CHECK(as_set(a.negatives[0]) == std::set<int>{2, 3});

  BatchLabels with_same_class{{0, 0, 2, 1}, {1, 1, 1, 0}};
  const PairSets b = build_pairs(PairVariant::LRMinusSC, with_same_class);
  CHECK(as_set(b.negatives[0]) == std::set<int>{3});

  const PairSets c = build_pairs(PairVariant::LRMinusDC, with_same_class);
  CHECK(as_set(c.negatives[0]) == std::set<int>{2});
}

TEST_CASE("LR(-) empties every negative set") {
  Rng rng(4);
  for (int rep = 0; rep < 10; ++rep) {
    const BatchLabels labels = random_batch(rng, 8, 4);
    const PairSets sets = build_pairs(PairVariant::LRMinusAll, labels);
    for (const auto& neg : sets.negatives) CHECK(neg.empty());
    for (const auto& pos : sets.positives) CHECK(!pos.empty());
  }
}

TEST_CASE("inconsistent lesion->class mapping is rejected") {
  BatchLabels bad{{0, 0}, {1, 0}};
  CHECK_THROWS_AS(build_pairs(PairVariant::LR, bad), std::invalid_argument);
  BatchLabels empty{{}, {}};
  CHECK_THROWS_AS(build_pairs(PairVariant::LR, empty), std::invalid_argument);
}

TEST_CASE("LR degrades into IR when every lesion is unique") {
  Rng rng(9);
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t n = 2 + rng.uniform_below(7);
    BatchLabels labels;
    for (std::size_t i = 0; i < n; ++i) {
      labels.lesion_ids.push_back(static_cast<int>(i));
      labels.class_labels.push_back(static_cast<int>(rng.uniform_below(2)));
    }
    const PairSets lr = build_pairs(PairVariant::LR, labels);
    const PairSets ir = build_pairs(PairVariant::IR, labels);
    CHECK(lr.positives == ir.positives);
    CHECK(lr.negatives == ir.negatives);
  }
}

TEST_CASE("LR(-SC) and LR(-DC) negatives partition LR negatives") {
  Rng rng(13);
  for (int rep = 0; rep < 50; ++rep) {
    const BatchLabels labels = random_batch(rng, 10, 5);
    const PairSets lr = build_pairs(PairVariant::LR, labels);
    const PairSets sc = build_pairs(PairVariant::LRMinusSC, labels);
    const PairSets dc = build_pairs(PairVariant::LRMinusDC, labels);
    for (std::size_t i = 0; i < labels.size(); ++i) {
      std::set<int> merged = as_set(sc.negatives[i]);
      for (int k : dc.negatives[i]) {
        CHECK(merged.count(k) == 0);  // disjoint
        merged.insert(k);
      }
      CHECK(merged == as_set(lr.negatives[i]));
    }
  }
}

TEST_CASE("pair sets respect basic invariants for all variants") {
  Rng rng(21);
  const PairVariant variants[] = {PairVariant::LR, PairVariant::IR,
                                  PairVariant::LRMinusSC, PairVariant::LRMinusDC,
                                  PairVariant::LRMinusAll};
  for (int rep = 0; rep < 30; ++rep) {
    const BatchLabels labels = random_batch(rng, 12, 4);
    for (PairVariant v : variants) {
      const PairSets sets = build_pairs(v, labels);
      for (std::size_t i = 0; i < labels.size(); ++i) {
        // anchor's own second augmentation is positive under dual views
        CHECK(std::count(sets.positives[i].begin(), sets.positives[i].end(),
                         static_cast<int>(i)) == 1);
        const auto pos = as_set(sets.positives[i]);
        for (int k : sets.negatives[i]) {
          CHECK(pos.count(k) == 0);
          CHECK(k >= 0);
          CHECK(k < static_cast<int>(labels.size()));
        }
      }
    }
  }
}

TEST_CASE("permuting the batch permutes the pair sets consistently") {
  Rng rng(31);
  const BatchLabels labels = random_batch(rng, 9, 4);
  std::vector<int> perm(labels.size());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = static_cast<int>(i);
  rng.shuffle(perm);

  BatchLabels shuffled;
  shuffled.lesion_ids.resize(labels.size());
  shuffled.class_labels.resize(labels.size());
  for (std::size_t i = 0; i < perm.size(); ++i) {
    shuffled.lesion_ids[perm[i]] = labels.lesion_ids[i];
    shuffled.class_labels[perm[i]] = labels.class_labels[i];
  }
  for (PairVariant v : {PairVariant::LR, PairVariant::IR, PairVariant::LRMinusSC}) {
    const PairSets base = build_pairs(v, labels);
    const PairSets moved = build_pairs(v, shuffled);
    for (std::size_t i = 0; i < labels.size(); ++i) {
      std::set<int> expected_pos, expected_neg;
      for (int k : base.positives[i]) expected_pos.insert(perm[k]);
      for (int k : base.negatives[i]) expected_neg.insert(perm[k]);
      CHECK(as_set(moved.positives[perm[i]]) == expected_pos);
      CHECK(as_set(moved.negatives[perm[i]]) == expected_neg);
    }
  }
}

TEST_CASE("single-view mode excludes the anchor") {
  BatchLabels labels{{0, 0, 1, 1}, {1, 1, 0, 0}};
  const PairSets lr = build_pairs(PairVariant::LR, labels, ViewMode::Single);
  CHECK(as_set(lr.positives[0]) == std::set<int>{1});
  CHECK(as_set(lr.negatives[0]) == std::set<int>{2, 3});
  const PairSets ir = build_pairs(PairVariant::IR, labels, ViewMode::Single);
  CHECK(ir.positives[0].empty());
  CHECK(as_set(ir.negatives[0]) == std::set<int>{1, 2, 3});
}

TEST_CASE("variant names round-trip through the parser") {
  for (PairVariant v : {PairVariant::LR, PairVariant::IR, PairVariant::LRMinusSC,
                        PairVariant::LRMinusDC, PairVariant::LRMinusAll})
    CHECK(parse_variant(variant_name(v)) == v);
  CHECK(parse_variant("lr-sc") == PairVariant::LRMinusSC);
  CHECK_THROWS_AS(parse_variant("nope"), std::invalid_argument);
}
