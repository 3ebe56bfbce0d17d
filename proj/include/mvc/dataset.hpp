#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mvc/matrix.hpp"
#include "mvc/rng.hpp"

namespace mvc {

/// One lesion: identity, benign/malignant label, and its view vectors.
struct LesionRecord {
  std::string lesion_id;
  int label = 0;  // 0 = benign, 1 = malignant
  std::vector<std::vector<double>> views;
};

/// Synthetic multi-view generator settings. Views of a lesion are a shared
/// random orthonormal embedding of its latent plus per-view Gaussian noise,
/// so same-lesion views cluster and classes separate by class_separation.
struct SynthConfig {
  std::size_t latent_dim = 8;
  std::size_t view_dim = 16;
  double class_separation = 6.0;
  double view_noise_sigma = 0.5;
  std::size_t benign_lesions = 100;
  std::size_t malignant_lesions = 100;
  std::size_t min_views = 2;
  std::size_t max_views = 6;
  std::uint64_t seed = 0;
};

/// Vector-space augmentation: additive Gaussian noise followed by
/// independent coordinate dropout.
struct AugmentConfig {
  double noise_sigma = 0.0;
  double dropout_prob = 0.0;
};

/// Deterministic given config.seed.
std::vector<LesionRecord> generate_synthetic(const SynthConfig& config);

/// v' = mask ⊙ (v + η), η ~ N(0, noise_sigma²·I), mask ~ Bernoulli(1-p).
std::vector<double> augment_view(const std::vector<double>& v,
                                 const AugmentConfig& config, Rng& rng);

/// Writes manifest.csv (header lesion_id,label,feature_path) plus one
/// binary feature file per lesion into dir. Returns the manifest path.
std::filesystem::path save_dataset(const std::vector<LesionRecord>& records,
                                   const std::filesystem::path& dir);

/// Reads a manifest CSV; rows sharing a lesion_id are merged into one
/// record. Feature paths resolve relative to the manifest's directory and
/// may be binary (magic MVC1) or whitespace-separated text, one view per
/// line.
std::vector<LesionRecord> load_manifest(const std::filesystem::path& manifest);

/// FNV-1a over a canonical byte serialization of the records.
std::uint64_t dataset_fingerprint(const std::vector<LesionRecord>& records);

std::size_t total_view_count(const std::vector<LesionRecord>& records);

/// All views of all records stacked into one matrix, record order
/// preserved, with per-row labels and lesion ids alongside.
struct FlatViews {
  Matrix X;
  std::vector<int> labels;
  std::vector<std::string> lesion_ids;
};
FlatViews flatten_views(const std::vector<LesionRecord>& records);

}  // namespace mvc
