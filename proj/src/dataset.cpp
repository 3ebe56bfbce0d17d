#include "mvc/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "binary_io.hpp"

namespace mvc {

namespace {

constexpr char kMagic[4] = {'M', 'V', 'C', '1'};

using io::append_f64_le;
using io::append_u32_le;
using io::read_f64_le;
using io::read_u32_le;

/// Haar-uniform orthonormal view_dim × latent_dim frame: Gaussian columns
/// orthonormalized by modified Gram-Schmidt.
std::vector<std::vector<double>> random_orthonormal_columns(
    std::size_t view_dim, std::size_t latent_dim, Rng& rng) {
  std::vector<std::vector<double>> cols(latent_dim,
                                        std::vector<double>(view_dim));
  for (auto& c : cols)
    for (auto& x : c) x = rng.normal();
  for (std::size_t j = 0; j < latent_dim; ++j) {
    for (std::size_t prev = 0; prev < j; ++prev) {
      double dot = 0.0;
      for (std::size_t d = 0; d < view_dim; ++d) dot += cols[j][d] * cols[prev][d];
      for (std::size_t d = 0; d < view_dim; ++d) cols[j][d] -= dot * cols[prev][d];
    }
    double sq = 0.0;
    for (double x : cols[j]) sq += x * x;
    const double inv = 1.0 / std::sqrt(sq);
    for (auto& x : cols[j]) x *= inv;
  }
  return cols;
}

std::vector<double> parse_text_views_line(const std::string& line) {
  std::istringstream ss(line);
  std::vector<double> row;
  double x;
  while (ss >> x) row.push_back(x);
  return row;
}

}  // namespace

std::vector<LesionRecord> generate_synthetic(const SynthConfig& config) {
  if (config.latent_dim < 1 || config.view_dim < 1)
    throw std::invalid_argument("generate_synthetic: dims must be >= 1");
  if (config.view_dim < config.latent_dim)
    throw std::invalid_argument(
        "generate_synthetic: view_dim must be >= latent_dim");
  if (config.class_separation < 0.0 || config.view_noise_sigma < 0.0)
    throw std::invalid_argument(
        "generate_synthetic: separation and sigma must be >= 0");
  if (config.min_views < 1 || config.min_views > config.max_views)
    throw std::invalid_argument(
        "generate_synthetic: need 1 <= min_views <= max_views");

  Rng rng(derive_seed(config.seed, 0xDA7A));

  // Class means sit at ±separation/2 along a random latent direction.
  std::vector<double> axis(config.latent_dim);
  double sq = 0.0;
  for (auto& x : axis) {
    x = rng.normal();
    sq += x * x;
  }
  const double inv_norm = 1.0 / std::sqrt(sq);
  for (auto& x : axis) x *= inv_norm;

  const auto frame =
      random_orthonormal_columns(config.view_dim, config.latent_dim, rng);

  std::vector<LesionRecord> records;
  for (int label = 0; label <= 1; ++label) {
    const std::size_t count =
        label == 0 ? config.benign_lesions : config.malignant_lesions;
    const double mean_scale =
        (label == 0 ? -0.5 : 0.5) * config.class_separation;
    for (std::size_t l = 0; l < count; ++l) {
      LesionRecord rec;
      char idbuf[32];
      std::snprintf(idbuf, sizeof(idbuf), "%c%04zu", label == 0 ? 'B' : 'M', l);
      rec.lesion_id = idbuf;
      rec.label = label;

      std::vector<double> latent(config.latent_dim);
      for (std::size_t d = 0; d < config.latent_dim; ++d)
        latent[d] = mean_scale * axis[d] + rng.normal();

      const std::size_t n_views =
          config.min_views +
          static_cast<std::size_t>(
              rng.uniform_below(config.max_views - config.min_views + 1));
      for (std::size_t v = 0; v < n_views; ++v) {
        std::vector<double> view(config.view_dim, 0.0);
        for (std::size_t j = 0; j < config.latent_dim; ++j)
          for (std::size_t d = 0; d < config.view_dim; ++d)
            view[d] += frame[j][d] * latent[j];
        if (config.view_noise_sigma > 0.0)
          for (auto& x : view) x += rng.normal() * config.view_noise_sigma;
        rec.views.push_back(std::move(view));
      }
      records.push_back(std::move(rec));
    }
  }
  return records;
}

std::vector<double> augment_view(const std::vector<double>& v,
                                 const AugmentConfig& config, Rng& rng) {
  std::vector<double> out = v;
  if (config.noise_sigma > 0.0)
    for (auto& x : out) x += rng.normal() * config.noise_sigma;
  if (config.dropout_prob > 0.0)
    for (auto& x : out)
      if (rng.uniform01() < config.dropout_prob) x = 0.0;
  return out;
}

std::filesystem::path save_dataset(const std::vector<LesionRecord>& records,
                                   const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir / "features");
  const auto manifest_path = dir / "manifest.csv";
  std::ofstream manifest(manifest_path, std::ios::trunc);
  if (!manifest)
    throw std::runtime_error("save_dataset: cannot write " +
                             manifest_path.string());
  manifest << "lesion_id,label,feature_path\n";
  std::size_t index = 0;
  for (const auto& rec : records) {
    char namebuf[32];
    std::snprintf(namebuf, sizeof(namebuf), "features/%06zu.mvc", index++);
    const std::size_t dim = rec.views.empty() ? 0 : rec.views.front().size();
    std::string blob;
    blob.append(kMagic, 4);
    append_u32_le(blob, static_cast<std::uint32_t>(rec.views.size()));
    append_u32_le(blob, static_cast<std::uint32_t>(dim));
    for (const auto& view : rec.views) {
      if (view.size() != dim)
        throw std::runtime_error("save_dataset: ragged views in lesion " +
                                 rec.lesion_id);
      for (double x : view) append_f64_le(blob, x);
    }
    std::ofstream feat(dir / namebuf, std::ios::binary | std::ios::trunc);
    if (!feat)
      throw std::runtime_error("save_dataset: cannot write feature file");
    feat.write(blob.data(), static_cast<std::streamsize>(blob.size()));
    manifest << rec.lesion_id << ',' << rec.label << ',' << namebuf << '\n';
  }
  return manifest_path;
}

static std::vector<std::vector<double>> load_feature_file(
    const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw std::runtime_error("load_manifest: missing feature file " +
                             path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  if (bytes.size() >= 12 && std::memcmp(bytes.data(), kMagic, 4) == 0) {
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
    const std::uint32_t view_count = read_u32_le(p + 4);
    const std::uint32_t dim = read_u32_le(p + 8);
    const std::size_t need = 12 + 8ULL * view_count * dim;
    if (bytes.size() != need)
      throw std::runtime_error("load_manifest: truncated binary feature file " +
                               path.string());
    std::vector<std::vector<double>> views(view_count,
                                           std::vector<double>(dim));
    std::size_t off = 12;
    for (auto& view : views)
      for (auto& x : view) {
        x = read_f64_le(p + off);
        off += 8;
      }
    return views;
  }
  // Text fallback: one whitespace-separated view per line.
  std::vector<std::vector<double>> views;
  std::istringstream ss(bytes);
  std::string line;
  while (std::getline(ss, line)) {
    auto row = parse_text_views_line(line);
    if (!row.empty()) views.push_back(std::move(row));
  }
  if (views.empty())
    throw std::runtime_error("load_manifest: feature file " + path.string() +
                             " holds no views");
  return views;
}

std::vector<LesionRecord> load_manifest(
    const std::filesystem::path& manifest) {
  std::ifstream in(manifest);
  if (!in)
    throw std::runtime_error("load_manifest: cannot open " +
                             manifest.string());
  const auto base = manifest.parent_path();
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("load_manifest: empty manifest");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "lesion_id,label,feature_path")
    throw std::runtime_error("load_manifest: unexpected header: " + line);

  std::vector<LesionRecord> records;
  std::map<std::string, std::size_t> index_of;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto c1 = line.find(',');
    const auto c2 = line.find(',', c1 == std::string::npos ? c1 : c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos)
      throw std::runtime_error("load_manifest: malformed row at line " +
                               std::to_string(line_no));
    const std::string id = line.substr(0, c1);
    const std::string label_str = line.substr(c1 + 1, c2 - c1 - 1);
    const std::string rel = line.substr(c2 + 1);
    int label;
    if (label_str == "0")
      label = 0;
    else if (label_str == "1")
      label = 1;
    else
      throw std::runtime_error("load_manifest: label must be 0 or 1 at line " +
                               std::to_string(line_no));

    std::filesystem::path feature_path(rel);
    if (feature_path.is_relative()) feature_path = base / feature_path;
    auto views = load_feature_file(feature_path);

    auto it = index_of.find(id);
    if (it == index_of.end()) {
      index_of.emplace(id, records.size());
      records.push_back({id, label, std::move(views)});
    } else {
      LesionRecord& rec = records[it->second];
      if (rec.label != label)
        throw std::runtime_error("load_manifest: lesion " + id +
                                 " labeled both 0 and 1");
      for (auto& v : views) rec.views.push_back(std::move(v));
    }
  }
  if (records.empty())
    throw std::runtime_error("load_manifest: manifest has no data rows");
  for (const auto& rec : records) {
    const std::size_t dim = rec.views.front().size();
    for (const auto& v : rec.views)
      if (v.size() != dim)
        throw std::runtime_error("load_manifest: lesion " + rec.lesion_id +
                                 " mixes view dimensions");
  }
  return records;
}

std::uint64_t dataset_fingerprint(const std::vector<LesionRecord>& records) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  auto mix = [&h](const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= p[i];
      h *= 0x100000001B3ULL;
    }
  };
  for (const auto& rec : records) {
    mix(rec.lesion_id.data(), rec.lesion_id.size());
    const unsigned char label = static_cast<unsigned char>(rec.label);
    mix(&label, 1);
    const std::uint64_t nviews = rec.views.size();
    mix(&nviews, 8);
    for (const auto& view : rec.views) {
      const std::uint64_t dim = view.size();
      mix(&dim, 8);
      for (double x : view) {
        std::uint64_t bits;
        std::memcpy(&bits, &x, 8);
        mix(&bits, 8);
      }
    }
  }
  return h;
}

std::size_t total_view_count(const std::vector<LesionRecord>& records) {
  std::size_t n = 0;
  for (const auto& rec : records) n += rec.views.size();
  return n;
}

FlatViews flatten_views(const std::vector<LesionRecord>& records) {
  if (records.empty())
    throw std::invalid_argument("flatten_views: no records");
  std::size_t dim = 0;
  for (const auto& rec : records)
    if (!rec.views.empty()) {
      dim = rec.views.front().size();
      break;
    }
  if (dim == 0) throw std::invalid_argument("flatten_views: no views");
  FlatViews flat;
  flat.X = Matrix(total_view_count(records), dim);
  std::size_t row = 0;
  for (const auto& rec : records)
    for (const auto& view : rec.views) {
      if (view.size() != dim)
        throw std::invalid_argument("flatten_views: view dimension mismatch in "
                                    "lesion " + rec.lesion_id);
      std::copy(view.begin(), view.end(), flat.X.row(row).begin());
      flat.labels.push_back(rec.label);
      flat.lesion_ids.push_back(rec.lesion_id);
      ++row;
    }
  return flat;
}

}  // namespace mvc
