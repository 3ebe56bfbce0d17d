#include "mvc/report.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace mvc {

namespace {

nlohmann::json number_or_null(double x) {
  if (std::isnan(x)) return nullptr;
  return x;
}

std::string percent_cell(double mean, double std) {
  if (std::isnan(mean)) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f±%.1f", 100.0 * mean, 100.0 * std);
  return buf;
}

/// Column width in code points, not bytes (± is two bytes wide on disk).
std::size_t display_width(const std::string& s) {
  std::size_t w = 0;
  for (unsigned char c : s)
    if ((c & 0xC0) != 0x80) ++w;
  return w;
}

}  // namespace

nlohmann::json to_json(const MetricsReport& report) {
  // Flat key-value object; undefined metrics surface as null.
  return {
      {"auc", number_or_null(report.auc)},
      {"acc", number_or_null(report.acc)},
      {"sensitivity", number_or_null(report.sensitivity)},
      {"precision", number_or_null(report.precision)},
      {"specificity", number_or_null(report.specificity)},
      {"f1", number_or_null(report.f1)},
      {"mcr", number_or_null(report.mcr)},
      {"knn_auc", number_or_null(report.knn_auc)},
      {"lesion_acc", number_or_null(report.lesion_acc)},
      {"tp", report.tp},
      {"fp", report.fp},
      {"tn", report.tn},
      {"fn", report.fn},
  };
}

nlohmann::json to_json(const TrainConfig& config) {
  return {
      {"variant", variant_name(config.variant)},
      {"alpha", config.alpha},
      {"temperature", config.temperature},
      {"epochs", config.epochs},
      {"base_lr", config.base_lr},
      {"groups_per_batch", config.batch.groups_per_batch},
      {"views_per_group", config.batch.views_per_group},
      {"augment_noise_sigma", config.augment.noise_sigma},
      {"augment_dropout_prob", config.augment.dropout_prob},
      {"seed", config.seed},
      {"dual_view", config.dual_view},
      {"contrastive_enabled", config.contrastive_enabled},
      {"normalize_positives", config.normalize_positives},
      {"hidden_dims", config.hidden_dims},
      {"embed_dim", config.embed_dim},
      {"threshold", config.threshold},
      {"knn_k", config.knn.k},
      {"knn_temperature", config.knn.knn_temperature},
  };
}

nlohmann::json to_json(const RunResult& result) {
  nlohmann::json folds = nlohmann::json::array();
  for (const auto& fold : result.folds) folds.push_back(to_json(fold));
  return {
      {"label", result.label},
      {"config", to_json(result.config)},
      {"fold_count", result.fold_count},
      {"folds", folds},
      {"mean", to_json(result.mean)},
      {"std", to_json(result.stddev)},
      {"loss_curves", result.loss_curves},
      {"skipped_anchors", result.skipped_anchors},
  };
}

std::string render_comparison_table(const std::vector<RunResult>& rows) {
  static const char* kColumns[] = {"AUC",         "ACC", "Sensitivity",
                                   "Precision",   "Specificity",
                                   "F1",          "MCR"};
  std::vector<std::vector<std::string>> cells;
  cells.push_back({"Method"});
  for (const char* c : kColumns) cells.back().push_back(c);
  for (const auto& row : rows) {
    std::vector<std::string> line{row.label};
    const MetricsReport& m = row.mean;
    const MetricsReport& s = row.stddev;
    line.push_back(percent_cell(m.auc, s.auc));
    line.push_back(percent_cell(m.acc, s.acc));
    line.push_back(percent_cell(m.sensitivity, s.sensitivity));
    line.push_back(percent_cell(m.precision, s.precision));
    line.push_back(percent_cell(m.specificity, s.specificity));
    line.push_back(percent_cell(m.f1, s.f1));
    line.push_back(percent_cell(m.mcr, s.mcr));
    cells.push_back(std::move(line));
  }
  std::vector<std::size_t> widths(cells.front().size(), 0);
  for (const auto& line : cells)
    for (std::size_t c = 0; c < line.size(); ++c)
      widths[c] = std::max(widths[c], display_width(line[c]));
  std::ostringstream out;
  for (const auto& line : cells) {
    for (std::size_t c = 0; c < line.size(); ++c) {
      out << line[c];
      if (c + 1 < line.size())
        out << std::string(widths[c] - display_width(line[c]) + 2, ' ');
    }
    out << '\n';
  }
  return out.str();
}

std::string render_knn_csv(
    const std::vector<std::pair<std::size_t, double>>& series) {
  std::ostringstream out;
  out.precision(10);
  out << "k,auc\n";
  for (const auto& [k, auc] : series) out << k << ',' << auc << '\n';
  return out.str();
}

}  // namespace mvc
