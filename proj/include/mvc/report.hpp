#pragma once

#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mvc/evaluation.hpp"
#include "mvc/trainer.hpp"

namespace mvc {

/// NaN metric fields serialize as null.
nlohmann::json to_json(const MetricsReport& report);
nlohmann::json to_json(const TrainConfig& config);
nlohmann::json to_json(const RunResult& result);

/// Aligned comparison table, one row per run, mean±std in percent:
///   Method     AUC       ACC       Sensitivity ...
///   LR         96.2±1.0  89.1±1.9  ...
std::string render_comparison_table(const std::vector<RunResult>& rows);

/// Two-column plot series "k,auc".
std::string render_knn_csv(
    const std::vector<std::pair<std::size_t, double>>& series);

}  // namespace mvc
