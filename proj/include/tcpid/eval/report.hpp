#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "tcpid/eval/ablation.hpp"
#include "tcpid/eval/metrics.hpp"

namespace tcpid::eval {

// Plain-text tables: confusion counts, and precision/recall/f1/support per
// class followed by accuracy, macro and weighted averages.
std::string confusion_table(const ConfusionMatrix& cm);
std::string metrics_table(const Metrics& m);
std::string ablation_table(const std::vector<AblationRun>& runs);

std::string confusion_csv(const ConfusionMatrix& cm);
std::string metrics_csv(const Metrics& m);
std::string ablation_csv(const std::vector<AblationRun>& runs);

nlohmann::json to_json(const ConfusionMatrix& cm);
nlohmann::json to_json(const Metrics& m);
nlohmann::json to_json(const std::vector<AblationRun>& runs);

}  // namespace tcpid::eval
