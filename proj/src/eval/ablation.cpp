#include "tcpid/eval/ablation.hpp"

#include <algorithm>
#include <stdexcept>

namespace tcpid::eval {

std::vector<std::vector<std::string>> default_subsets(const std::vector<std::string>& channels) {
  std::vector<std::vector<std::string>> out{channels};
  for (const auto& c : channels) out.push_back({c});
  return out;
}

std::string subset_key(const std::vector<std::string>& channels) {
  std::string key;
  for (const auto& c : channels) {
    if (!key.empty()) key += '+';
    key += c;
  }
  return key;
}

std::vector<AblationRun> ablate(const preprocess::Dataset& train, const preprocess::Dataset& test,
                                const std::vector<std::vector<std::string>>& subsets,
                                const TrainAndPredict& fit) {
  for (const auto& subset : subsets) {
    if (subset.empty()) throw std::invalid_argument("ablation subset is empty");
    for (const auto& name : subset) {
      if (std::find(train.channels.begin(), train.channels.end(), name) == train.channels.end()) {
        throw std::invalid_argument("ablation: unknown channel '" + name + "'");
      }
    }
  }
  std::vector<AblationRun> runs;
  for (const auto& subset : subsets) {
    const auto tr = preprocess::select_channels(train, subset);
    const auto te = preprocess::select_channels(test, subset);
    const auto preds = fit(tr, te);
    const auto truth = te.labels();
    AblationRun run;
    run.channels = subset;
    run.confusion = confusion(preds, truth);
    const Metrics m = prf1(run.confusion);
    run.accuracy = m.accuracy;
    for (const auto& c : m.per_class) run.class_recall.push_back(c.recall);
    runs.push_back(std::move(run));
  }
  return runs;
}

}  // namespace tcpid::eval
