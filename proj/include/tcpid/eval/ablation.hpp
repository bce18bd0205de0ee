#pragma once

#include <functional>
#include <string>
#include <vector>

#include "tcpid/eval/metrics.hpp"
#include "tcpid/preprocess/dataset.hpp"

namespace tcpid::eval {

// Trains on the first set and returns class predictions for every window of
// the second. Must be deterministic for a given input.
using TrainAndPredict =
    std::function<std::vector<int>(const preprocess::Dataset& train, const preprocess::Dataset& test)>;

struct AblationRun {
  std::vector<std::string> channels;
  ConfusionMatrix confusion;
  double accuracy = 0.0;
  std::vector<double> class_recall;  // per-class accuracy
};

// All channels, then each channel on its own.
std::vector<std::vector<std::string>> default_subsets(const std::vector<std::string>& channels);

// Drops every channel outside the subset from both sets and retrains. Unknown
// channel names are rejected before any training starts.
std::vector<AblationRun> ablate(const preprocess::Dataset& train, const preprocess::Dataset& test,
                                const std::vector<std::vector<std::string>>& subsets,
                                const TrainAndPredict& fit);

std::string subset_key(const std::vector<std::string>& channels);

}  // namespace tcpid::eval
