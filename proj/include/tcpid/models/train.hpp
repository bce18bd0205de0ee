#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "tcpid/models/network.hpp"
#include "tcpid/preprocess/dataset.hpp"

namespace tcpid::models {

struct TrainOptions {
  std::size_t epochs = 500;
  std::size_t batch = 32;
  double learning_rate = 1e-4;
  std::uint64_t seed = 1;  // shuffling order
  double weight_decay = 0.0;
  std::function<void(const struct EpochLog&)> on_epoch;
};

struct EpochLog {
  std::size_t epoch = 0;  // 0-based
  double learning_rate = 0.0;
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  std::optional<double> valid_loss;
  std::optional<double> valid_accuracy;
};

nlohmann::json to_json(const EpochLog& e);
EpochLog epoch_log_from_json(const nlohmann::json& j);

// base, divided by 10 from epoch ceil(0.5 * total) and by 100 from ceil(0.7 * total).
double learning_rate_at(std::size_t epoch, std::size_t total, double base);

class TrainingDiverged : public std::runtime_error {
 public:
  TrainingDiverged(const std::string& what, std::vector<EpochLog> log)
      : std::runtime_error(what), log(std::move(log)) {}
  std::vector<EpochLog> log;
};

struct TrainResult {
  Network<float> model;  // best validation accuracy, or the last epoch without validation data
  std::vector<EpochLog> log;
  std::size_t best_epoch = 0;
};

// `init` starts from existing weights instead of a fresh draw (fine-tuning).
TrainResult train(const ModelConfig& config, const preprocess::Dataset& train_set,
                  const preprocess::Dataset* valid_set, const TrainOptions& options,
                  const Network<float>* init = nullptr);

// Flat windows stacked one per row.
Mat<float> stack_windows(std::span<const preprocess::Sample> samples);

// Row-wise softmax posteriors, evaluated in chunks of `batch`.
Mat<float> predict_posteriors(Network<float>& net, std::span<const preprocess::Sample> samples,
                              std::size_t batch = 128);

// Index of the largest entry; the lowest index wins ties.
int argmax(std::span<const double> values);
int argmax_row(const Mat<float>& m, Eigen::Index row);

struct EvalResult {
  double loss = 0.0;
  double accuracy = 0.0;
  std::vector<int> predictions;
};

EvalResult evaluate(Network<float>& net, std::span<const preprocess::Sample> samples,
                    std::size_t batch = 128);

}  // namespace tcpid::models
