#include "tcpid/models/train.hpp"

#include <cmath>
#include <numeric>
#include <random>

#include "tcpid/models/optimizer.hpp"

namespace tcpid::models {

using nlohmann::json;
using preprocess::Sample;

json to_json(const EpochLog& e) {
  json j = {{"epoch", e.epoch},
            {"learning_rate", e.learning_rate},
            {"train_loss", e.train_loss},
            {"train_accuracy", e.train_accuracy}};
  j["valid_loss"] = e.valid_loss ? json(*e.valid_loss) : json(nullptr);
  j["valid_accuracy"] = e.valid_accuracy ? json(*e.valid_accuracy) : json(nullptr);
  return j;
}

EpochLog epoch_log_from_json(const json& j) {
  EpochLog e;
  e.epoch = j.at("epoch").get<std::size_t>();
  e.learning_rate = j.at("learning_rate").get<double>();
  // A diverged epoch stores NaN, which JSON writes as null.
  e.train_loss = j.at("train_loss").is_null() ? NAN : j["train_loss"].get<double>();
  e.train_accuracy = j.at("train_accuracy").get<double>();
  if (j.contains("valid_loss") && !j["valid_loss"].is_null()) e.valid_loss = j["valid_loss"].get<double>();
  if (j.contains("valid_accuracy") && !j["valid_accuracy"].is_null()) {
    e.valid_accuracy = j["valid_accuracy"].get<double>();
  }
  return e;
}

double learning_rate_at(std::size_t epoch, std::size_t total, double base) {
  // Integer ceilings: 0.7 * 10 is 7.000000000000001 in binary floating point.
  const std::size_t first_drop = (5 * total + 9) / 10;
  const std::size_t second_drop = (7 * total + 9) / 10;
  if (epoch >= second_drop) return base / 100.0;
  if (epoch >= first_drop) return base / 10.0;
  return base;
}

Mat<float> stack_windows(std::span<const Sample> samples) {
  if (samples.empty()) return {};
  const auto width = static_cast<Eigen::Index>(samples.front().window.size());
  Mat<float> x(static_cast<Eigen::Index>(samples.size()), width);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& w = samples[i].window;
    if (static_cast<Eigen::Index>(w.size()) != width) {
      throw ShapeError("windows in one batch have different sizes");
    }
    x.row(static_cast<Eigen::Index>(i)) = Eigen::Map<const Eigen::RowVectorXf>(w.data.data(), width);
  }
  return x;
}

int argmax(std::span<const double> values) {
  int best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
  }
  return best;
}

int argmax_row(const Mat<float>& m, Eigen::Index row) {
  Eigen::Index best = 0;
  for (Eigen::Index c = 1; c < m.cols(); ++c) {
    if (m(row, c) > m(row, best)) best = c;
  }
  return static_cast<int>(best);
}

Mat<float> predict_posteriors(Network<float>& net, std::span<const Sample> samples,
                              std::size_t batch) {
  Mat<float> out(static_cast<Eigen::Index>(samples.size()),
                 static_cast<Eigen::Index>(net.config().outputs));
  for (std::size_t i = 0; i < samples.size(); i += batch) {
    const auto chunk = samples.subspan(i, std::min(batch, samples.size() - i));
    out.middleRows(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(chunk.size())) =
        softmax<float>(net.forward(stack_windows(chunk)));
  }
  return out;
}

EvalResult evaluate(Network<float>& net, std::span<const Sample> samples, std::size_t batch) {
  EvalResult r;
  if (samples.empty()) return r;
  double loss = 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < samples.size(); i += batch) {
    const auto chunk = samples.subspan(i, std::min(batch, samples.size() - i));
    std::vector<int> labels;
    for (const auto& s : chunk) labels.push_back(s.label);
    const Mat<float> logits = net.forward(stack_windows(chunk));
    loss += static_cast<double>(softmax_cross_entropy<float>(logits, labels, nullptr)) *
            static_cast<double>(chunk.size());
    for (Eigen::Index r2 = 0; r2 < logits.rows(); ++r2) {
      const int p = argmax_row(logits, r2);
      r.predictions.push_back(p);
      if (p == labels[static_cast<std::size_t>(r2)]) ++correct;
    }
  }
  r.loss = loss / static_cast<double>(samples.size());
  r.accuracy = static_cast<double>(correct) / static_cast<double>(samples.size());
  return r;
}

TrainResult train(const ModelConfig& config, const preprocess::Dataset& train_set,
                  const preprocess::Dataset* valid_set, const TrainOptions& options,
                  const Network<float>* init) {
  if (train_set.samples.empty()) throw std::invalid_argument("training set is empty");
  if (options.batch == 0) throw std::invalid_argument("train.batch: must be >= 1");
  if (options.epochs == 0) throw std::invalid_argument("train.epochs: must be >= 1");
  if (!(options.learning_rate > 0.0)) throw std::invalid_argument("train.learning_rate: must be > 0");
  config.validate();
  if (train_set.samples.front().window.size() != config.input_size) {
    throw ShapeError("training windows have " +
                     std::to_string(train_set.samples.front().window.size()) +
                     " values, model expects " + std::to_string(config.input_size));
  }

  TrainResult result{init ? *init : Network<float>(config), {}, 0};
  Network<float>& net = result.model;
  Network<float> best = net;
  double best_acc = -1.0;
  const bool has_valid = valid_set && !valid_set->samples.empty();

  Adam<float> adam(AdamOptions{.weight_decay = options.weight_decay});
  std::mt19937_64 rng(options.seed);
  const std::size_t n = train_set.samples.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<Sample> batch;
  std::vector<int> labels;

  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    // Fisher-Yates with a fixed draw rule so the order is identical on every platform.
    for (std::size_t i = n - 1; i > 0; --i) std::swap(order[i], order[rng() % (i + 1)]);
    const double lr = learning_rate_at(epoch, options.epochs, options.learning_rate);

    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < n; start += options.batch) {
      const std::size_t len = std::min(options.batch, n - start);
      batch.clear();
      labels.clear();
      for (std::size_t k = 0; k < len; ++k) {
        batch.push_back(train_set.samples[order[start + k]]);
        labels.push_back(batch.back().label);
      }
      const Mat<float> x = stack_windows(batch);
      const Mat<float> logits = net.forward(x, true);
      Mat<float> dlogits;
      const float loss = softmax_cross_entropy<float>(logits, labels, &dlogits);
      EpochLog partial{epoch, lr, static_cast<double>(loss), 0.0, {}, {}};
      if (!std::isfinite(loss)) {
        result.log.push_back(partial);
        throw TrainingDiverged("training loss became non-finite in epoch " +
                                   std::to_string(epoch) + " at batch offset " +
                                   std::to_string(start),
                               result.log);
      }
      net.backward(dlogits);
      try {
        adam.step(net.params(), lr);
      } catch (const NonFiniteGradient& e) {
        result.log.push_back(partial);
        throw TrainingDiverged(e.what(), result.log);
      }
      loss_sum += static_cast<double>(loss) * static_cast<double>(len);
      for (Eigen::Index r = 0; r < logits.rows(); ++r) {
        if (argmax_row(logits, r) == labels[static_cast<std::size_t>(r)]) ++correct;
      }
    }

    EpochLog log{epoch, lr, loss_sum / static_cast<double>(n),
                 static_cast<double>(correct) / static_cast<double>(n), {}, {}};
    if (has_valid) {
      const EvalResult v = evaluate(net, valid_set->samples);
      log.valid_loss = v.loss;
      log.valid_accuracy = v.accuracy;
      if (v.accuracy > best_acc) {
        best_acc = v.accuracy;
        best = net;
        result.best_epoch = epoch;
      }
    } else {
      result.best_epoch = epoch;
    }
    result.log.push_back(log);
    if (options.on_epoch) options.on_epoch(log);
  }
  if (has_valid) result.model = std::move(best);
  return result;
}

}  // namespace tcpid::models
