#include "tcpid/eval/metrics.hpp"

#include <stdexcept>

#include "tcpid/ccsim/algorithm.hpp"

namespace tcpid::eval {

std::int64_t ConfusionMatrix::total() const {
  std::int64_t t = 0;
  for (std::size_t r = 0; r < classes(); ++r) t += row_sum(r);
  return t;
}

std::int64_t ConfusionMatrix::row_sum(std::size_t r) const {
  std::int64_t t = 0;
  for (auto v : counts.at(r)) t += v;
  return t;
}

std::int64_t ConfusionMatrix::col_sum(std::size_t c) const {
  std::int64_t t = 0;
  for (const auto& row : counts) t += row.at(c);
  return t;
}

ConfusionMatrix confusion(std::span<const int> predictions, std::span<const int> truth,
                          std::vector<std::string> names) {
  if (predictions.size() != truth.size()) {
    throw std::invalid_argument("confusion: " + std::to_string(predictions.size()) +
                                " predictions but " + std::to_string(truth.size()) + " labels");
  }
  if (predictions.empty()) throw std::invalid_argument("confusion: no samples");
  if (names.empty()) {
    for (auto a : ccsim::kAllAlgorithms) names.emplace_back(ccsim::to_string(a));
  }
  const auto n = static_cast<int>(names.size());
  ConfusionMatrix cm;
  cm.labels = std::move(names);
  cm.counts.assign(cm.labels.size(), std::vector<std::int64_t>(cm.labels.size(), 0));
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const int t = truth[i];
    const int p = predictions[i];
    if (t < 0 || t >= n || p < 0 || p >= n) {
      throw std::invalid_argument("confusion: class id out of range at index " + std::to_string(i));
    }
    ++cm.counts[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)];
  }
  return cm;
}

Metrics prf1(const ConfusionMatrix& cm) {
  Metrics m;
  m.labels = cm.labels;
  const std::int64_t total = cm.total();
  std::int64_t diag = 0;
  for (std::size_t k = 0; k < cm.classes(); ++k) {
    ClassMetrics c;
    const auto tp = cm.counts[k][k];
    diag += tp;
    const auto col = cm.col_sum(k);
    c.support = cm.row_sum(k);
    if (col > 0) {
      c.precision = static_cast<double>(tp) / static_cast<double>(col);
    } else {
      c.precision_undefined = true;
    }
    if (c.support > 0) {
      c.recall = static_cast<double>(tp) / static_cast<double>(c.support);
    } else {
      c.recall_undefined = true;
    }
    if (c.precision + c.recall > 0.0) {
      c.f1 = 2.0 * c.precision * c.recall / (c.precision + c.recall);
    } else {
      c.f1_undefined = true;
    }
    m.per_class.push_back(c);
  }
  m.accuracy = total > 0 ? static_cast<double>(diag) / static_cast<double>(total) : 0.0;

  const auto n = static_cast<double>(cm.classes());
  for (const auto& c : m.per_class) {
    m.macro.precision += c.precision / n;
    m.macro.recall += c.recall / n;
    m.macro.f1 += c.f1 / n;
    m.macro.support += c.support;
    if (total > 0) {
      const double w = static_cast<double>(c.support) / static_cast<double>(total);
      m.weighted.precision += w * c.precision;
      m.weighted.recall += w * c.recall;
      m.weighted.f1 += w * c.f1;
    }
    m.weighted.support += c.support;
  }
  return m;
}

}  // namespace tcpid::eval
