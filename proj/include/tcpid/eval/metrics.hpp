#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace tcpid::eval {

// Rows are true classes, columns predicted classes.
struct ConfusionMatrix {
  std::vector<std::string> labels;
  std::vector<std::vector<std::int64_t>> counts;

  std::size_t classes() const { return counts.size(); }
  std::int64_t total() const;
  std::int64_t row_sum(std::size_t r) const;
  std::int64_t col_sum(std::size_t c) const;
  bool operator==(const ConfusionMatrix&) const = default;
};

// Labels default to the algorithm names when `names` is empty.
ConfusionMatrix confusion(std::span<const int> predictions, std::span<const int> truth,
                          std::vector<std::string> names = {});

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::int64_t support = 0;
  // Set when the denominator was zero and the value was reported as 0.
  bool precision_undefined = false;
  bool recall_undefined = false;
  bool f1_undefined = false;
};

struct Metrics {
  std::vector<std::string> labels;
  std::vector<ClassMetrics> per_class;
  double accuracy = 0.0;
  ClassMetrics macro;     // unweighted mean over classes
  ClassMetrics weighted;  // support-weighted mean
};

Metrics prf1(const ConfusionMatrix& cm);

}  // namespace tcpid::eval
