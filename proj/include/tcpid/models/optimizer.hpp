#pragma once

#include <stdexcept>
#include <vector>

#include "tcpid/models/network.hpp"

namespace tcpid::models {

class NonFiniteGradient : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct AdamOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.0;  // L2 term added to the gradient
};

template <typename T>
class Adam {
 public:
  explicit Adam(AdamOptions options = {}) : opt_(options) {}

  // Throws NonFiniteGradient (naming the parameter) before touching anything
  // if any gradient entry is NaN or infinite.
  void step(const std::vector<Param<T>*>& params, double lr);
  long steps() const { return t_; }

 private:
  AdamOptions opt_;
  std::vector<Mat<T>> m_, v_;
  long t_ = 0;
};

extern template class Adam<float>;
extern template class Adam<double>;

}  // namespace tcpid::models
