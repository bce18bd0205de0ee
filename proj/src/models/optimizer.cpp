#include "tcpid/models/optimizer.hpp"

#include <cmath>

namespace tcpid::models {

template <typename T>
void Adam<T>::step(const std::vector<Param<T>*>& params, double lr) {
  for (const auto* p : params) {
    if (!p->grad.allFinite()) {
      Eigen::Index bad = 0;
      while (std::isfinite(p->grad.data()[bad])) ++bad;
      throw NonFiniteGradient("non-finite gradient in " + p->name + " at flat index " +
                              std::to_string(bad) + " (Adam step " + std::to_string(t_ + 1) + ")");
    }
  }
  if (m_.empty()) {
    for (const auto* p : params) {
      m_.push_back(Mat<T>::Zero(p->value.rows(), p->value.cols()));
      v_.push_back(Mat<T>::Zero(p->value.rows(), p->value.cols()));
    }
  }
  if (m_.size() != params.size()) throw std::invalid_argument("parameter list changed between steps");

  ++t_;
  const T b1 = static_cast<T>(opt_.beta1);
  const T b2 = static_cast<T>(opt_.beta2);
  const T c1 = static_cast<T>(1.0 / (1.0 - std::pow(opt_.beta1, static_cast<double>(t_))));
  const T c2 = static_cast<T>(1.0 / (1.0 - std::pow(opt_.beta2, static_cast<double>(t_))));
  const T eps = static_cast<T>(opt_.epsilon);
  const T rate = static_cast<T>(lr);
  const T wd = static_cast<T>(opt_.weight_decay);

  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& p = *params[k];
    auto g = p.grad.array();
    auto m = m_[k].array();
    auto v = v_[k].array();
    if (wd != T(0)) {
      m = b1 * m + (T(1) - b1) * (g + wd * p.value.array());
      v = b2 * v + (T(1) - b2) * (g + wd * p.value.array()).square();
    } else {
      m = b1 * m + (T(1) - b1) * g;
      v = b2 * v + (T(1) - b2) * g.square();
    }
    p.value.array() -= rate * (m * c1) / ((v * c2).sqrt() + eps);
  }
}

template class Adam<float>;
template class Adam<double>;

}  // namespace tcpid::models
