#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace tcpid::models {

template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class Architecture { Lstm, Dnn };

struct ModelConfig {
  Architecture architecture = Architecture::Lstm;
  std::size_t input_size = 12000;  // flat window length, steps * channels
  std::size_t steps = 20;          // LSTM timesteps; input width is input_size / steps
  std::vector<std::size_t> lstm_units{600, 600};
  std::vector<std::size_t> dense{256, 128};
  std::size_t outputs = 6;
  std::uint64_t seed = 1;
  double dropout = 0.0;  // applied after each hidden dense layer while training

  std::size_t input_width() const { return input_size / steps; }
  void validate() const;  // throws std::invalid_argument naming the field

  // Full-size reference layouts.
  static ModelConfig lstm_preset(std::size_t input_size);
  static ModelConfig dnn_preset(std::size_t input_size);
};

nlohmann::json to_json(const ModelConfig& config);
ModelConfig model_config_from_json(const nlohmann::json& j);

template <typename T>
struct Param {
  std::string name;
  Mat<T> value;
  Mat<T> grad;
};

// Stacked-gate LSTM. W is (4H x in), U is (4H x H), b is (1 x 4H); gate
// blocks are ordered input, forget, cell, output. Sequences are laid out
// time-major: row t * batch + b holds sample b at step t.
template <typename T>
class LstmLayer {
 public:
  LstmLayer(std::size_t input_dim, std::size_t hidden, const std::string& name);

  Param<T> W, U, b;

  std::size_t hidden() const { return static_cast<std::size_t>(U.value.cols()); }
  std::size_t input_dim() const { return static_cast<std::size_t>(W.value.cols()); }

  // x: (steps * batch) x input_dim. Returns the hidden sequence, (steps * batch) x H.
  Mat<T> forward(const Mat<T>& x, std::size_t steps);
  // dh: gradient w.r.t. every hidden output. Sets W/U/b grads; returns dx
  // unless need_input_grad is false.
  Mat<T> backward(const Mat<T>& dh, bool need_input_grad = true);

 private:
  std::size_t steps_ = 0;
  Mat<T> x_, gates_, c_, tanh_c_, h_;
};

template <typename T>
class DenseLayer {
 public:
  DenseLayer(std::size_t input_dim, std::size_t output_dim, const std::string& name);

  Param<T> W, b;  // W is (out x in)

  Mat<T> forward(const Mat<T>& x);
  Mat<T> backward(const Mat<T>& dy);

 private:
  Mat<T> x_;
};

// One learnable negative slope shared by the whole layer.
template <typename T>
class PreluLayer {
 public:
  explicit PreluLayer(const std::string& name, T slope = T(0.25));

  Param<T> a;

  Mat<T> forward(const Mat<T>& x);
  Mat<T> backward(const Mat<T>& dy);

 private:
  Mat<T> x_;
};

template <typename T>
Mat<T> softmax(const Mat<T>& logits);

// Mean over rows of -log softmax(logits)[label]. grad, if given, receives
// (softmax - onehot) / rows.
template <typename T>
T softmax_cross_entropy(const Mat<T>& logits, std::span<const int> labels, Mat<T>* grad);

template <typename T>
class Network {
 public:
  explicit Network(const ModelConfig& config);

  const ModelConfig& config() const { return config_; }

  // x: batch x input_size, one flat window per row. Returns batch x outputs logits.
  Mat<T> forward(const Mat<T>& x, bool training = false);
  void backward(const Mat<T>& dlogits);

  // Mean cross-entropy; also fills every parameter gradient.
  T loss_and_grad(const Mat<T>& x, std::span<const int> labels, bool training = false);

  // Fixed order, shared by the optimizer and the checkpoint format.
  std::vector<Param<T>*> params();
  std::vector<const Param<T>*> params() const;
  std::size_t parameter_count() const;

  // Re-draws the output layer (used when fine-tuning a loaded model).
  void reinit_output(std::uint64_t seed);

  template <typename U>
  Network<U> cast() const {
    Network<U> out(config_);
    auto dst = out.params();
    auto src = params();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i]->value = src[i]->value.template cast<U>();
    return out;
  }

 private:
  Mat<T> to_sequence(const Mat<T>& x) const;

  ModelConfig config_;
  std::vector<LstmLayer<T>> lstm_;
  std::vector<DenseLayer<T>> dense_;
  std::vector<PreluLayer<T>> prelu_;
  std::vector<Mat<T>> dropout_masks_;
  DenseLayer<T> output_;
  std::mt19937_64 dropout_rng_;
  std::size_t batch_ = 0;
};

extern template class LstmLayer<float>;
extern template class LstmLayer<double>;
extern template class DenseLayer<float>;
extern template class DenseLayer<double>;
extern template class PreluLayer<float>;
extern template class PreluLayer<double>;
extern template class Network<float>;
extern template class Network<double>;

}  // namespace tcpid::models
