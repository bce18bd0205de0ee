#include "tcpid/models/network.hpp"

#include <cmath>

#include "tcpid/ccsim/algorithm.hpp"

namespace tcpid::models {

using nlohmann::json;

void ModelConfig::validate() const {
  auto fail = [](const std::string& field, const std::string& msg) {
    throw std::invalid_argument("model." + field + ": " + msg);
  };
  if (input_size == 0) fail("input_size", "must be > 0");
  if (outputs != static_cast<std::size_t>(ccsim::kNumAlgorithms)) {
    fail("outputs", "must equal the number of algorithms (" +
                        std::to_string(ccsim::kNumAlgorithms) + ")");
  }
  if (architecture == Architecture::Lstm) {
    if (steps == 0) fail("steps", "must be > 0");
    if (input_size % steps != 0) fail("steps", "must divide input_size");
    if (lstm_units.empty()) fail("lstm_units", "needs at least one layer");
  }
  for (auto u : lstm_units) {
    if (u == 0) fail("lstm_units", "layer sizes must be > 0");
  }
  for (auto u : dense) {
    if (u == 0) fail("dense", "layer sizes must be > 0");
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) fail("dropout", "must be in [0, 1)");
}

ModelConfig ModelConfig::lstm_preset(std::size_t input_size) {
  ModelConfig c;
  c.input_size = input_size;
  return c;
}

ModelConfig ModelConfig::dnn_preset(std::size_t input_size) {
  ModelConfig c;
  c.architecture = Architecture::Dnn;
  c.input_size = input_size;
  c.lstm_units.clear();
  c.dense = {1024, 512, 256, 128};
  return c;
}

json to_json(const ModelConfig& c) {
  return {{"architecture", c.architecture == Architecture::Lstm ? "lstm" : "dnn"},
          {"input_size", c.input_size},
          {"steps", c.steps},
          {"lstm_units", c.lstm_units},
          {"dense", c.dense},
          {"outputs", c.outputs},
          {"seed", c.seed},
          {"dropout", c.dropout}};
}

ModelConfig model_config_from_json(const json& j) {
  ModelConfig c;
  if (j.contains("architecture")) {
    const auto arch = j["architecture"].get<std::string>();
    if (arch == "lstm") {
      c.architecture = Architecture::Lstm;
    } else if (arch == "dnn") {
      c.architecture = Architecture::Dnn;
      c.lstm_units.clear();
      c.dense = {1024, 512, 256, 128};
    } else {
      throw std::invalid_argument("model.architecture: expected \"lstm\" or \"dnn\", got \"" +
                                  arch + "\"");
    }
  }
  if (j.contains("input_size")) c.input_size = j["input_size"].get<std::size_t>();
  if (j.contains("steps")) c.steps = j["steps"].get<std::size_t>();
  if (j.contains("lstm_units")) c.lstm_units = j["lstm_units"].get<std::vector<std::size_t>>();
  if (j.contains("dense")) c.dense = j["dense"].get<std::vector<std::size_t>>();
  if (j.contains("outputs")) c.outputs = j["outputs"].get<std::size_t>();
  if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("dropout")) c.dropout = j["dropout"].get<double>();
  return c;
}

namespace {

template <typename T>
Param<T> make_param(const std::string& name, Eigen::Index rows, Eigen::Index cols) {
  return Param<T>{name, Mat<T>::Zero(rows, cols), Mat<T>::Zero(rows, cols)};
}

template <typename T>
auto sigmoid(const Eigen::ArrayBase<T>& x) {
  using S = typename T::Scalar;
  return S(1) / (S(1) + (-x).exp());
}

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

template <typename T>
void fill_uniform(Mat<T>& m, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(m.cols()));
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    m.data()[i] = static_cast<T>((2.0 * uniform01(rng) - 1.0) * bound);
  }
}

std::size_t head_input(const ModelConfig& c) {
  if (!c.dense.empty()) return c.dense.back();
  if (c.architecture == Architecture::Lstm) return c.lstm_units.back();
  return c.input_size;
}

}  // namespace

// ---------------------------------------------------------------- LSTM

template <typename T>
LstmLayer<T>::LstmLayer(std::size_t input_dim, std::size_t hidden, const std::string& name)
    : W(make_param<T>(name + ".W", 4 * hidden, input_dim)),
      U(make_param<T>(name + ".U", 4 * hidden, hidden)),
      b(make_param<T>(name + ".b", 1, 4 * hidden)) {}

template <typename T>
Mat<T> LstmLayer<T>::forward(const Mat<T>& x, std::size_t steps) {
  const auto H = static_cast<Eigen::Index>(hidden());
  if (steps == 0 || x.cols() != W.value.cols() || x.rows() % static_cast<Eigen::Index>(steps) != 0) {
    throw ShapeError("LSTM input is " + std::to_string(x.rows()) + "x" + std::to_string(x.cols()) +
                     ", expected (steps*batch)x" + std::to_string(W.value.cols()));
  }
  const auto S = static_cast<Eigen::Index>(steps);
  const Eigen::Index B = x.rows() / S;
  steps_ = steps;
  x_ = x;
  gates_.noalias() = x * W.value.transpose();
  gates_.rowwise() += b.value.row(0);
  c_.resize(S * B, H);
  tanh_c_.resize(S * B, H);
  h_.resize(S * B, H);

  for (Eigen::Index t = 0; t < S; ++t) {
    auto g = gates_.middleRows(t * B, B);
    if (t > 0) g.noalias() += h_.middleRows((t - 1) * B, B) * U.value.transpose();
    g.leftCols(2 * H) = sigmoid(g.leftCols(2 * H).array()).matrix();
    g.middleCols(2 * H, H) = g.middleCols(2 * H, H).array().tanh().matrix();
    g.rightCols(H) = sigmoid(g.rightCols(H).array()).matrix();

    auto i = g.leftCols(H).array();
    auto f = g.middleCols(H, H).array();
    auto cand = g.middleCols(2 * H, H).array();
    auto o = g.rightCols(H).array();
    if (t > 0) {
      c_.middleRows(t * B, B) = (f * c_.middleRows((t - 1) * B, B).array() + i * cand).matrix();
    } else {
      c_.middleRows(0, B) = (i * cand).matrix();
    }
    tanh_c_.middleRows(t * B, B) = c_.middleRows(t * B, B).array().tanh().matrix();
    h_.middleRows(t * B, B) = (o * tanh_c_.middleRows(t * B, B).array()).matrix();
  }
  return h_;
}

template <typename T>
Mat<T> LstmLayer<T>::backward(const Mat<T>& dh_seq, bool need_input_grad) {
  const auto H = static_cast<Eigen::Index>(hidden());
  const auto S = static_cast<Eigen::Index>(steps_);
  if (S == 0 || dh_seq.rows() != h_.rows() || dh_seq.cols() != H) {
    throw ShapeError("LSTM backward called with a gradient that does not match the last forward");
  }
  const Eigen::Index B = h_.rows() / S;
  Mat<T> dA(S * B, 4 * H);
  Mat<T> dh_next = Mat<T>::Zero(B, H);
  Mat<T> dc_next = Mat<T>::Zero(B, H);

  for (Eigen::Index t = S - 1; t >= 0; --t) {
    const Eigen::Index r = t * B;
    auto g = gates_.middleRows(r, B);
    auto i = g.leftCols(H).array();
    auto f = g.middleCols(H, H).array();
    auto cand = g.middleCols(2 * H, H).array();
    auto o = g.rightCols(H).array();
    auto tc = tanh_c_.middleRows(r, B).array();

    const auto dh = (dh_seq.middleRows(r, B) + dh_next).array().eval();
    const auto dc = (dh * o * (T(1) - tc * tc) + dc_next.array()).eval();
    auto d = dA.middleRows(r, B);
    d.leftCols(H) = (dc * cand * i * (T(1) - i)).matrix();
    if (t > 0) {
      d.middleCols(H, H) = (dc * c_.middleRows(r - B, B).array() * f * (T(1) - f)).matrix();
    } else {
      d.middleCols(H, H).setZero();
    }
    d.middleCols(2 * H, H) = (dc * i * (T(1) - cand * cand)).matrix();
    d.rightCols(H) = (dh * tc * o * (T(1) - o)).matrix();
    dc_next = (dc * f).matrix();
    dh_next.noalias() = d * U.value;
  }

  W.grad.noalias() = dA.transpose() * x_;
  b.grad = dA.colwise().sum();
  if (S > 1) {
    U.grad.noalias() = dA.bottomRows((S - 1) * B).transpose() * h_.topRows((S - 1) * B);
  } else {
    U.grad.setZero();
  }
  if (!need_input_grad) return {};
  return dA * W.value;
}

// ---------------------------------------------------------------- Dense

template <typename T>
DenseLayer<T>::DenseLayer(std::size_t input_dim, std::size_t output_dim, const std::string& name)
    : W(make_param<T>(name + ".W", output_dim, input_dim)),
      b(make_param<T>(name + ".b", 1, output_dim)) {}

template <typename T>
Mat<T> DenseLayer<T>::forward(const Mat<T>& x) {
  if (x.cols() != W.value.cols()) {
    throw ShapeError("dense input has " + std::to_string(x.cols()) + " columns, expected " +
                     std::to_string(W.value.cols()));
  }
  x_ = x;
  Mat<T> y = x * W.value.transpose();
  y.rowwise() += b.value.row(0);
  return y;
}

template <typename T>
Mat<T> DenseLayer<T>::backward(const Mat<T>& dy) {
  W.grad.noalias() = dy.transpose() * x_;
  b.grad = dy.colwise().sum();
  return dy * W.value;
}

// ---------------------------------------------------------------- PReLU

template <typename T>
PreluLayer<T>::PreluLayer(const std::string& name, T slope)
    : a(make_param<T>(name + ".a", 1, 1)) {
  a.value(0, 0) = slope;
}

template <typename T>
Mat<T> PreluLayer<T>::forward(const Mat<T>& x) {
  x_ = x;
  const T s = a.value(0, 0);
  return x.unaryExpr([s](T v) { return v >= T(0) ? v : s * v; });
}

template <typename T>
Mat<T> PreluLayer<T>::backward(const Mat<T>& dy) {
  const T s = a.value(0, 0);
  const auto neg = (x_.array() < T(0));
  a.grad(0, 0) = neg.select(dy.array() * x_.array(), T(0)).sum();
  return neg.select(dy.array() * s, dy.array()).matrix();
}

// ---------------------------------------------------------------- loss

template <typename T>
Mat<T> softmax(const Mat<T>& logits) {
  Mat<T> p = logits;
  for (Eigen::Index r = 0; r < p.rows(); ++r) {
    auto row = p.row(r).array();
    row = (row - row.maxCoeff()).exp();
    row /= row.sum();
  }
  return p;
}

template <typename T>
T softmax_cross_entropy(const Mat<T>& logits, std::span<const int> labels, Mat<T>* grad) {
  if (static_cast<std::size_t>(logits.rows()) != labels.size() || labels.empty()) {
    throw ShapeError("logit rows and label count differ");
  }
  const auto n = static_cast<T>(labels.size());
  if (grad) grad->resize(logits.rows(), logits.cols());
  T total = 0;
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const int y = labels[static_cast<std::size_t>(r)];
    if (y < 0 || y >= logits.cols()) throw ShapeError("label out of range");
    const auto row = logits.row(r).array();
    const T m = row.maxCoeff();
    const T lse = m + std::log((row - m).exp().sum());
    total += lse - row(y);
    if (grad) {
      grad->row(r) = ((row - lse).exp() / n).matrix();
      (*grad)(r, y) -= T(1) / n;
    }
  }
  return total / n;
}

// ---------------------------------------------------------------- network

template <typename T>
Network<T>::Network(const ModelConfig& config)
    : config_((config.validate(), config)),
      output_(head_input(config), config.outputs, "output"),
      dropout_rng_(config.seed ^ 0x9E3779B97F4A7C15ULL) {
  std::size_t in = config_.architecture == Architecture::Lstm ? config_.input_width()
                                                              : config_.input_size;
  if (config_.architecture == Architecture::Lstm) {
    for (std::size_t l = 0; l < config_.lstm_units.size(); ++l) {
      lstm_.emplace_back(in, config_.lstm_units[l], "lstm" + std::to_string(l));
      in = config_.lstm_units[l];
    }
  }
  for (std::size_t l = 0; l < config_.dense.size(); ++l) {
    dense_.emplace_back(in, config_.dense[l], "dense" + std::to_string(l));
    prelu_.emplace_back("prelu" + std::to_string(l));
    in = config_.dense[l];
  }

  std::mt19937_64 rng(config_.seed);
  for (auto& layer : lstm_) {
    fill_uniform(layer.W.value, rng);
    fill_uniform(layer.U.value, rng);
    const auto H = static_cast<Eigen::Index>(layer.hidden());
    layer.b.value.setZero();
    layer.b.value.middleCols(H, H).setOnes();
  }
  for (auto& layer : dense_) fill_uniform(layer.W.value, rng);
  fill_uniform(output_.W.value, rng);
}

template <typename T>
void Network<T>::reinit_output(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  fill_uniform(output_.W.value, rng);
  output_.b.value.setZero();
}

template <typename T>
Mat<T> Network<T>::to_sequence(const Mat<T>& x) const {
  const auto S = static_cast<Eigen::Index>(config_.steps);
  const auto w = static_cast<Eigen::Index>(config_.input_width());
  const Eigen::Index B = x.rows();
  Mat<T> seq(S * B, w);
  for (Eigen::Index t = 0; t < S; ++t) {
    seq.middleRows(t * B, B) = x.middleCols(t * w, w);
  }
  return seq;
}

template <typename T>
Mat<T> Network<T>::forward(const Mat<T>& x, bool training) {
  if (static_cast<std::size_t>(x.cols()) != config_.input_size || x.rows() == 0) {
    throw ShapeError("network input is " + std::to_string(x.rows()) + "x" +
                     std::to_string(x.cols()) + ", expected batch x " +
                     std::to_string(config_.input_size));
  }
  batch_ = static_cast<std::size_t>(x.rows());
  Mat<T> h;
  if (config_.architecture == Architecture::Lstm) {
    Mat<T> seq = to_sequence(x);
    for (auto& layer : lstm_) seq = layer.forward(seq, config_.steps);
    h = seq.bottomRows(x.rows());  // last timestep
  } else {
    h = x;
  }
  dropout_masks_.clear();
  const bool drop = training && config_.dropout > 0.0;
  for (std::size_t l = 0; l < dense_.size(); ++l) {
    h = prelu_[l].forward(dense_[l].forward(h));
    if (drop) {
      const T keep = T(1.0 - config_.dropout);
      Mat<T> mask(h.rows(), h.cols());
      for (Eigen::Index i = 0; i < mask.size(); ++i) {
        mask.data()[i] = uniform01(dropout_rng_) < config_.dropout ? T(0) : T(1) / keep;
      }
      h = h.cwiseProduct(mask);
      dropout_masks_.push_back(std::move(mask));
    }
  }
  return output_.forward(h);
}

template <typename T>
void Network<T>::backward(const Mat<T>& dlogits) {
  Mat<T> g = output_.backward(dlogits);
  for (std::size_t l = dense_.size(); l-- > 0;) {
    if (!dropout_masks_.empty()) g = g.cwiseProduct(dropout_masks_[l]);
    g = dense_[l].backward(prelu_[l].backward(g));
  }
  if (config_.architecture == Architecture::Lstm) {
    const auto B = static_cast<Eigen::Index>(batch_);
    const auto S = static_cast<Eigen::Index>(config_.steps);
    Mat<T> dseq = Mat<T>::Zero(S * B, g.cols());
    dseq.bottomRows(B) = g;
    for (std::size_t l = lstm_.size(); l-- > 0;) dseq = lstm_[l].backward(dseq, l > 0);
  }
}

template <typename T>
T Network<T>::loss_and_grad(const Mat<T>& x, std::span<const int> labels, bool training) {
  Mat<T> logits = forward(x, training);
  Mat<T> dlogits;
  const T loss = softmax_cross_entropy<T>(logits, labels, &dlogits);
  backward(dlogits);
  return loss;
}

template <typename T>
std::vector<Param<T>*> Network<T>::params() {
  std::vector<Param<T>*> out;
  for (auto& l : lstm_) out.insert(out.end(), {&l.W, &l.U, &l.b});
  for (std::size_t i = 0; i < dense_.size(); ++i) {
    out.insert(out.end(), {&dense_[i].W, &dense_[i].b, &prelu_[i].a});
  }
  out.insert(out.end(), {&output_.W, &output_.b});
  return out;
}

template <typename T>
std::vector<const Param<T>*> Network<T>::params() const {
  auto mut = const_cast<Network<T>*>(this)->params();
  return {mut.begin(), mut.end()};
}

template <typename T>
std::size_t Network<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto* p : params()) n += static_cast<std::size_t>(p->value.size());
  return n;
}

template class LstmLayer<float>;
template class LstmLayer<double>;
template class DenseLayer<float>;
template class DenseLayer<double>;
template class PreluLayer<float>;
template class PreluLayer<double>;
template class Network<float>;
template class Network<double>;

template Mat<float> softmax<float>(const Mat<float>&);
template Mat<double> softmax<double>(const Mat<double>&);
template float softmax_cross_entropy<float>(const Mat<float>&, std::span<const int>, Mat<float>*);
template double softmax_cross_entropy<double>(const Mat<double>&, std::span<const int>,
                                              Mat<double>*);

}  // namespace tcpid::models
