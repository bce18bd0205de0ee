#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <limits>
#include <numeric>
#include <random>

#include "support/gradcheck.hpp"
#include "tcpid/container.hpp"
#include "tcpid/models/checkpoint.hpp"
#include "tcpid/models/network.hpp"
#include "tcpid/models/optimizer.hpp"
#include "tcpid/models/train.hpp"

using namespace tcpid;
using namespace tcpid::models;
using tcpid::testing::random_mat;

namespace {

ModelConfig tiny_lstm(std::size_t input_size = 40, std::size_t steps = 4) {
  ModelConfig c;
  c.input_size = input_size;
  c.steps = steps;
  c.lstm_units = {8};
  c.dense = {8};
  c.seed = 3;
  return c;
}

// Constant windows at a per-class level: any linear model separates them.
preprocess::Dataset constant_classes(std::size_t per_class, std::size_t steps, std::size_t channels,
                                     std::vector<float> levels, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> noise(0.0f, 0.05f);
  preprocess::Dataset d;
  d.window_steps = steps;
  for (std::size_t c = 0; c < channels; ++c) d.channels.push_back("c" + std::to_string(c));
  for (std::size_t k = 0; k < levels.size(); ++k) {
    for (std::size_t i = 0; i < per_class; ++i) {
      preprocess::Sample s;
      s.window = Tensor({steps, channels});
      for (auto& v : s.window.data) v = levels[k] + noise(rng);
      s.label = static_cast<int>(k);
      s.trace_id = "k" + std::to_string(k) + "-" + std::to_string(i);
      d.samples.push_back(std::move(s));
    }
  }
  return d;
}

}  // namespace

TEST_CASE("model config validation and presets") {
  auto lstm = ModelConfig::lstm_preset(12000);
  CHECK(lstm.input_width() == 600);
  CHECK(lstm.lstm_units == std::vector<std::size_t>{600, 600});
  CHECK(lstm.dense == std::vector<std::size_t>{256, 128});
  CHECK(lstm.outputs == 6);
  CHECK(ModelConfig::lstm_preset(15000).input_width() == 750);
  CHECK(ModelConfig::dnn_preset(12000).dense == std::vector<std::size_t>{1024, 512, 256, 128});

  auto bad = lstm;
  bad.outputs = 5;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = lstm;
  bad.input_size = 12001;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  auto round = model_config_from_json(to_json(tiny_lstm()));
  CHECK(to_json(round) == to_json(tiny_lstm()));
}

TEST_CASE("LSTM forward examples") {
  LstmLayer<double> zero(3, 4, "l");
  zero.W.value.setZero();
  zero.U.value.setZero();
  zero.b.value.setZero();
  std::mt19937_64 rng(1);
  const Mat<double> x = random_mat(rng, 5 * 2, 3);
  CHECK(zero.forward(x, 5).cwiseAbs().maxCoeff() == 0.0);

  // With zero input the first step sees only the biases.
  LstmLayer<double> a(3, 4, "a"), b(3, 4, "b");
  a.b.value = random_mat(rng, 1, 16);
  b.b.value = a.b.value;
  a.W.value = random_mat(rng, 16, 3);
  a.U.value = random_mat(rng, 16, 4);
  const Mat<double> zeros = Mat<double>::Zero(5 * 2, 3);
  const Mat<double> ha = a.forward(zeros, 5), hb = b.forward(zeros, 5);
  CHECK((ha.topRows(2) - hb.topRows(2)).cwiseAbs().maxCoeff() == 0.0);
  CHECK((ha.row(0) - ha.row(1)).cwiseAbs().maxCoeff() == 0.0);

  CHECK_THROWS_AS(a.forward(Mat<double>::Zero(10, 4), 5), ShapeError);
  CHECK_THROWS_AS(a.forward(Mat<double>::Zero(9, 3), 5), ShapeError);
}

TEST_CASE("initialization follows the documented scheme") {
  auto cfg = tiny_lstm(200, 4);  // input width 50
  Network<float> net(cfg);
  auto ps = net.params();
  const auto& W = ps[0]->value;
  const auto& U = ps[1]->value;
  const auto& b = ps[2]->value;
  CHECK(W.cwiseAbs().maxCoeff() <= 1.0f / std::sqrt(50.0f));
  CHECK(U.cwiseAbs().maxCoeff() <= 1.0f / std::sqrt(8.0f));
  CHECK(W.cwiseAbs().maxCoeff() > 0.5f / std::sqrt(50.0f));
  CHECK(b.block(0, 8, 1, 8).minCoeff() == 1.0f);  // forget gate
  CHECK(b.block(0, 8, 1, 8).maxCoeff() == 1.0f);
  CHECK(b.block(0, 0, 1, 8).cwiseAbs().maxCoeff() == 0.0f);
  CHECK(b.block(0, 16, 1, 16).cwiseAbs().maxCoeff() == 0.0f);
  CHECK(ps[5]->value(0, 0) == 0.25f);  // prelu0.a
  Network<float> again(cfg);
  CHECK(again.params()[0]->value == W);
}

TEST_CASE("PReLU examples") {
  PreluLayer<double> p("p", 0.25);
  Mat<double> x(1, 2);
  x << 3, -4;
  auto y = p.forward(x);
  CHECK(y(0, 0) == 3);
  CHECK(y(0, 1) == -1);
  PreluLayer<double> id("id", 1.0);
  CHECK(id.forward(x) == x);
}

TEST_CASE("softmax cross-entropy examples") {
  const std::vector<int> label{2};
  Mat<double> uniform = Mat<double>::Constant(1, 6, 0.7);
  CHECK(softmax_cross_entropy<double>(uniform, label, nullptr) == doctest::Approx(std::log(6.0)));
  Mat<double> sure = Mat<double>::Zero(1, 6);
  sure(0, 2) = 50;
  CHECK(softmax_cross_entropy<double>(sure, label, nullptr) < 1e-10);
  Mat<double> huge = Mat<double>::Constant(1, 6, 1e4);
  CHECK(std::isfinite(softmax_cross_entropy<double>(huge, label, nullptr)));

  Mat<double> grad;
  softmax_cross_entropy<double>(uniform, label, &grad);
  CHECK(grad(0, 2) == doctest::Approx(1.0 / 6 - 1));
  CHECK(grad(0, 0) == doctest::Approx(1.0 / 6));
}

TEST_CASE("analytic gradients match central differences") {
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    for (const auto& c : testing::check_lstm(seed, 3, 4, 20, 2)) {
      INFO(c.what << " seed " << seed);
      CHECK(c.error < 1e-4);
    }
    for (const auto& c : testing::check_dense(seed, 5, 4, 3)) {
      INFO(c.what);
      CHECK(c.error < 1e-6);
    }
    for (const auto& c : testing::check_prelu(seed, 3, 5)) {
      INFO(c.what);
      CHECK(c.error < 1e-6);
    }
    for (const auto& c : testing::check_softmax_ce(seed, 4, 6)) {
      INFO(c.what);
      CHECK(c.error < 1e-6);
    }
  }
  for (const auto& c : testing::check_network(7, 3)) {
    INFO(c.what);
    CHECK(c.error < 1e-4);
  }
}

TEST_CASE("parameter order and counts") {
  Network<float> net(tiny_lstm());
  std::vector<std::string> names;
  for (auto* p : net.params()) names.push_back(p->name);
  CHECK(names == std::vector<std::string>{"lstm0.W", "lstm0.U", "lstm0.b", "dense0.W", "dense0.b",
                                          "prelu0.a", "output.W", "output.b"});
  // 4H(in + H + 1) + dense + prelu + output
  CHECK(net.parameter_count() == 4 * 8 * (10 + 8 + 1) + (8 * 8 + 8) + 1 + (6 * 8 + 6));
  CHECK_THROWS_AS(net.forward(Mat<float>::Zero(2, 39)), ShapeError);
}

TEST_CASE("Adam examples") {
  Param<double> p{"p", Mat<double>::Constant(1, 1, 2.0), Mat<double>::Zero(1, 1)};
  Adam<double> adam;
  adam.step({&p}, 1e-3);
  CHECK(p.value(0, 0) == 2.0);
  CHECK(adam.steps() == 1);

  Param<double> q{"q", Mat<double>::Constant(1, 1, 2.0), Mat<double>::Constant(1, 1, 1.0)};
  Adam<double> first;
  first.step({&q}, 1e-3);
  CHECK(q.value(0, 0) == doctest::Approx(2.0 - 1e-3).epsilon(1e-9));

  Param<double> r{"r", Mat<double>::Constant(1, 2, 1.0), Mat<double>::Zero(1, 2)};
  r.grad(0, 1) = std::numeric_limits<double>::quiet_NaN();
  Adam<double> guard;
  CHECK_THROWS_AS(guard.step({&r}, 1e-3), NonFiniteGradient);
  CHECK(r.value(0, 0) == 1.0);
  CHECK(guard.steps() == 0);
}

TEST_CASE("learning rate schedule") {
  std::vector<double> lr;
  for (std::size_t e = 0; e < 10; ++e) lr.push_back(learning_rate_at(e, 10, 1e-4));
  CHECK(lr[4] == 1e-4);
  CHECK(lr[5] == doctest::Approx(1e-5));
  CHECK(lr[6] == doctest::Approx(1e-5));
  CHECK(lr[7] == doctest::Approx(1e-6));
  CHECK(learning_rate_at(249, 500, 1e-4) == 1e-4);
  CHECK(learning_rate_at(250, 500, 1e-4) == doctest::Approx(1e-5));
  CHECK(learning_rate_at(350, 500, 1e-4) == doctest::Approx(1e-6));
  CHECK(learning_rate_at(29, 60, 1e-3) == 1e-3);
  CHECK(learning_rate_at(30, 60, 1e-3) == doctest::Approx(1e-4));
  CHECK(learning_rate_at(42, 60, 1e-3) == doctest::Approx(1e-5));
}

TEST_CASE("training separates two constant classes and is deterministic") {
  auto train_set = constant_classes(16, 10, 2, {0.0f, 1.0f}, 1);
  auto valid_set = constant_classes(6, 10, 2, {0.0f, 1.0f}, 2);
  TrainOptions opt;
  opt.epochs = 20;
  opt.batch = 8;
  opt.learning_rate = 1e-2;
  auto cfg = tiny_lstm(20, 5);

  auto a = train(cfg, train_set, &valid_set, opt);
  CHECK(a.log.size() == 20);
  CHECK(evaluate(a.model, valid_set.samples).accuracy == 1.0);

  auto b = train(cfg, train_set, &valid_set, opt);
  auto pa = a.model.params(), pb = b.model.params();
  for (std::size_t i = 0; i < pa.size(); ++i) CHECK(pa[i]->value == pb[i]->value);
  CHECK(a.best_epoch == b.best_epoch);
}

TEST_CASE("training loss falls over the first epochs") {
  auto data = constant_classes(30, 10, 3, {-1.0f, 0.0f, 1.0f, 2.0f, 3.0f, 4.0f}, 4);
  TrainOptions opt;
  opt.epochs = 5;
  opt.batch = 16;
  opt.learning_rate = 1e-3;
  auto r = train(tiny_lstm(30, 5), data, nullptr, opt);
  for (std::size_t e = 1; e < r.log.size(); ++e) CHECK(r.log[e].train_loss < r.log[e - 1].train_loss);
}

TEST_CASE("untrained model loss is close to ln 6") {
  auto data = constant_classes(10, 20, 4, {-1.0f, -0.5f, 0.0f, 0.5f, 1.0f, 1.5f}, 9);
  ModelConfig cfg;
  cfg.input_size = 80;
  cfg.steps = 4;
  cfg.lstm_units = {16, 16};
  cfg.dense = {8};
  Network<float> net(cfg);
  auto r = evaluate(net, data.samples);
  CHECK(r.loss == doctest::Approx(std::log(6.0)).epsilon(0.03));
}

TEST_CASE("diverging training aborts with the log kept") {
  auto data = constant_classes(8, 10, 2, {0.0f, 1.0f}, 1);
  data.samples[3].window.data[0] = std::numeric_limits<float>::infinity();
  TrainOptions opt;
  opt.epochs = 3;
  opt.batch = 16;
  try {
    train(tiny_lstm(20, 5), data, nullptr, opt);
    FAIL("expected divergence");
  } catch (const TrainingDiverged& e) {
    CHECK_FALSE(e.log.empty());
  }
}

TEST_CASE("prediction contract") {
  CHECK(decide({0.9, 0.02, 0.02, 0.02, 0.02, 0.02}) == 0);
  CHECK(decide({0.1, 0.1, 0.3, 0.1, 0.3, 0.1}) == 2);

  Checkpoint ck{Network<float>(tiny_lstm()), {}, {}, 0, {}};
  ck.data.channels = {"a", "b"};
  ck.data.window_steps = 20;
  std::mt19937_64 rng(4);
  std::normal_distribution<float> g;
  std::vector<preprocess::Sample> xs(5);
  for (auto& s : xs) {
    s.window = Tensor({20, 2});
    for (auto& v : s.window.data) v = g(rng);
  }
  for (const auto& p : predict_batch(ck, xs)) {
    const double sum = std::accumulate(p.posterior.begin(), p.posterior.end(), 0.0);
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(p.class_id == decide(p.posterior));
  }
  CHECK_THROWS_AS(predict(ck, Tensor({19, 2})), ShapeError);
}

TEST_CASE("argmax is invariant to a constant logit shift") {
  std::mt19937_64 rng(12);
  for (int i = 0; i < 50; ++i) {
    Mat<double> logits = random_mat(rng, 1, 6, 5.0);
    const Mat<double> p = softmax<double>(logits);
    const Mat<double> q = softmax<double>((logits.array() + 123.0).matrix());
    Eigen::Index a, b, r;
    p.row(0).maxCoeff(&r, &a);
    q.row(0).maxCoeff(&r, &b);
    CHECK(a == b);
  }
}

TEST_CASE("checkpoint round trip is bit-identical") {
  auto data = constant_classes(6, 10, 2, {0.0f, 1.0f}, 3);
  TrainOptions opt;
  opt.epochs = 2;
  auto r = train(tiny_lstm(20, 5), data, nullptr, opt);
  Checkpoint ck{std::move(r.model), {}, r.log, r.best_epoch, {{"note", "unit"}}};
  ck.data.channels = data.channels;
  ck.data.window_steps = 10;
  ck.data.norm = preprocess::NormStats{data.channels, {0.5, 0.25}, {2, 3}};

  const auto path = std::filesystem::temp_directory_path() / "tcpid_unit.ckpt";
  save_checkpoint(ck, path);
  auto back = load_checkpoint(path);
  CHECK(back.log.size() == 2);
  CHECK(back.provenance["note"] == "unit");
  CHECK(back.data.norm->stddev == ck.data.norm->stddev);
  auto p1 = predict_batch(ck, data.samples);
  auto p2 = predict_batch(back, data.samples);
  for (std::size_t i = 0; i < p1.size(); ++i) CHECK(p1[i].posterior == p2[i].posterior);

  auto c = read_container(path, "TCPIDCK1");
  auto header = nlohmann::json::parse(c.header);
  header["version"] = kCheckpointVersion + 1;
  write_container(path, "TCPIDCK1", Container{header.dump(), c.payload});
  CHECK_THROWS_AS(load_checkpoint(path), FormatError);
  std::filesystem::remove(path);
}

TEST_CASE("reinit_output redraws only the output layer") {
  Network<float> net(tiny_lstm());
  Network<float> copy = net;
  net.reinit_output(99);
  auto a = net.params(), b = copy.params();
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i]->name == "output.W") {
      CHECK(a[i]->value != b[i]->value);
    } else {
      CHECK(a[i]->value == b[i]->value);
    }
  }
}

TEST_CASE("DNN baseline trains on flat windows") {
  auto data = constant_classes(10, 10, 2, {0.0f, 1.0f}, 6);
  auto cfg = ModelConfig::dnn_preset(20);
  cfg.dense = {16, 8};
  TrainOptions opt;
  opt.epochs = 15;
  opt.batch = 8;
  opt.learning_rate = 1e-2;
  auto r = train(cfg, data, nullptr, opt);
  CHECK(evaluate(r.model, data.samples).accuracy == 1.0);
}
