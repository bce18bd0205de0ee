#include <doctest.h>

#include <algorithm>
#include <map>
#include <random>

#include "tcpid/eval/ablation.hpp"
#include "tcpid/eval/metrics.hpp"
#include "tcpid/eval/report.hpp"

using namespace tcpid;
using eval::ConfusionMatrix;

namespace {

ConfusionMatrix from_counts(std::vector<std::vector<std::int64_t>> counts) {
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < counts.size(); ++i) cm.labels.push_back("k" + std::to_string(i));
  cm.counts = std::move(counts);
  return cm;
}

// Nearest class mean of channel 0, a deterministic stand-in for training.
std::vector<int> nearest_mean(const preprocess::Dataset& train, const preprocess::Dataset& test) {
  std::map<int, std::pair<double, int>> acc;
  for (const auto& s : train.samples) {
    acc[s.label].first += s.window.data[0];
    acc[s.label].second += 1;
  }
  std::vector<int> out;
  for (const auto& s : test.samples) {
    int best = 0;
    double gap = 1e300;
    for (const auto& [label, sum] : acc) {
      const double d = std::abs(s.window.data[0] - sum.first / sum.second);
      if (d < gap) {
        gap = d;
        best = label;
      }
    }
    out.push_back(best);
  }
  return out;
}

preprocess::Dataset toy(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> g(0.0f, 0.2f);
  preprocess::Dataset d;
  d.channels = {"throughput", "oneway_delay"};
  d.window_steps = 3;
  for (int i = 0; i < 60; ++i) {
    preprocess::Sample s;
    s.label = i % 6;
    s.window = Tensor({3, 2});
    // Only the second channel carries the label.
    for (std::size_t t = 0; t < 3; ++t) {
      s.window.at(t, 0) = g(rng);
      s.window.at(t, 1) = static_cast<float>(s.label) + g(rng);
    }
    d.samples.push_back(s);
  }
  return d;
}

}  // namespace

TEST_CASE("confusion examples") {
  std::vector<int> truth, pred;
  for (int c = 0; c < 6; ++c) {
    for (int i = 0; i < 180; ++i) {
      truth.push_back(c);
      pred.push_back(c);
    }
  }
  auto cm = eval::confusion(pred, truth);
  for (int r = 0; r < 6; ++r) {
    for (int c = 0; c < 6; ++c) CHECK(cm.counts[r][c] == (r == c ? 180 : 0));
  }
  CHECK(cm.labels[4] == "BBR");

  auto single = eval::confusion(std::vector<int>{3}, std::vector<int>{1});
  CHECK(single.counts[1][3] == 1);
  CHECK(single.total() == 1);

  CHECK_THROWS_AS(eval::confusion(std::vector<int>{1, 2}, std::vector<int>{1}), std::invalid_argument);
  CHECK_THROWS_AS(eval::confusion(std::vector<int>{}, std::vector<int>{}), std::invalid_argument);
  CHECK_THROWS_AS(eval::confusion(std::vector<int>{7}, std::vector<int>{1}), std::invalid_argument);
}

TEST_CASE("prf1 examples") {
  auto diag = eval::prf1(from_counts({{5, 0, 0}, {0, 3, 0}, {0, 0, 9}}));
  for (const auto& m : diag.per_class) {
    CHECK(m.precision == 1.0);
    CHECK(m.recall == 1.0);
    CHECK(m.f1 == 1.0);
  }
  CHECK(diag.accuracy == 1.0);

  auto two = eval::prf1(from_counts({{1, 1}, {0, 2}}));
  CHECK(two.per_class[0].precision == 1.0);
  CHECK(two.per_class[0].recall == 0.5);
  CHECK(two.per_class[0].f1 == doctest::Approx(2.0 / 3.0));
  CHECK(two.accuracy == 0.75);

  // A class that is never predicted and never present.
  auto empty = eval::prf1(from_counts({{4, 0}, {0, 0}}));
  CHECK(empty.per_class[1].precision == 0.0);
  CHECK(empty.per_class[1].precision_undefined);
  CHECK(empty.per_class[1].recall_undefined);
  CHECK(empty.per_class[1].f1_undefined);
  CHECK(empty.per_class[1].support == 0);
}

TEST_CASE("near-perfect BBR rows through prf1") {
  // Wired BBR row: 179 right, 1 taken for Cubic.
  std::vector<std::vector<std::int64_t>> wired(6, std::vector<std::int64_t>(6, 0));
  for (int i = 0; i < 6; ++i) wired[i][i] = 180;
  wired[4][4] = 179;
  wired[4][1] = 1;
  auto m = eval::prf1(from_counts(wired));
  CHECK(m.per_class[4].recall == 179.0 / 180.0);
  CHECK(m.per_class[4].support == 180);
  CHECK(m.per_class[4].precision == 1.0);

  std::vector<std::vector<std::int64_t>> wl(6, std::vector<std::int64_t>(6, 0));
  for (int i = 0; i < 6; ++i) wl[i][i] = 240;
  auto w = eval::prf1(from_counts(wl));
  CHECK(w.per_class[4].precision == 1.0);
  CHECK(w.per_class[4].recall == 1.0);
  CHECK(w.per_class[4].f1 == 1.0);
  CHECK(w.per_class[4].support == 240);
}

TEST_CASE("prf1 is equivariant under label permutation") {
  std::mt19937_64 rng(21);
  std::vector<std::vector<std::int64_t>> counts(5, std::vector<std::int64_t>(5));
  for (auto& row : counts) {
    for (auto& v : row) v = static_cast<std::int64_t>(rng() % 20);
  }
  std::vector<std::size_t> perm{3, 0, 4, 1, 2};
  std::vector<std::vector<std::int64_t>> permuted(5, std::vector<std::int64_t>(5));
  for (std::size_t r = 0; r < 5; ++r) {
    for (std::size_t c = 0; c < 5; ++c) permuted[perm[r]][perm[c]] = counts[r][c];
  }
  auto a = eval::prf1(from_counts(counts));
  auto b = eval::prf1(from_counts(permuted));
  CHECK(a.accuracy == b.accuracy);
  for (std::size_t k = 0; k < 5; ++k) {
    CHECK(a.per_class[k].precision == b.per_class[perm[k]].precision);
    CHECK(a.per_class[k].recall == b.per_class[perm[k]].recall);
    CHECK(a.per_class[k].f1 == b.per_class[perm[k]].f1);
  }
}

TEST_CASE("summary averages") {
  auto m = eval::prf1(from_counts({{8, 2}, {1, 9}}));
  CHECK(m.macro.recall == doctest::Approx((0.8 + 0.9) / 2));
  CHECK(m.weighted.recall == doctest::Approx((0.8 * 10 + 0.9 * 10) / 20));
  CHECK(m.accuracy == doctest::Approx(17.0 / 20));
}

TEST_CASE("report renderings") {
  auto cm = eval::confusion(std::vector<int>{0, 1, 4, 4}, std::vector<int>{0, 1, 4, 5});
  auto table = eval::confusion_table(cm);
  CHECK(table.find("Westwood") != std::string::npos);
  auto csv = eval::confusion_csv(cm);
  CHECK(csv.find("BBR") != std::string::npos);
  auto mt = eval::metrics_table(eval::prf1(cm));
  CHECK(mt.find("precision") != std::string::npos);
  CHECK(mt.find("accuracy") != std::string::npos);
  auto j = eval::to_json(eval::prf1(cm));
  CHECK(j["accuracy"].get<double>() == 0.75);
}

TEST_CASE("ablation drops channels and isolates runs") {
  auto train = toy(1), test = toy(2);
  auto subsets = eval::default_subsets(train.channels);
  REQUIRE(subsets.size() == 3);
  CHECK(subsets[0] == train.channels);

  // Channel 0 of each reduced dataset is the single kept channel.
  auto runs = eval::ablate(train, test, subsets, nearest_mean);
  REQUIRE(runs.size() == 3);
  CHECK(runs[0].channels == train.channels);
  CHECK(runs[2].accuracy == 1.0);  // oneway_delay alone carries the label
  CHECK(runs[1].accuracy < 0.5);
  CHECK(runs[1].class_recall.size() == 6);

  std::vector<std::vector<std::string>> reversed(subsets.rbegin(), subsets.rend());
  auto again = eval::ablate(train, test, reversed, nearest_mean);
  for (std::size_t i = 0; i < runs.size(); ++i) {
    CHECK(again[runs.size() - 1 - i].confusion == runs[i].confusion);
  }

  int calls = 0;
  auto counting = [&](const preprocess::Dataset& a, const preprocess::Dataset& b) {
    ++calls;
    return nearest_mean(a, b);
  };
  CHECK_THROWS_AS(eval::ablate(train, test, {{"throughput"}, {"rlc_buffer"}}, counting), std::invalid_argument);
  CHECK(calls == 0);
  CHECK(eval::subset_key({"throughput", "inflight"}) == "throughput+inflight");
}
