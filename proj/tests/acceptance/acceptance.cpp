// Acceptance harness: one PASS/FAIL line per criterion on stdout, progress on
// stderr. Exit status is nonzero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "support/gradcheck.hpp"
#include "support/sim_checks.hpp"
#include "tcpid/eval/report.hpp"
#include "tcpid/models/train.hpp"
#include "tcpid/pipeline/pipeline.hpp"

using namespace tcpid;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Verdict {
  int id = 0;
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// 1. Analytic against central-difference gradients in double precision.
Verdict gradients() {
  const auto t0 = Clock::now();
  double worst_lstm = 0.0, worst_other = 0.0;
  std::size_t lstm_n = 0, dense_n = 0, prelu_n = 0, ce_n = 0;
  std::string worst_what;
  auto take = [&](const std::vector<testing::GradCheck>& checks, bool lstm, std::size_t& count) {
    ++count;
    for (const auto& c : checks) {
      double& worst = lstm ? worst_lstm : worst_other;
      if (c.error > worst) {
        worst = c.error;
        if (!lstm) worst_what = c.what;
      }
    }
  };
  std::mt19937_64 rng(2024);
  for (std::uint64_t i = 0; i < 20; ++i) {
    const int in = 2 + static_cast<int>(rng() % 5);
    const int hidden = 2 + static_cast<int>(rng() % 5);
    const int batch = 1 + static_cast<int>(rng() % 3);
    take(testing::check_lstm(100 + i, in, hidden, 20, batch), true, lstm_n);
    take(testing::check_dense(200 + i, in, hidden, batch), false, dense_n);
    take(testing::check_prelu(300 + i, batch + 1, hidden), false, prelu_n);
    take(testing::check_softmax_ce(400 + i, batch + 2, 6), false, ce_n);
  }
  for (std::uint64_t i = 0; i < 4; ++i) take(testing::check_network(500 + i, 3), true, lstm_n);
  const double secs = seconds_since(t0);
  const bool counts = std::min({lstm_n, dense_n, prelu_n, ce_n}) >= 20;
  return {1, counts && worst_lstm < 1e-4 && worst_other < 1e-6 && secs < 60.0,
          "instances lstm=" + std::to_string(lstm_n) + " dense=" + std::to_string(dense_n) +
              " prelu=" + std::to_string(prelu_n) + " softmax_ce=" + std::to_string(ce_n) +
              fmt(", max rel err lstm %.2e", worst_lstm) + fmt(" other %.2e", worst_other) +
              (worst_what.empty() ? "" : " (" + worst_what + ")") + fmt(", %.1f s", secs)};
}

// 2. Untrained network on the normalized wired training windows.
Verdict initial_loss(const pipeline::ExperimentConfig& config, const preprocess::Dataset& train) {
  models::Network<float> net(config.model_for(train.channels.size()));
  const auto r = models::evaluate(net, train.samples);
  const double target = std::log(6.0);
  return {2, std::abs(r.loss - target) <= 0.05,
          fmt("initial loss %.4f", r.loss) + fmt(" vs ln 6 = %.4f", target) + " over " +
              std::to_string(train.size()) + " windows"};
}

// 3. Randomized simulator sweep with trace-level invariants.
Verdict simulator_sweep() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(314159);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  testing::InvariantTally tally;
  for (int i = 0; i < 500; ++i) {
    testing::SimCase c;
    c.algo = ccsim::kAllAlgorithms[static_cast<std::size_t>(i) % ccsim::kNumAlgorithms];
    c.link.rate_bps = (2.0 + 18.0 * u(rng)) * 1e6;
    c.link.prop_rtt = 0.02 + 0.15 * u(rng);
    c.link.buffer =
        std::max(2, static_cast<int>(std::lround((0.5 + 3.0 * u(rng)) * c.link.bdp_packets())));
    if (i % 4 == 3) {
      c.link.wireless = true;
      c.link.random_loss = 0.03 * u(rng);
      c.radio = ccsim::RadioConfig{};
      c.radio->rlc_cap = 20 + static_cast<int>(680 * u(rng));
    }
    c.duration = 20.0;
    c.seed = rng();
    const auto r = ccsim::run_simulation(c.algo, c.link, c.duration, c.seed, c.radio);
    testing::check_invariants(c, r, tally);
  }
  const double secs = seconds_since(t0);
  for (std::size_t i = 0; i < std::min<std::size_t>(tally.failures.size(), 5); ++i) {
    std::cerr << "  invariant: " << tally.failures[i] << "\n";
  }
  std::ostringstream os;
  os << tally.flows << " flows, queue=" << tally.queue_violations
     << " conservation=" << tally.conservation_violations << " records=" << tally.record_violations
     << " recovery=" << tally.recovery_violations << "/" << tally.recovery_checked
     << " vegas=" << tally.vegas_violations << "/" << tally.vegas_checked
     << " throughput=" << tally.throughput_violations << fmt(", %.1f s", secs);
  return {3, tally.ok() && tally.recovery_checked > 0 && tally.vegas_checked > 0 && secs < 300.0,
          os.str()};
}

pipeline::ExperimentConfig analog_config(features::Scenario scenario, std::uint64_t seed) {
  auto j = nlohmann::json{{"scenario", features::to_string(scenario)},
                          {"flows_per_algorithm", 20},
                          {"duration", 60},
                          {"seed", seed},
                          {"model", {{"lstm_units", {64, 64}}, {"dense", {32}}}},
                          {"train", {{"epochs", 60}, {"batch", 32}, {"learning_rate", 1e-3}}}};
  return pipeline::config_from_json(j);
}

struct Run {
  pipeline::DatasetSplits splits;
  pipeline::Evaluation eval;
  double seconds = 0.0;
};

Run run_analog(const pipeline::ExperimentConfig& config, const fs::path& dir) {
  const auto t0 = Clock::now();
  fs::remove_all(dir);
  pipeline::simulate(config, dir / "traces");
  Run r;
  r.splits = pipeline::build_datasets(config, dir / "traces");
  auto ck = pipeline::train_checkpoint(config, r.splits.train, nullptr);
  r.eval = pipeline::evaluate_checkpoint(ck, r.splits.test);
  r.seconds = seconds_since(t0);
  std::cerr << eval::confusion_table(r.eval.confusion) << "\n";
  return r;
}

std::string accuracy_line(const char* name, const Run& r) {
  return std::string(name) + fmt(" accuracy %.4f", r.eval.metrics.accuracy) + " (" +
         std::to_string(r.eval.confusion.total()) + " test windows" + fmt(", %.0f s)", r.seconds);
}

// 7. prf1 against a count-by-count recomputation from expanded samples.
Verdict metric_check() {
  std::mt19937_64 rng(77);
  bool ok = true;
  for (int m = 0; m < 10; ++m) {
    const std::size_t k = 2 + rng() % 6;
    eval::ConfusionMatrix cm;
    for (std::size_t i = 0; i < k; ++i) cm.labels.push_back("c" + std::to_string(i));
    cm.counts.assign(k, std::vector<std::int64_t>(k));
    std::vector<int> truth, pred;
    for (std::size_t r = 0; r < k; ++r) {
      for (std::size_t c = 0; c < k; ++c) {
        cm.counts[r][c] = static_cast<std::int64_t>(rng() % 40) + (r == c ? 10 : 0);
        for (std::int64_t n = 0; n < cm.counts[r][c]; ++n) {
          truth.push_back(static_cast<int>(r));
          pred.push_back(static_cast<int>(c));
        }
      }
    }
    const auto got = eval::prf1(cm);
    std::int64_t correct = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) correct += truth[i] == pred[i];
    ok = ok && got.accuracy == static_cast<double>(correct) / static_cast<double>(truth.size());
    for (std::size_t c = 0; c < k; ++c) {
      std::int64_t tp = 0, predicted = 0, actual = 0;
      for (std::size_t i = 0; i < truth.size(); ++i) {
        const bool p = pred[i] == static_cast<int>(c), t = truth[i] == static_cast<int>(c);
        tp += p && t;
        predicted += p;
        actual += t;
      }
      const double precision = static_cast<double>(tp) / static_cast<double>(predicted);
      const double recall = static_cast<double>(tp) / static_cast<double>(actual);
      const double f1 = 2.0 * precision * recall / (precision + recall);
      const auto& g = got.per_class[c];
      ok = ok && g.precision == precision && g.recall == recall && g.f1 == f1 && g.support == actual;
    }
  }

  eval::ConfusionMatrix table;
  table.labels = {"NewReno", "Cubic", "Westwood", "Hybla", "BBR", "Vegas"};
  table.counts.assign(6, std::vector<std::int64_t>(6, 0));
  for (std::size_t i = 0; i < 6; ++i) table.counts[i][i] = 180;
  table.counts[4][4] = 179;
  table.counts[4][1] = 1;
  const double bbr = eval::prf1(table).per_class[4].recall;
  ok = ok && bbr == 179.0 / 180.0;
  return {7, ok, "10 random matrices exact" + fmt(", BBR row recall %.4f", bbr)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  fs::path work = fs::temp_directory_path() / "tcpid_acceptance";
  bool extra_seeds = true;
  app.add_option("--work-dir", work, "Scratch directory for traces and datasets");
  app.add_flag("!--no-extra-seeds", extra_seeds, "Skip the informational wireless seeds");
  CLI11_PARSE(app, argc, argv);
  fs::create_directories(work);

  std::vector<Verdict> verdicts;
  std::vector<std::string> info;
  auto report = [&](Verdict v) {
    std::cerr << (v.pass ? "PASS" : "FAIL") << " criterion " << v.id << "\n";
    verdicts.push_back(std::move(v));
  };

  report(gradients());
  report(simulator_sweep());
  report(metric_check());

  std::cerr << "criterion 4: wired analog\n";
  const auto wired_cfg = analog_config(features::Scenario::Wired, 42);
  const auto wired = run_analog(wired_cfg, work / "wired");
  report(initial_loss(wired_cfg, wired.splits.train));

  std::cerr << "criterion 4: wireless analog\n";
  const auto wl = run_analog(analog_config(features::Scenario::Wireless, 42), work / "wireless");
  const double wired_acc = wired.eval.metrics.accuracy, wl_acc = wl.eval.metrics.accuracy;
  report({4, wired_acc >= 0.90 && wl_acc >= 0.85,
          accuracy_line("wired", wired) + "; " + accuracy_line("wireless", wl) +
              "; thresholds 0.90 / 0.85"});

  std::cerr << "criterion 5: throughput-only ablation\n";
  auto ablation_cfg = wired_cfg;
  ablation_cfg.ablation = {{"throughput"}};
  const auto runs = pipeline::run_ablation(ablation_cfg, wired.splits.train, wired.splits.test);
  const auto& tp_only = runs.at(0);
  const auto bbr = static_cast<std::size_t>(ccsim::class_id(ccsim::CcAlgorithm::Bbr));
  const double bbr_recall = eval::prf1(tp_only.confusion).per_class[bbr].recall;
  report({5, wired_acc > tp_only.accuracy && bbr_recall >= 0.8,
          fmt("all features %.4f", wired_acc) + fmt(" > throughput only %.4f", tp_only.accuracy) +
              fmt("; throughput-only BBR recall %.4f", bbr_recall)});

  std::cerr << "criterion 6: wired rerun\n";
  const auto again = run_analog(wired_cfg, work / "wired_rerun");
  report({6, again.eval.confusion == wired.eval.confusion,
          std::string(again.eval.confusion == wired.eval.confusion ? "identical" : "different") +
              " confusion matrix on rerun" + fmt(" (accuracy %.4f)", again.eval.metrics.accuracy)});

  if (extra_seeds) {
    for (std::uint64_t seed : {1, 7}) {
      std::cerr << "info: wireless seed " << seed << "\n";
      const auto r = run_analog(analog_config(features::Scenario::Wireless, seed),
                                work / ("wireless_seed" + std::to_string(seed)));
      info.push_back("wireless seed " + std::to_string(seed) + fmt(": accuracy %.4f", r.eval.metrics.accuracy));
    }
  }

  std::sort(verdicts.begin(), verdicts.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  bool all = true;
  for (const auto& v : verdicts) {
    std::cout << (v.pass ? "PASS" : "FAIL") << " criterion " << v.id << ": " << v.detail << "\n";
    all = all && v.pass;
  }
  for (const auto& line : info) std::cout << "INFO " << line << "\n";
  return all ? 0 : 1;
}
