// tcpid: simulate flows, build datasets, train, evaluate, ablate, identify.
// Exit codes: 0 success, 1 invalid configuration or arguments, 2 runtime failure.

#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "tcpid/container.hpp"
#include "tcpid/eval/report.hpp"
#include "tcpid/pipeline/pipeline.hpp"

namespace fs = std::filesystem;
using namespace tcpid;

namespace {

constexpr int kValidationError = 1;
constexpr int kRuntimeError = 2;

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

pipeline::ExperimentConfig load(const Common& c) {
  nlohmann::json j = nlohmann::json::object();
  if (!c.config.empty()) {
    std::ifstream in(c.config);
    if (!in) throw pipeline::ConfigError("--config: cannot open " + c.config);
    j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded()) throw pipeline::ConfigError("--config: " + c.config + " is not valid JSON");
  }
  pipeline::apply_env_overrides(j);
  if (c.seed) j["seed"] = *c.seed;
  return pipeline::config_from_json(j);
}

void write_file(const fs::path& p, const std::string& body) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << body;
}

void write_eval_reports(const pipeline::Evaluation& ev, const fs::path& dir) {
  write_file(dir / "confusion.csv", eval::confusion_csv(ev.confusion));
  write_file(dir / "metrics.csv", eval::metrics_csv(ev.metrics));
  write_file(dir / "report.json", nlohmann::json{{"confusion", eval::to_json(ev.confusion)},
                                                  {"metrics", eval::to_json(ev.metrics)}}
                                          .dump(2) + "\n");
  write_file(dir / "report.txt",
             eval::confusion_table(ev.confusion) + "\n" + eval::metrics_table(ev.metrics));
}

std::string name_of(int class_id) {
  return std::string(ccsim::to_string(ccsim::algorithm_from_class_id(class_id).value()));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Passive TCP congestion-control identification toolkit"};
  app.require_subcommand(1);
  Common common;
  auto add_common = [&](CLI::App* sub, bool need_out) {
    sub->add_option("--config", common.config, "Experiment config (JSON)");
    sub->add_option("--seed", common.seed, "Override the config seed");
    auto* out = sub->add_option("--out", common.out, "Output path");
    if (need_out) out->required();
  };

  auto* sim = app.add_subcommand("simulate", "Simulate labeled flows and write traces + manifest");
  add_common(sim, true);

  std::string traces_dir;
  auto* build = app.add_subcommand("build-dataset", "Turn simulated traces into train/test datasets");
  add_common(build, true);
  build->add_option("--traces", traces_dir, "Directory holding manifest.json")->required();

  std::string dataset_dir;
  std::optional<std::size_t> epochs;
  auto* train = app.add_subcommand("train", "Train a classifier and write a checkpoint");
  add_common(train, true);
  train->add_option("--dataset", dataset_dir, "Directory from build-dataset")->required();
  train->add_option("--epochs", epochs, "Override train.epochs");

  std::string checkpoint;
  std::string dataset_file;
  auto* evaluate = app.add_subcommand("evaluate", "Score a checkpoint on a dataset file");
  add_common(evaluate, false);
  evaluate->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
  evaluate->add_option("--dataset", dataset_file, "Dataset file (e.g. test.tcpds)")->required();

  auto* ablate = app.add_subcommand("ablate", "Retrain on feature subsets and compare accuracy");
  add_common(ablate, false);
  ablate->add_option("--dataset", dataset_dir, "Directory from build-dataset")->required();

  std::string trace_file;
  auto* ident = app.add_subcommand("identify", "Classify one trace CSV");
  add_common(ident, false);
  ident->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
  ident->add_option("--trace", trace_file, "Trace CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kValidationError;
  }

  try {
    if (*sim) {
      const auto cfg = load(common);
      const auto manifest = pipeline::simulate(cfg, common.out, &std::cerr);
      std::cout << "wrote " << manifest["flows"].size() << " traces and manifest.json to "
                << common.out << " (config " << manifest["config_hash"].get<std::string>() << ")\n";
    } else if (*build) {
      const auto cfg = load(common);
      const auto splits = pipeline::build_datasets(cfg, traces_dir, &std::cerr);
      pipeline::write_datasets(splits, common.out);
      std::cout << splits.summary.dump(2) << "\n";
    } else if (*train) {
      auto cfg = load(common);
      if (epochs) {
        cfg.train.epochs = *epochs;
        cfg.validate();
      }
      const auto data = pipeline::read_datasets(dataset_dir);
      auto ck = pipeline::train_checkpoint(cfg, data.train, data.valid ? &*data.valid : nullptr,
                                           &std::cerr);
      models::save_checkpoint(ck, common.out);
      const auto ev = pipeline::evaluate_checkpoint(ck, data.test);
      std::cout << "checkpoint " << common.out << " (best epoch " << ck.best_epoch + 1
                << "), test accuracy " << ev.metrics.accuracy << "\n";
    } else if (*evaluate) {
      auto ck = models::load_checkpoint(checkpoint);
      const auto data = preprocess::read_dataset(dataset_file);
      const auto ev = pipeline::evaluate_checkpoint(ck, data);
      std::cout << eval::confusion_table(ev.confusion) << "\n" << eval::metrics_table(ev.metrics);
      if (!common.out.empty()) write_eval_reports(ev, common.out);
    } else if (*ablate) {
      const auto cfg = load(common);
      const auto data = pipeline::read_datasets(dataset_dir);
      const auto runs = pipeline::run_ablation(cfg, data.train, data.test, &std::cerr);
      std::cout << eval::ablation_table(runs);
      if (!common.out.empty()) {
        write_file(fs::path(common.out) / "ablation.csv", eval::ablation_csv(runs));
        write_file(fs::path(common.out) / "ablation.json", eval::to_json(runs).dump(2) + "\n");
      }
    } else if (*ident) {
      auto ck = models::load_checkpoint(checkpoint);
      const auto trace = ccsim::read_trace(trace_file, ccsim::CcAlgorithm::NewReno);
      const auto id = pipeline::identify(ck, trace);
      if (id.flow_class < 0) {
        std::cerr << "error: " << id.warning.value_or("trace produced no windows") << "\n";
        return kRuntimeError;
      }
      for (std::size_t w = 0; w < id.windows.size(); ++w) {
        std::printf("window %zu: %s", w,
                    name_of(id.windows[w].class_id).c_str());
        for (double p : id.windows[w].posterior) std::printf(" %.4f", p);
        std::printf("\n");
      }
      std::printf("flow: %s  mean posterior",
                  name_of(id.flow_class).c_str());
      for (double p : id.mean_posterior) std::printf(" %.4f", p);
      std::printf("\n");
    }
  } catch (const pipeline::ConfigError& e) {
    std::cerr << "invalid config: " << e.what() << "\n";
    return kValidationError;
  } catch (const FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeError;
  }
  return 0;
}
