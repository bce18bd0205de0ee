#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "tcpid/ccsim/simulator.hpp"
#include "tcpid/eval/ablation.hpp"
#include "tcpid/eval/metrics.hpp"
#include "tcpid/models/checkpoint.hpp"
#include "tcpid/pipeline/config.hpp"
#include "tcpid/preprocess/dataset.hpp"

namespace tcpid::pipeline {

inline constexpr int kManifestVersion = 1;

struct FlowSpec {
  std::string id;
  ccsim::CcAlgorithm algorithm = ccsim::CcAlgorithm::NewReno;
  ccsim::LinkConfig link;
  std::optional<ccsim::RadioConfig> radio;
  std::uint64_t seed = 0;
};

// Grid point i is shared by every algorithm so that link parameters carry no
// information about the label.
std::vector<FlowSpec> plan_flows(const ExperimentConfig& config);

// Writes traces/<id>.csv + .json under out_dir and returns the manifest, which
// is also written to out_dir/manifest.json.
nlohmann::json simulate(const ExperimentConfig& config, const std::filesystem::path& out_dir,
                        std::ostream* log = nullptr);

// extract -> resample -> ewma -> window, then normalize when spec.norm is set.
preprocess::WindowSet trace_windows(const ccsim::FlowTrace& trace, const preprocess::DataSpec& spec,
                                    std::size_t stride, const std::string& trace_id);

struct DatasetSplits {
  preprocess::Dataset train;
  preprocess::Dataset valid;
  preprocess::Dataset test;
  std::vector<std::string> skipped;  // traces shorter than one window
  nlohmann::json summary;
};

// Splits by trace, stratified per algorithm, then normalizes with stats fitted
// on the training windows only.
DatasetSplits build_datasets(const ExperimentConfig& config, const std::filesystem::path& trace_dir,
                             std::ostream* log = nullptr);
void write_datasets(const DatasetSplits& splits, const std::filesystem::path& out_dir);

struct LoadedSplits {
  preprocess::Dataset train;
  std::optional<preprocess::Dataset> valid;
  preprocess::Dataset test;
};
LoadedSplits read_datasets(const std::filesystem::path& dir);

models::Checkpoint train_checkpoint(const ExperimentConfig& config, const preprocess::Dataset& train,
                                    const preprocess::Dataset* valid, std::ostream* log = nullptr);

struct Evaluation {
  eval::ConfusionMatrix confusion;
  eval::Metrics metrics;
  std::vector<int> predictions;
};

// Throws tcpid::FormatError when the dataset layout differs from the checkpoint's.
Evaluation evaluate_checkpoint(models::Checkpoint& ck, const preprocess::Dataset& data);

std::vector<eval::AblationRun> run_ablation(const ExperimentConfig& config,
                                            const preprocess::Dataset& train,
                                            const preprocess::Dataset& test,
                                            std::ostream* log = nullptr);

struct Identification {
  std::vector<models::Prediction> windows;
  int flow_class = 0;
  std::array<double, ccsim::kNumAlgorithms> mean_posterior{};
  std::optional<std::string> warning;
};

// Majority vote over window predictions; ties go to the larger summed
// posterior, then to the lower class id.
int vote(std::span<const models::Prediction> windows);

// Per-window posteriors plus vote() over them.
Identification identify(models::Checkpoint& ck, const ccsim::FlowTrace& trace);

}  // namespace tcpid::pipeline
