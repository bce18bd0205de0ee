#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "tcpid/ccsim/algorithm.hpp"
#include "tcpid/features/features.hpp"
#include "tcpid/models/network.hpp"

namespace tcpid::pipeline {

// Invalid configuration; the message starts with the offending field path.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Range {
  double lo = 0.0;
  double hi = 0.0;
  bool operator==(const Range&) const = default;
};

// Per-flow parameters are drawn uniformly from these ranges.
struct GridConfig {
  Range rate_mbps{5.0, 10.0};
  Range rtt_ms{40.0, 100.0};
  Range buffer_bdp{1.0, 2.0};   // bottleneck buffer as a multiple of the BDP
  Range rlc_packets{100, 700};  // wireless only
  Range error_prob{0.005, 0.02};  // wireless only

  static GridConfig defaults(features::Scenario scenario);
};

struct PreprocessConfig {
  double interval = 0.005;
  double alpha = 0.3;
  std::size_t window = 3000;
  std::size_t train_stride = 1500;
  std::size_t test_stride = 3000;
  bool center = true;  // remove each window's mean before normalizing
};

struct TrainConfig {
  std::size_t epochs = 500;
  std::size_t batch = 32;
  double learning_rate = 1e-4;
  double weight_decay = 0.0;
  std::string init_checkpoint;  // fine-tune from these weights when set
  bool reinit_output = false;
};

struct SplitConfig {
  double train = 0.8;
  double valid = 0.0;
  double test = 0.2;
};

struct ExperimentConfig {
  features::Scenario scenario = features::Scenario::Wired;
  std::vector<ccsim::CcAlgorithm> algorithms{ccsim::kAllAlgorithms.begin(),
                                             ccsim::kAllAlgorithms.end()};
  GridConfig grid;
  std::size_t flows_per_algorithm = 20;
  double duration = 60.0;
  std::uint64_t seed = 1;
  PreprocessConfig preprocess;
  // input_size is derived from the window and channel count; seed defaults
  // to the experiment seed.
  models::ModelConfig model;
  bool model_seed_set = false;
  TrainConfig train;
  SplitConfig split;
  std::vector<std::vector<std::string>> ablation;  // empty: all, then each channel alone

  void validate() const;  // throws ConfigError
  // Model config with input_size filled in for `channels` input channels.
  models::ModelConfig model_for(std::size_t channels) const;
};

nlohmann::json to_json(const ExperimentConfig& config);
ExperimentConfig config_from_json(const nlohmann::json& j);  // validates

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;
std::optional<std::string> process_env(const std::string& name);

// TCPID_SEED, TCPID_SCENARIO, TCPID_FLOWS_PER_ALGORITHM, TCPID_DURATION,
// TCPID_EPOCHS, TCPID_BATCH, TCPID_LEARNING_RATE replace the matching keys.
void apply_env_overrides(nlohmann::json& j, const EnvLookup& env = process_env);

ExperimentConfig load_config(const std::filesystem::path& path, const EnvLookup& env = process_env);

// FNV-1a over the canonical JSON form.
std::string config_hash(const ExperimentConfig& config);
std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace tcpid::pipeline
