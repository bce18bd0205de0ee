#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tcpid/features/features.hpp"
#include "tcpid/preprocess/preprocess.hpp"

namespace tcpid::preprocess {

inline constexpr int kDatasetVersion = 1;

// Everything needed to turn a raw trace into model input the same way again.
struct DataSpec {
  features::Scenario scenario = features::Scenario::Wired;
  std::vector<std::string> channels;
  std::size_t window_steps = kWindowLength;
  double grid_interval = kGridInterval;
  double ewma_alpha = kEwmaAlpha;
  bool centered = true;  // center_windows applied before normalization
  std::optional<NormStats> norm;
};

nlohmann::json to_json(const DataSpec& spec);
DataSpec data_spec_from_json(const nlohmann::json& j);

// One split's worth of windows plus what is needed to interpret them.
struct Dataset {
  features::Scenario scenario = features::Scenario::Wired;
  std::vector<std::string> channels;
  std::size_t window_steps = kWindowLength;
  double grid_interval = kGridInterval;
  double ewma_alpha = kEwmaAlpha;
  bool centered = true;
  std::optional<NormStats> norm;
  std::vector<Sample> samples;

  DataSpec spec() const;

  std::size_t size() const { return samples.size(); }
  std::vector<int> labels() const;
  // Distinct trace ids in first-seen order.
  std::vector<std::string> trace_ids() const;
};

// Keeps only the named channels, in the order given. Throws std::invalid_argument
// on an unknown name.
Dataset select_channels(const Dataset& data, const std::vector<std::string>& keep);

void write_dataset(const Dataset& data, const std::filesystem::path& path);
Dataset read_dataset(const std::filesystem::path& path);  // throws FormatError

}  // namespace tcpid::preprocess
