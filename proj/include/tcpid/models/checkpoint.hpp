#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "tcpid/ccsim/algorithm.hpp"
#include "tcpid/models/network.hpp"
#include "tcpid/models/train.hpp"
#include "tcpid/preprocess/dataset.hpp"

namespace tcpid::models {

inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  Network<float> model;
  preprocess::DataSpec data;
  std::vector<EpochLog> log;
  std::size_t best_epoch = 0;
  nlohmann::json provenance = nlohmann::json::object();  // free-form: dataset paths, config hash

  const ModelConfig& config() const { return model.config(); }
};

void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path);
// Throws tcpid::FormatError on a bad file or a version mismatch.
Checkpoint load_checkpoint(const std::filesystem::path& path);

struct Prediction {
  int class_id = 0;
  std::array<double, ccsim::kNumAlgorithms> posterior{};
};

// Windows must already be normalized with ck.data.norm.
Prediction predict(Checkpoint& ck, const Tensor& window);
std::vector<Prediction> predict_batch(Checkpoint& ck, std::span<const preprocess::Sample> samples);

// Argmax of a posterior, lowest class id on ties.
int decide(const std::array<double, ccsim::kNumAlgorithms>& posterior);

}  // namespace tcpid::models
