#include "tcpid/models/checkpoint.hpp"

#include "tcpid/container.hpp"

namespace tcpid::models {

using nlohmann::json;

namespace {
constexpr const char* kMagic = "TCPIDCK1";
}

void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path) {
  json h;
  h["version"] = kCheckpointVersion;
  h["config"] = to_json(ck.config());
  json labels = json::array();
  for (auto a : ccsim::kAllAlgorithms) labels.push_back(std::string(ccsim::to_string(a)));
  h["label_map"] = labels;
  h["data"] = preprocess::to_json(ck.data);
  json log = json::array();
  for (const auto& e : ck.log) log.push_back(to_json(e));
  h["log"] = log;
  h["best_epoch"] = ck.best_epoch;
  h["provenance"] = ck.provenance;

  Container c;
  json manifest = json::array();
  for (const auto* p : ck.model.params()) {
    manifest.push_back({{"name", p->name},
                        {"shape", {p->value.rows(), p->value.cols()}},
                        {"offset", c.payload.size()}});
    c.payload.insert(c.payload.end(), p->value.data(), p->value.data() + p->value.size());
  }
  h["parameters"] = manifest;
  c.header = h.dump();
  write_container(path, kMagic, c);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  Container c = read_container(path, kMagic);
  const std::string where = path.string() + ": ";
  try {
    const json h = json::parse(c.header);
    const int version = h.at("version").get<int>();
    if (version != kCheckpointVersion) {
      throw FormatError(where + "checkpoint version " + std::to_string(version) +
                        " is not supported (expected " + std::to_string(kCheckpointVersion) + ")");
    }
    const auto labels = h.at("label_map").get<std::vector<std::string>>();
    for (std::size_t i = 0; i < labels.size(); ++i) {
      auto a = ccsim::parse_algorithm(labels[i]);
      if (!a || ccsim::class_id(*a) != static_cast<int>(i)) {
        throw FormatError(where + "label map does not match this build");
      }
    }
    Checkpoint ck{Network<float>(model_config_from_json(h.at("config"))),
                  preprocess::data_spec_from_json(h.at("data")),
                  {},
                  h.value("best_epoch", std::size_t{0}),
                  h.value("provenance", json::object())};
    for (const auto& e : h.at("log")) ck.log.push_back(epoch_log_from_json(e));

    const auto& manifest = h.at("parameters");
    auto params = ck.model.params();
    if (manifest.size() != params.size()) {
      throw FormatError(where + "parameter manifest does not match the model config");
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto& p = *params[i];
      const auto& m = manifest[i];
      const auto shape = m.at("shape").get<std::vector<Eigen::Index>>();
      const auto offset = m.at("offset").get<std::size_t>();
      if (m.at("name").get<std::string>() != p.name || shape.size() != 2 ||
          shape[0] != p.value.rows() || shape[1] != p.value.cols()) {
        throw FormatError(where + "parameter " + p.name + " does not match the manifest");
      }
      const auto count = static_cast<std::size_t>(p.value.size());
      if (offset + count > c.payload.size()) throw FormatError(where + "parameter blob truncated");
      std::copy_n(c.payload.begin() + static_cast<std::ptrdiff_t>(offset), count, p.value.data());
    }
    return ck;
  } catch (const json::exception& e) {
    throw FormatError(where + "malformed header: " + e.what());
  } catch (const std::invalid_argument& e) {
    throw FormatError(where + e.what());
  }
}

int decide(const std::array<double, ccsim::kNumAlgorithms>& posterior) {
  return argmax(posterior);
}

std::vector<Prediction> predict_batch(Checkpoint& ck, std::span<const preprocess::Sample> samples) {
  for (const auto& s : samples) {
    if (s.window.size() != ck.config().input_size ||
        (s.window.rank() == 2 && s.window.shape[1] != ck.data.channels.size())) {
      throw ShapeError("window shape does not match the checkpoint (expected " +
                       std::to_string(ck.data.window_steps) + "x" +
                       std::to_string(ck.data.channels.size()) + ")");
    }
  }
  // Softmax in double so the posterior sums to 1 well inside float rounding.
  std::vector<Prediction> out(samples.size());
  constexpr std::size_t kChunk = 128;
  for (std::size_t i = 0; i < samples.size(); i += kChunk) {
    const auto chunk = samples.subspan(i, std::min(kChunk, samples.size() - i));
    const Mat<double> post = softmax<double>(ck.model.forward(stack_windows(chunk)).cast<double>());
    for (std::size_t k = 0; k < chunk.size(); ++k) {
      auto& p = out[i + k];
      for (int c = 0; c < ccsim::kNumAlgorithms; ++c) {
        p.posterior[static_cast<std::size_t>(c)] = post(static_cast<Eigen::Index>(k), c);
      }
      p.class_id = decide(p.posterior);
    }
  }
  return out;
}

Prediction predict(Checkpoint& ck, const Tensor& window) {
  preprocess::Sample s;
  s.window = window;
  return predict_batch(ck, std::span<const preprocess::Sample>(&s, 1)).front();
}

}  // namespace tcpid::models
