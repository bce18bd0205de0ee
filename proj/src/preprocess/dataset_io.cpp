#include <algorithm>
#include <unordered_set>

#include <json.hpp>

#include "tcpid/ccsim/algorithm.hpp"
#include "tcpid/container.hpp"
#include "tcpid/preprocess/dataset.hpp"

namespace tcpid::preprocess {

using nlohmann::json;

namespace {
constexpr const char* kMagic = "TCPIDSET";
}

json to_json(const DataSpec& spec) {
  json j;
  j["scenario"] = std::string(features::to_string(spec.scenario));
  j["channels"] = spec.channels;
  j["window_steps"] = spec.window_steps;
  j["grid_interval"] = spec.grid_interval;
  j["ewma_alpha"] = spec.ewma_alpha;
  j["centered"] = spec.centered;
  if (spec.norm) {
    j["norm"] = {{"mean", spec.norm->mean}, {"stddev", spec.norm->stddev}};
  } else {
    j["norm"] = nullptr;
  }
  return j;
}

DataSpec data_spec_from_json(const json& j) {
  DataSpec spec;
  auto scen = features::parse_scenario(j.at("scenario").get<std::string>());
  if (!scen) throw FormatError("unknown scenario " + j.at("scenario").dump());
  spec.scenario = *scen;
  spec.channels = j.at("channels").get<std::vector<std::string>>();
  spec.window_steps = j.at("window_steps").get<std::size_t>();
  spec.grid_interval = j.at("grid_interval").get<double>();
  spec.ewma_alpha = j.at("ewma_alpha").get<double>();
  spec.centered = j.at("centered").get<bool>();
  if (!j.at("norm").is_null()) {
    NormStats ns;
    ns.channels = spec.channels;
    ns.mean = j["norm"].at("mean").get<std::vector<double>>();
    ns.stddev = j["norm"].at("stddev").get<std::vector<double>>();
    if (ns.mean.size() != spec.channels.size() || ns.stddev.size() != spec.channels.size()) {
      throw FormatError("normalization stats do not match the channel list");
    }
    spec.norm = ns;
  }
  return spec;
}

DataSpec Dataset::spec() const {
  return {scenario, channels, window_steps, grid_interval, ewma_alpha, centered, norm};
}

std::vector<int> Dataset::labels() const {
  std::vector<int> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(s.label);
  return out;
}

std::vector<std::string> Dataset::trace_ids() const {
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  for (const auto& s : samples) {
    if (seen.insert(s.trace_id).second) out.push_back(s.trace_id);
  }
  return out;
}

Dataset select_channels(const Dataset& data, const std::vector<std::string>& keep) {
  if (keep.empty()) throw std::invalid_argument("channel subset is empty");
  std::vector<std::size_t> idx;
  for (const auto& name : keep) {
    auto it = std::find(data.channels.begin(), data.channels.end(), name);
    if (it == data.channels.end()) throw std::invalid_argument("unknown channel '" + name + "'");
    idx.push_back(static_cast<std::size_t>(it - data.channels.begin()));
  }
  Dataset out;
  out.scenario = data.scenario;
  out.channels = keep;
  out.window_steps = data.window_steps;
  out.grid_interval = data.grid_interval;
  out.ewma_alpha = data.ewma_alpha;
  out.centered = data.centered;
  if (data.norm) {
    NormStats ns;
    ns.channels = keep;
    for (auto i : idx) {
      ns.mean.push_back(data.norm->mean[i]);
      ns.stddev.push_back(data.norm->stddev[i]);
    }
    out.norm = ns;
  }
  out.samples.reserve(data.samples.size());
  for (const auto& s : data.samples) {
    Sample t;
    t.label = s.label;
    t.trace_id = s.trace_id;
    t.start = s.start;
    t.window = Tensor({s.steps(), idx.size()});
    for (std::size_t r = 0; r < s.steps(); ++r) {
      for (std::size_t c = 0; c < idx.size(); ++c) t.window.at(r, c) = s.window.at(r, idx[c]);
    }
    out.samples.push_back(std::move(t));
  }
  return out;
}

void write_dataset(const Dataset& data, const std::filesystem::path& path) {
  json h;
  h["version"] = kDatasetVersion;
  h["data"] = to_json(data.spec());
  json labels = json::array();
  for (auto a : ccsim::kAllAlgorithms) labels.push_back(std::string(ccsim::to_string(a)));
  h["label_map"] = labels;
  h["count"] = data.samples.size();
  json lab = json::array();
  json origins = json::array();
  Container c;
  const std::size_t per = data.window_steps * data.channels.size();
  c.payload.reserve(per * data.samples.size());
  for (const auto& s : data.samples) {
    if (s.window.size() != per) throw std::invalid_argument("sample shape does not match dataset");
    lab.push_back(s.label);
    origins.push_back({{"trace", s.trace_id}, {"start", s.start}});
    c.payload.insert(c.payload.end(), s.window.data.begin(), s.window.data.end());
  }
  h["labels"] = lab;
  h["origins"] = origins;
  c.header = h.dump();
  write_container(path, kMagic, c);
}

Dataset read_dataset(const std::filesystem::path& path) {
  Container c = read_container(path, kMagic);
  Dataset d;
  try {
    const json h = json::parse(c.header);
    const int version = h.at("version").get<int>();
    if (version != kDatasetVersion) {
      throw FormatError(path.string() + ": dataset version " + std::to_string(version) +
                        " is not supported (expected " + std::to_string(kDatasetVersion) + ")");
    }
    const DataSpec spec = data_spec_from_json(h.at("data"));
    d.scenario = spec.scenario;
    d.channels = spec.channels;
    d.window_steps = spec.window_steps;
    d.grid_interval = spec.grid_interval;
    d.ewma_alpha = spec.ewma_alpha;
    d.centered = spec.centered;
    d.norm = spec.norm;
    const auto count = h.at("count").get<std::size_t>();
    const auto& lab = h.at("labels");
    const auto& origins = h.at("origins");
    const std::size_t per = d.window_steps * d.channels.size();
    if (lab.size() != count || origins.size() != count || c.payload.size() != per * count) {
      throw FormatError(path.string() + ": header counts disagree with the payload");
    }
    d.samples.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
      auto& s = d.samples[i];
      s.label = lab[i].get<int>();
      s.trace_id = origins[i].at("trace").get<std::string>();
      s.start = origins[i].at("start").get<std::size_t>();
      const auto first = c.payload.begin() + static_cast<std::ptrdiff_t>(i * per);
      s.window = Tensor({d.window_steps, d.channels.size()},
                        std::vector<float>(first, first + static_cast<std::ptrdiff_t>(per)));
    }
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": malformed header: " + e.what());
  }
  return d;
}

}  // namespace tcpid::preprocess
