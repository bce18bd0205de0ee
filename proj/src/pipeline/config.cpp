#include "tcpid/pipeline/config.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace tcpid::pipeline {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& field, const std::string& msg) {
  throw ConfigError(field + ": " + msg);
}

void reject_unknown(const json& j, const std::string& where, std::set<std::string> known) {
  if (!j.is_object()) fail(where.empty() ? "config" : where, "expected an object");
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) fail(where.empty() ? key : where + "." + key, "unknown key");
  }
}

template <typename T>
T get(const json& j, const std::string& key, const std::string& field, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    fail(field, "has the wrong type (" + j.at(key).dump() + ")");
  }
}

Range get_range(const json& j, const std::string& key, const std::string& field, Range fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (v.is_number()) return {v.get<double>(), v.get<double>()};
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
    fail(field, "expected [low, high]");
  }
  return {v[0].get<double>(), v[1].get<double>()};
}

void check_range(const Range& r, const std::string& field, double min, bool min_inclusive,
                 double max = INFINITY) {
  if (!std::isfinite(r.lo) || !std::isfinite(r.hi)) fail(field, "must be finite");
  if (r.lo > r.hi) {
    std::ostringstream os;
    os << "range [" << r.lo << ", " << r.hi << "] is inverted";
    fail(field, os.str());
  }
  if (min_inclusive ? r.lo < min : r.lo <= min) {
    fail(field, std::string("lower bound must be ") + (min_inclusive ? ">= " : "> ") +
                    std::to_string(min));
  }
  if (r.hi >= max) fail(field, "upper bound must be < " + std::to_string(max));
}

json range_json(const Range& r) { return json::array({r.lo, r.hi}); }

}  // namespace

GridConfig GridConfig::defaults(features::Scenario scenario) {
  GridConfig g;
  if (scenario == features::Scenario::Wireless) g.rtt_ms = {20.0, 100.0};
  return g;
}

void ExperimentConfig::validate() const {
  if (algorithms.empty()) fail("algorithms", "must list at least one algorithm");
  std::set<ccsim::CcAlgorithm> seen(algorithms.begin(), algorithms.end());
  if (seen.size() != algorithms.size()) fail("algorithms", "contains duplicates");
  check_range(grid.rate_mbps, "grid.rate_mbps", 0.0, false);
  check_range(grid.rtt_ms, "grid.rtt_ms", 0.0, false);
  check_range(grid.buffer_bdp, "grid.buffer_bdp", 0.0, false);
  check_range(grid.rlc_packets, "grid.rlc_packets", 1.0, true);
  check_range(grid.error_prob, "grid.error_prob", 0.0, true, 1.0);
  if (flows_per_algorithm == 0) fail("flows_per_algorithm", "must be >= 1");
  if (!(duration > 0.0) || !std::isfinite(duration)) fail("duration", "must be > 0");

  if (!(preprocess.interval > 0.0)) fail("preprocess.interval", "must be > 0");
  if (!(preprocess.alpha > 0.0 && preprocess.alpha <= 1.0)) fail("preprocess.alpha", "must be in (0, 1]");
  if (preprocess.window < 2) fail("preprocess.window", "must be >= 2");
  if (preprocess.train_stride == 0) fail("preprocess.train_stride", "must be >= 1");
  if (preprocess.test_stride == 0) fail("preprocess.test_stride", "must be >= 1");

  if (train.epochs == 0) fail("train.epochs", "must be >= 1");
  if (train.batch == 0) fail("train.batch", "must be >= 1");
  if (!(train.learning_rate > 0.0)) fail("train.learning_rate", "must be > 0");
  if (!(train.weight_decay >= 0.0)) fail("train.weight_decay", "must be >= 0");

  for (const auto& [name, v] : {std::pair{"split.train", split.train}, {"split.valid", split.valid},
                                {"split.test", split.test}}) {
    if (!(v >= 0.0 && v <= 1.0)) fail(name, "must be in [0, 1]");
  }
  if (std::abs(split.train + split.valid + split.test - 1.0) > 1e-9) {
    fail("split", "fractions must sum to 1");
  }
  if (!(split.train > 0.0)) fail("split.train", "must be > 0");

  const auto& names = features::channel_names(scenario);
  for (const auto& subset : ablation) {
    if (subset.empty()) fail("ablation", "subsets must not be empty");
    for (const auto& c : subset) {
      if (std::find(names.begin(), names.end(), c) == names.end()) {
        fail("ablation", "unknown channel '" + c + "' for the " +
                             std::string(features::to_string(scenario)) + " scenario");
      }
    }
  }
  try {
    model_for(names.size()).validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

models::ModelConfig ExperimentConfig::model_for(std::size_t channels) const {
  models::ModelConfig m = model;
  m.input_size = preprocess.window * channels;
  if (!model_seed_set) m.seed = seed;
  return m;
}

json to_json(const ExperimentConfig& c) {
  json algos = json::array();
  for (auto a : c.algorithms) algos.push_back(std::string(ccsim::to_string(a)));
  json model = models::to_json(c.model);
  model.erase("input_size");
  if (!c.model_seed_set) model.erase("seed");
  return {
      {"scenario", std::string(features::to_string(c.scenario))},
      {"algorithms", algos},
      {"grid",
       {{"rate_mbps", range_json(c.grid.rate_mbps)},
        {"rtt_ms", range_json(c.grid.rtt_ms)},
        {"buffer_bdp", range_json(c.grid.buffer_bdp)},
        {"rlc_packets", range_json(c.grid.rlc_packets)},
        {"error_prob", range_json(c.grid.error_prob)}}},
      {"flows_per_algorithm", c.flows_per_algorithm},
      {"duration", c.duration},
      {"seed", c.seed},
      {"preprocess",
       {{"interval", c.preprocess.interval},
        {"alpha", c.preprocess.alpha},
        {"window", c.preprocess.window},
        {"train_stride", c.preprocess.train_stride},
        {"test_stride", c.preprocess.test_stride},
        {"center", c.preprocess.center}}},
      {"model", model},
      {"train",
       {{"epochs", c.train.epochs},
        {"batch", c.train.batch},
        {"learning_rate", c.train.learning_rate},
        {"weight_decay", c.train.weight_decay},
        {"init_checkpoint", c.train.init_checkpoint},
        {"reinit_output", c.train.reinit_output}}},
      {"split", {{"train", c.split.train}, {"valid", c.split.valid}, {"test", c.split.test}}},
      {"ablation", c.ablation},
  };
}

ExperimentConfig config_from_json(const json& j) {
  reject_unknown(j, "", {"scenario", "algorithms", "grid", "flows_per_algorithm", "duration", "seed",
                         "preprocess", "model", "train", "split", "ablation"});
  ExperimentConfig c;
  if (j.contains("scenario")) {
    auto s = features::parse_scenario(get<std::string>(j, "scenario", "scenario", ""));
    if (!s) fail("scenario", "expected \"wired\" or \"wireless\"");
    c.scenario = *s;
  }
  c.grid = GridConfig::defaults(c.scenario);
  if (j.contains("algorithms")) {
    const auto names = get<std::vector<std::string>>(j, "algorithms", "algorithms", {});
    c.algorithms.clear();
    for (const auto& n : names) {
      auto a = ccsim::parse_algorithm(n);
      if (!a) fail("algorithms", "unknown algorithm '" + n + "'");
      c.algorithms.push_back(*a);
    }
  }
  if (j.contains("grid")) {
    const auto& g = j["grid"];
    reject_unknown(g, "grid", {"rate_mbps", "rtt_ms", "buffer_bdp", "rlc_packets", "error_prob"});
    c.grid.rate_mbps = get_range(g, "rate_mbps", "grid.rate_mbps", c.grid.rate_mbps);
    c.grid.rtt_ms = get_range(g, "rtt_ms", "grid.rtt_ms", c.grid.rtt_ms);
    c.grid.buffer_bdp = get_range(g, "buffer_bdp", "grid.buffer_bdp", c.grid.buffer_bdp);
    c.grid.rlc_packets = get_range(g, "rlc_packets", "grid.rlc_packets", c.grid.rlc_packets);
    c.grid.error_prob = get_range(g, "error_prob", "grid.error_prob", c.grid.error_prob);
  }
  const auto flows = get<std::int64_t>(j, "flows_per_algorithm", "flows_per_algorithm", 20);
  if (flows < 1) fail("flows_per_algorithm", "must be >= 1");
  c.flows_per_algorithm = static_cast<std::size_t>(flows);
  c.duration = get<double>(j, "duration", "duration", c.duration);
  c.seed = get<std::uint64_t>(j, "seed", "seed", c.seed);

  if (j.contains("preprocess")) {
    const auto& p = j["preprocess"];
    reject_unknown(p, "preprocess", {"interval", "alpha", "window", "train_stride", "test_stride", "center"});
    c.preprocess.interval = get<double>(p, "interval", "preprocess.interval", c.preprocess.interval);
    c.preprocess.alpha = get<double>(p, "alpha", "preprocess.alpha", c.preprocess.alpha);
    c.preprocess.window = get<std::size_t>(p, "window", "preprocess.window", c.preprocess.window);
    c.preprocess.train_stride =
        get<std::size_t>(p, "train_stride", "preprocess.train_stride", c.preprocess.train_stride);
    c.preprocess.test_stride =
        get<std::size_t>(p, "test_stride", "preprocess.test_stride", c.preprocess.test_stride);
    c.preprocess.center = get<bool>(p, "center", "preprocess.center", c.preprocess.center);
  }
  if (j.contains("model")) {
    const auto& m = j["model"];
    reject_unknown(m, "model", {"architecture", "steps", "lstm_units", "dense", "outputs", "seed", "dropout"});
    try {
      c.model = models::model_config_from_json(m);
    } catch (const json::exception& e) {
      fail("model", std::string("has the wrong type: ") + e.what());
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    c.model_seed_set = m.contains("seed");
  }
  if (j.contains("train")) {
    const auto& t = j["train"];
    reject_unknown(t, "train", {"epochs", "batch", "learning_rate", "weight_decay", "init_checkpoint",
                                "reinit_output"});
    c.train.epochs = get<std::size_t>(t, "epochs", "train.epochs", c.train.epochs);
    c.train.batch = get<std::size_t>(t, "batch", "train.batch", c.train.batch);
    c.train.learning_rate = get<double>(t, "learning_rate", "train.learning_rate", c.train.learning_rate);
    c.train.weight_decay = get<double>(t, "weight_decay", "train.weight_decay", c.train.weight_decay);
    c.train.init_checkpoint =
        get<std::string>(t, "init_checkpoint", "train.init_checkpoint", c.train.init_checkpoint);
    c.train.reinit_output = get<bool>(t, "reinit_output", "train.reinit_output", c.train.reinit_output);
  }
  if (j.contains("split")) {
    const auto& s = j["split"];
    reject_unknown(s, "split", {"train", "valid", "test"});
    c.split.train = get<double>(s, "train", "split.train", c.split.train);
    c.split.valid = get<double>(s, "valid", "split.valid", c.split.valid);
    c.split.test = get<double>(s, "test", "split.test", c.split.test);
  }
  c.ablation = get<std::vector<std::vector<std::string>>>(j, "ablation", "ablation", {});
  c.validate();
  return c;
}

std::optional<std::string> process_env(const std::string& name) {
  const char* v = std::getenv(name.c_str());
  if (!v) return std::nullopt;
  return std::string(v);
}

void apply_env_overrides(json& j, const EnvLookup& env) {
  static const std::vector<std::pair<std::string, json::json_pointer>> kMap = {
      {"TCPID_SEED", json::json_pointer("/seed")},
      {"TCPID_SCENARIO", json::json_pointer("/scenario")},
      {"TCPID_FLOWS_PER_ALGORITHM", json::json_pointer("/flows_per_algorithm")},
      {"TCPID_DURATION", json::json_pointer("/duration")},
      {"TCPID_EPOCHS", json::json_pointer("/train/epochs")},
      {"TCPID_BATCH", json::json_pointer("/train/batch")},
      {"TCPID_LEARNING_RATE", json::json_pointer("/train/learning_rate")},
  };
  if (!j.is_object()) j = json::object();
  for (const auto& [var, ptr] : kMap) {
    const auto value = env(var);
    if (!value) continue;
    // Numbers arrive as JSON literals, anything else as a string.
    json parsed = json::parse(*value, nullptr, false);
    j[ptr] = parsed.is_discarded() ? json(*value) : parsed;
  }
}

ExperimentConfig load_config(const std::filesystem::path& path, const EnvLookup& env) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path.string());
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ConfigError("config: " + path.string() + " is not valid JSON");
  apply_env_overrides(j, env);
  return config_from_json(j);
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string config_hash(const ExperimentConfig& config) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(to_json(config).dump())));
  return buf;
}

}  // namespace tcpid::pipeline
