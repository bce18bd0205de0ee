#include "tcpid/pipeline/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <random>

#include "tcpid/container.hpp"
#include "tcpid/eval/ablation.hpp"

namespace tcpid::pipeline {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

double draw(std::mt19937_64& rng, const Range& r) {
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return r.lo + u * (r.hi - r.lo);
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& ch : out) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return out;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void write_text(const fs::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << body;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

// Stream tags for derive_seed, kept apart from the simulator's own streams.
constexpr std::uint64_t kGridStream = 0x6772696400000000ULL;
constexpr std::uint64_t kFlowStream = 0x666c6f7700000000ULL;
constexpr std::uint64_t kSplitStream = 0x73706c6974000000ULL;

}  // namespace

std::vector<FlowSpec> plan_flows(const ExperimentConfig& config) {
  config.validate();
  const bool wireless = config.scenario == features::Scenario::Wireless;
  std::vector<ccsim::LinkConfig> links;
  std::vector<std::optional<ccsim::RadioConfig>> radios;
  for (std::size_t i = 0; i < config.flows_per_algorithm; ++i) {
    std::mt19937_64 rng(ccsim::derive_seed(config.seed, kGridStream + i));
    ccsim::LinkConfig link;
    link.rate_bps = draw(rng, config.grid.rate_mbps) * 1e6;
    link.prop_rtt = draw(rng, config.grid.rtt_ms) / 1000.0;
    const double buffer_bdp = draw(rng, config.grid.buffer_bdp);
    link.buffer = std::max(1, static_cast<int>(std::lround(buffer_bdp * link.bdp_packets())));
    std::optional<ccsim::RadioConfig> radio;
    if (wireless) {
      link.wireless = true;
      ccsim::RadioConfig rc;
      rc.rlc_cap = std::max(1, static_cast<int>(std::lround(draw(rng, config.grid.rlc_packets))));
      link.random_loss = draw(rng, config.grid.error_prob);
      radio = rc;
    }
    link.validate();
    links.push_back(link);
    radios.push_back(radio);
  }

  std::vector<FlowSpec> flows;
  for (auto algo : config.algorithms) {
    const auto stream = ccsim::derive_seed(
        config.seed, kFlowStream + static_cast<std::uint64_t>(ccsim::class_id(algo)));
    for (std::size_t i = 0; i < config.flows_per_algorithm; ++i) {
      char id[64];
      std::snprintf(id, sizeof id, "%s-%04zu", lower(ccsim::to_string(algo)).c_str(), i);
      flows.push_back({id, algo, links[i], radios[i], ccsim::derive_seed(stream, i)});
    }
  }
  return flows;
}

json simulate(const ExperimentConfig& config, const fs::path& out_dir, std::ostream* log) {
  const auto flows = plan_flows(config);
  fs::create_directories(out_dir / "traces");
  json entries = json::array();
  for (const auto& f : flows) {
    const auto trace = ccsim::simulate_flow(f.algorithm, f.link, config.duration, f.seed, f.radio);
    const fs::path stem = out_dir / "traces" / f.id;
    ccsim::write_trace(trace, stem);
    json e = {{"id", f.id},
              {"label", std::string(ccsim::to_string(f.algorithm))},
              {"class_id", ccsim::class_id(f.algorithm)},
              {"csv", "traces/" + f.id + ".csv"},
              {"records", trace.records.size()},
              {"csv_fnv1a64", hex64(fnv1a64(ccsim::trace_to_csv(trace)))},
              {"seed", f.seed},
              {"rate_bps", f.link.rate_bps},
              {"prop_rtt", f.link.prop_rtt},
              {"buffer", f.link.buffer},
              {"random_loss", f.link.random_loss}};
    if (f.radio) e["rlc_cap"] = f.radio->rlc_cap;
    entries.push_back(e);
    if (log) {
      *log << "simulated " << f.id << " (" << trace.records.size() << " packets)\n";
    }
  }
  json manifest = {{"version", kManifestVersion},
                   {"config_hash", config_hash(config)},
                   {"config", to_json(config)},
                   {"flows", entries}};
  write_text(out_dir / "manifest.json", manifest.dump(2) + "\n");
  return manifest;
}

preprocess::WindowSet trace_windows(const ccsim::FlowTrace& trace, const preprocess::DataSpec& spec,
                                    std::size_t stride, const std::string& trace_id) {
  auto series = features::extract_features(trace, spec.scenario);
  if (series.channel_names != spec.channels) {
    throw FormatError("trace channels do not match the expected layout");
  }
  preprocess::WindowSet ws;
  if (series.size() < 2) {
    ws.warning = "trace '" + trace_id + "' has fewer than 2 feature samples";
    return ws;
  }
  series = preprocess::ewma(preprocess::resample_linear(series, spec.grid_interval), spec.ewma_alpha);
  ws = preprocess::make_windows(series, stride, spec.window_steps, trace_id);
  if (spec.centered) preprocess::center_windows(ws.samples);
  if (spec.norm) preprocess::apply_normalization(ws.samples, *spec.norm);
  return ws;
}

DatasetSplits build_datasets(const ExperimentConfig& config, const fs::path& trace_dir,
                             std::ostream* log) {
  const fs::path manifest_path = trace_dir / "manifest.json";
  if (!fs::exists(manifest_path)) {
    throw std::runtime_error("no manifest.json in " + trace_dir.string());
  }
  std::ifstream in(manifest_path);
  const json manifest = json::parse(in, nullptr, false);
  if (manifest.is_discarded() || !manifest.contains("flows")) {
    throw FormatError(manifest_path.string() + " is not a valid manifest");
  }
  if (manifest.value("version", 0) != kManifestVersion) {
    throw FormatError(manifest_path.string() + ": unsupported manifest version");
  }
  if (manifest["flows"].empty()) throw std::runtime_error("manifest lists no traces");

  // Per-class lists of (manifest index, id, csv path).
  std::map<int, std::vector<std::size_t>> by_class;
  const auto& flows = manifest["flows"];
  for (std::size_t i = 0; i < flows.size(); ++i) {
    by_class[flows[i].at("class_id").get<int>()].push_back(i);
  }

  enum Part { kTrain, kValid, kTest };
  std::vector<Part> part(flows.size(), kTrain);
  std::mt19937_64 rng(ccsim::derive_seed(config.seed, kSplitStream));
  for (auto& [cls, idx] : by_class) {
    for (std::size_t i = idx.size(); i-- > 1;) std::swap(idx[i], idx[rng() % (i + 1)]);
    const auto n = static_cast<double>(idx.size());
    auto n_test = static_cast<std::size_t>(std::llround(config.split.test * n));
    auto n_valid = static_cast<std::size_t>(std::llround(config.split.valid * n));
    while (n_test + n_valid >= idx.size() && n_test + n_valid > 0) {
      if (n_valid > 0) {
        --n_valid;
      } else {
        --n_test;
      }
    }
    for (std::size_t k = 0; k < idx.size(); ++k) {
      part[idx[k]] = k < n_test ? kTest : (k < n_test + n_valid ? kValid : kTrain);
    }
  }

  preprocess::DataSpec spec;
  spec.scenario = config.scenario;
  spec.channels = features::channel_names(config.scenario);
  spec.window_steps = config.preprocess.window;
  spec.grid_interval = config.preprocess.interval;
  spec.ewma_alpha = config.preprocess.alpha;
  spec.centered = config.preprocess.center;

  DatasetSplits out;
  preprocess::Dataset* sets[3] = {&out.train, &out.valid, &out.test};
  for (auto* d : sets) {
    d->scenario = spec.scenario;
    d->channels = spec.channels;
    d->window_steps = spec.window_steps;
    d->grid_interval = spec.grid_interval;
    d->ewma_alpha = spec.ewma_alpha;
    d->centered = spec.centered;
  }
  json trace_lists = {{"train", json::array()}, {"valid", json::array()}, {"test", json::array()}};
  const char* part_names[3] = {"train", "valid", "test"};

  for (std::size_t i = 0; i < flows.size(); ++i) {
    const auto id = flows[i].at("id").get<std::string>();
    const auto trace = ccsim::read_trace(trace_dir / flows[i].at("csv").get<std::string>(),
                                         ccsim::algorithm_from_class_id(flows[i].at("class_id").get<int>()));
    const std::size_t stride =
        part[i] == kTrain ? config.preprocess.train_stride : config.preprocess.test_stride;
    auto ws = trace_windows(trace, spec, stride, id);
    if (ws.samples.empty()) {
      out.skipped.push_back(id);
      if (log) *log << "skipped: " << ws.warning.value_or(id) << "\n";
      continue;
    }
    trace_lists[part_names[part[i]]].push_back(id);
    auto& dst = sets[part[i]]->samples;
    std::move(ws.samples.begin(), ws.samples.end(), std::back_inserter(dst));
  }
  if (out.train.samples.empty()) {
    throw std::runtime_error("no training windows: every training trace is shorter than one window");
  }

  const auto stats = preprocess::fit_normalization(out.train.samples, spec.channels);
  for (auto* d : sets) {
    preprocess::apply_normalization(d->samples, stats);
    d->norm = stats;
  }

  out.summary = {{"config_hash", config_hash(config)},
                 {"scenario", std::string(features::to_string(config.scenario))},
                 {"channels", spec.channels},
                 {"windows",
                  {{"train", out.train.size()}, {"valid", out.valid.size()}, {"test", out.test.size()}}},
                 {"traces", trace_lists},
                 {"skipped", out.skipped}};
  if (log) {
    *log << "windows: train " << out.train.size() << ", valid " << out.valid.size() << ", test "
         << out.test.size() << " (" << out.skipped.size() << " traces skipped)\n";
  }
  return out;
}

void write_datasets(const DatasetSplits& splits, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  preprocess::write_dataset(splits.train, out_dir / "train.tcpds");
  preprocess::write_dataset(splits.test, out_dir / "test.tcpds");
  if (!splits.valid.samples.empty()) {
    preprocess::write_dataset(splits.valid, out_dir / "valid.tcpds");
  } else {
    fs::remove(out_dir / "valid.tcpds");
  }
  write_text(out_dir / "dataset.json", splits.summary.dump(2) + "\n");
}

LoadedSplits read_datasets(const fs::path& dir) {
  LoadedSplits s{preprocess::read_dataset(dir / "train.tcpds"), std::nullopt,
                 preprocess::read_dataset(dir / "test.tcpds")};
  if (fs::exists(dir / "valid.tcpds")) s.valid = preprocess::read_dataset(dir / "valid.tcpds");
  return s;
}

models::Checkpoint train_checkpoint(const ExperimentConfig& config, const preprocess::Dataset& train,
                                    const preprocess::Dataset* valid, std::ostream* log) {
  models::ModelConfig mc = config.model_for(train.channels.size());
  std::optional<models::Network<float>> init;
  if (!config.train.init_checkpoint.empty()) {
    auto base = models::load_checkpoint(config.train.init_checkpoint);
    if (base.config().input_size != mc.input_size) {
      throw FormatError("init checkpoint expects " + std::to_string(base.config().input_size) +
                        " inputs, the dataset provides " + std::to_string(mc.input_size));
    }
    mc = base.config();
    init.emplace(std::move(base.model));
    if (config.train.reinit_output) init->reinit_output(ccsim::derive_seed(config.seed, 7));
  }

  models::TrainOptions opt;
  opt.epochs = config.train.epochs;
  opt.batch = config.train.batch;
  opt.learning_rate = config.train.learning_rate;
  opt.weight_decay = config.train.weight_decay;
  opt.seed = config.seed;
  if (log) {
    opt.on_epoch = [log](const models::EpochLog& e) {
      char buf[200];
      std::snprintf(buf, sizeof buf, "epoch %4zu  lr %.1e  loss %.4f  acc %.3f", e.epoch + 1,
                    e.learning_rate, e.train_loss, e.train_accuracy);
      *log << buf;
      if (e.valid_accuracy) {
        std::snprintf(buf, sizeof buf, "  valid loss %.4f  acc %.3f", *e.valid_loss, *e.valid_accuracy);
        *log << buf;
      }
      *log << std::endl;
    };
  }
  const bool use_valid = valid && !valid->samples.empty();
  auto result = models::train(mc, train, use_valid ? valid : nullptr, opt, init ? &*init : nullptr);
  models::Checkpoint ck{std::move(result.model), train.spec(), std::move(result.log), result.best_epoch,
                        json{{"config_hash", config_hash(config)}, {"seed", config.seed}}};
  return ck;
}

Evaluation evaluate_checkpoint(models::Checkpoint& ck, const preprocess::Dataset& data) {
  if (data.channels != ck.data.channels || data.window_steps != ck.data.window_steps ||
      data.scenario != ck.data.scenario || data.centered != ck.data.centered) {
    throw FormatError("dataset layout does not match the checkpoint (channels, window length or centering differ)");
  }
  if (data.norm.has_value() != ck.data.norm.has_value() ||
      (data.norm && (data.norm->mean != ck.data.norm->mean || data.norm->stddev != ck.data.norm->stddev))) {
    throw FormatError("dataset was normalized with different statistics than the checkpoint");
  }
  if (data.samples.empty()) throw std::runtime_error("dataset has no windows to evaluate");
  Evaluation ev;
  for (const auto& p : models::predict_batch(ck, data.samples)) ev.predictions.push_back(p.class_id);
  ev.confusion = eval::confusion(ev.predictions, data.labels());
  ev.metrics = eval::prf1(ev.confusion);
  return ev;
}

std::vector<eval::AblationRun> run_ablation(const ExperimentConfig& config,
                                            const preprocess::Dataset& train,
                                            const preprocess::Dataset& test, std::ostream* log) {
  const auto subsets = config.ablation.empty() ? eval::default_subsets(train.channels) : config.ablation;
  auto fit = [&](const preprocess::Dataset& tr, const preprocess::Dataset& te) {
    if (log) *log << "ablation: training on " << eval::subset_key(tr.channels) << "\n";
    auto ck = train_checkpoint(config, tr, nullptr, nullptr);
    std::vector<int> preds;
    for (const auto& p : models::predict_batch(ck, te.samples)) preds.push_back(p.class_id);
    return preds;
  };
  return eval::ablate(train, test, subsets, fit);
}

int vote(std::span<const models::Prediction> windows) {
  if (windows.empty()) throw std::invalid_argument("vote needs at least one window");
  std::array<int, ccsim::kNumAlgorithms> votes{};
  std::array<double, ccsim::kNumAlgorithms> summed{};
  for (const auto& w : windows) {
    ++votes[static_cast<std::size_t>(w.class_id)];
    for (std::size_t c = 0; c < summed.size(); ++c) summed[c] += w.posterior[c];
  }
  int best = 0;
  for (int c = 1; c < ccsim::kNumAlgorithms; ++c) {
    const auto i = static_cast<std::size_t>(c);
    const auto b = static_cast<std::size_t>(best);
    if (votes[i] > votes[b] || (votes[i] == votes[b] && summed[i] > summed[b])) best = c;
  }
  return best;
}

Identification identify(models::Checkpoint& ck, const ccsim::FlowTrace& trace) {
  Identification out;
  auto ws = trace_windows(trace, ck.data, ck.data.window_steps, "input");
  out.warning = ws.warning;
  if (ws.samples.empty()) {
    out.flow_class = -1;
    return out;
  }
  out.windows = models::predict_batch(ck, ws.samples);
  out.flow_class = vote(out.windows);
  for (const auto& w : out.windows) {
    for (std::size_t c = 0; c < out.mean_posterior.size(); ++c) out.mean_posterior[c] += w.posterior[c];
  }
  for (auto& p : out.mean_posterior) p /= static_cast<double>(out.windows.size());
  return out;
}

}  // namespace tcpid::pipeline
