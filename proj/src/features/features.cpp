#include "tcpid/features/features.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <limits>

#include <json.hpp>

namespace tcpid::features {

using ccsim::PacketRecord;

std::string_view to_string(Scenario scenario) {
  return scenario == Scenario::Wired ? "wired" : "wireless";
}

std::optional<Scenario> parse_scenario(std::string_view name) {
  if (name == "wired") return Scenario::Wired;
  if (name == "wireless") return Scenario::Wireless;
  return std::nullopt;
}

const std::vector<std::string>& channel_names(Scenario scenario) {
  static const std::vector<std::string> wired = {"throughput", "oneway_delay", "inflight",
                                                 "packet_size"};
  static const std::vector<std::string> wireless = {"throughput", "oneway_delay",
                                                    "packet_size", "pdcp_delay", "rlc_buffer"};
  return scenario == Scenario::Wired ? wired : wireless;
}

std::size_t FeatureSeries::channel_index(std::string_view name) const {
  for (std::size_t i = 0; i < channel_names.size(); ++i) {
    if (channel_names[i] == name) return i;
  }
  throw FeatureError("unknown channel '" + std::string(name) + "'");
}

const std::vector<double>& FeatureSeries::channel(std::string_view name) const {
  return channels[channel_index(name)];
}

void FeatureSeries::check_alignment() const {
  if (channels.size() != channel_names.size()) {
    throw FeatureError("channel name count does not match channel count");
  }
  for (std::size_t i = 0; i < channels.size(); ++i) {
    if (channels[i].size() != timestamps.size()) {
      throw FeatureError("channel '" + channel_names[i] + "' has " +
                         std::to_string(channels[i].size()) + " values for " +
                         std::to_string(timestamps.size()) + " timestamps");
    }
  }
}

double throughput(const PacketRecord& curr, const PacketRecord& prev) {
  const double dt = curr.rx_time - prev.rx_time;
  if (!(dt > 0.0)) {
    throw std::invalid_argument("throughput: arrivals must have increasing rx_time");
  }
  return static_cast<double>(curr.size) * 8.0 / dt;
}

double min_raw_delay(const std::vector<PacketRecord>& records) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& r : records) best = std::min(best, r.rx_time - r.tx_time);
  return best;
}

double oneway_delay(const PacketRecord& rec, double flow_min) {
  return std::max(0.0, (rec.rx_time - rec.tx_time) - flow_min);
}

std::int64_t inflight(const PacketRecord& rec) {
  const std::int64_t value = rec.seq_end - rec.ack_sent;
  if (value < 0) {
    throw TraceCorruption("negative inflight at rx_time " + std::to_string(rec.rx_time) +
                          " (seq_end " + std::to_string(rec.seq_end) + " < ack " +
                          std::to_string(rec.ack_sent) + ")");
  }
  return value;
}

FeatureSeries extract_features(const ccsim::FlowTrace& trace, Scenario scenario) {
  if (trace.records.empty()) throw FeatureError("empty trace");
  if (scenario == Scenario::Wireless && !trace.has_radio_channels()) {
    throw FeatureError("wireless features need rlc_buffer and pdcp_delay on every record");
  }

  // Merge same-timestamp arrivals; the merged record keeps the last record's
  // fields except for the summed size.
  std::vector<PacketRecord> merged;
  merged.reserve(trace.records.size());
  for (const auto& r : trace.records) {
    if (!merged.empty() && r.rx_time == merged.back().rx_time) {
      const std::int64_t size = merged.back().size + r.size;
      merged.back() = r;
      merged.back().size = size;
    } else {
      merged.push_back(r);
    }
  }

  FeatureSeries out;
  out.label = trace.label;
  out.scenario = scenario;
  out.channel_names = channel_names(scenario);
  out.channels.assign(out.channel_names.size(), {});
  const std::size_t n = merged.size() > 0 ? merged.size() - 1 : 0;
  out.timestamps.reserve(n);
  for (auto& c : out.channels) c.reserve(n);

  const double flow_min = min_raw_delay(trace.records);
  for (std::size_t i = 1; i < merged.size(); ++i) {
    const PacketRecord& cur = merged[i];
    out.timestamps.push_back(cur.rx_time);
    out.channels[0].push_back(throughput(cur, merged[i - 1]));
    out.channels[1].push_back(oneway_delay(cur, flow_min));
    if (scenario == Scenario::Wired) {
      out.channels[2].push_back(static_cast<double>(inflight(cur)));
      out.channels[3].push_back(static_cast<double>(cur.size));
    } else {
      out.channels[2].push_back(static_cast<double>(cur.size));
      out.channels[3].push_back(*cur.pdcp_delay);
      out.channels[4].push_back(*cur.rlc_buffer);
    }
  }
  return out;
}

std::string series_to_csv(const FeatureSeries& series) {
  series.check_alignment();
  std::string out = "t";
  for (const auto& name : series.channel_names) out += "," + name;
  out += '\n';
  char buf[64];
  for (std::size_t i = 0; i < series.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.9f", series.timestamps[i]);
    out += buf;
    for (const auto& c : series.channels) {
      std::snprintf(buf, sizeof buf, ",%.9g", c[i]);
      out += buf;
    }
    out += '\n';
  }
  return out;
}

std::string series_sidecar_json(const FeatureSeries& series) {
  nlohmann::json j;
  j["label"] = std::string(ccsim::to_string(series.label));
  j["class_id"] = ccsim::class_id(series.label);
  j["scenario"] = std::string(to_string(series.scenario));
  j["channels"] = series.channel_names;
  j["samples"] = series.size();
  return j.dump(2) + "\n";
}

void write_series(const FeatureSeries& series, const std::filesystem::path& stem) {
  auto csv = stem;
  csv += ".csv";
  auto side = stem;
  side += ".json";
  std::ofstream(csv, std::ios::binary) << series_to_csv(series);
  std::ofstream(side, std::ios::binary) << series_sidecar_json(series);
}

}  // namespace tcpid::features
