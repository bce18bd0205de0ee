#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "tcpid/ccsim/algorithm.hpp"
#include "tcpid/ccsim/trace.hpp"

namespace tcpid::features {

enum class Scenario { Wired, Wireless };

std::string_view to_string(Scenario scenario);
std::optional<Scenario> parse_scenario(std::string_view name);

// Channel layout per scenario. Wired: throughput, oneway_delay, inflight,
// packet_size. Wireless: throughput, oneway_delay, packet_size, pdcp_delay,
// rlc_buffer (inflight is left out, it tracks the RLC occupancy there).
const std::vector<std::string>& channel_names(Scenario scenario);

class FeatureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class TraceCorruption : public FeatureError {
 public:
  using FeatureError::FeatureError;
};

// Irregularly sampled feature channels sharing one timestamp axis.
struct FeatureSeries {
  std::vector<double> timestamps;
  std::vector<std::string> channel_names;
  std::vector<std::vector<double>> channels;
  ccsim::CcAlgorithm label = ccsim::CcAlgorithm::NewReno;
  Scenario scenario = Scenario::Wired;

  std::size_t size() const { return timestamps.size(); }
  std::size_t num_channels() const { return channels.size(); }
  std::size_t channel_index(std::string_view name) const;  // throws FeatureError
  const std::vector<double>& channel(std::string_view name) const;
  // Throws FeatureError if channel lengths disagree with the timestamp axis.
  void check_alignment() const;
};

// Bits/second between two adjacent arrivals; requires curr.rx_time > prev.rx_time.
double throughput(const ccsim::PacketRecord& curr, const ccsim::PacketRecord& prev);

// Smallest rx_time - tx_time over the trace.
double min_raw_delay(const std::vector<ccsim::PacketRecord>& records);

double oneway_delay(const ccsim::PacketRecord& rec, double flow_min);

// Bytes outstanding at the sender when the segment left, as recovered at the
// receiver; throws TraceCorruption when negative.
std::int64_t inflight(const ccsim::PacketRecord& rec);

// One sample per distinct arrival time, starting at the second one. Records
// sharing an rx_time are merged with their sizes summed.
FeatureSeries extract_features(const ccsim::FlowTrace& trace, Scenario scenario);

// CSV `t,<channel>...` plus a JSON sidecar with label and scenario.
std::string series_to_csv(const FeatureSeries& series);
std::string series_sidecar_json(const FeatureSeries& series);
void write_series(const FeatureSeries& series, const std::filesystem::path& stem);

}  // namespace tcpid::features
