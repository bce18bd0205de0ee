#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tcpid/ccsim/algorithm.hpp"
#include "tcpid/ccsim/link.hpp"

namespace tcpid::ccsim {

// One data packet as seen by a passive observer at the receiver.
struct PacketRecord {
  double rx_time = 0.0;
  double tx_time = 0.0;  // sender timestamp (TSval)
  std::int64_t size = 0;
  std::int64_t seq_end = 0;   // highest sequence byte received so far
  std::int64_t ack_sent = 0;  // cumulative ack echoed back by this segment
  std::optional<double> rlc_buffer;
  std::optional<double> pdcp_delay;
};

struct FlowTrace {
  std::vector<PacketRecord> records;
  CcAlgorithm label = CcAlgorithm::NewReno;
  LinkConfig link;
  std::optional<RadioConfig> radio;
  std::uint64_t seed = 0;
  double duration = 0.0;

  bool has_radio_channels() const;
};

class TraceFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// CSV body: rx_time,tx_time,size,seq_end,ack_sent[,rlc_buffer,pdcp_delay]
std::string trace_to_csv(const FlowTrace& trace);
std::vector<PacketRecord> records_from_csv(const std::string& text);

// Sidecar JSON: label, scenario (link + radio), seed, duration.
std::string trace_sidecar_json(const FlowTrace& trace);

// Writes <stem>.csv and <stem>.json.
void write_trace(const FlowTrace& trace, const std::filesystem::path& stem);

// Reads <path> (a .csv); the sidecar is <path> with extension .json. When the
// sidecar is absent, `fallback_label` is used and the link is left default.
FlowTrace read_trace(const std::filesystem::path& csv_path,
                     std::optional<CcAlgorithm> fallback_label = std::nullopt);

}  // namespace tcpid::ccsim
