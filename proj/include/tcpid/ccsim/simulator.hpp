#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "tcpid/ccsim/algorithm.hpp"
#include "tcpid/ccsim/congestion.hpp"
#include "tcpid/ccsim/link.hpp"
#include "tcpid/ccsim/trace.hpp"

namespace tcpid::ccsim {

class SimulationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RecoveryEvent {
  double start = 0.0;
  double end = 0.0;
  double cwnd_before = 0.0;
  double cwnd_after = 0.0;
};

struct SimStats {
  std::int64_t transmitted = 0;  // data transmissions, including retransmissions
  std::int64_t retransmitted = 0;
  std::int64_t delivered = 0;
  std::int64_t dropped_bottleneck = 0;
  std::int64_t dropped_rlc = 0;
  std::int64_t in_network_at_end = 0;
  std::int64_t timeouts = 0;
  int max_queue = 0;
  int max_rlc_queue = 0;
  double slow_start_exit = -1.0;  // first time the sender left SlowStart/Startup
  std::vector<double> drop_times;
  std::vector<RecoveryEvent> recoveries;  // completed fast recoveries

  // Per received record, aligned with FlowTrace::records.
  std::vector<double> bottleneck_wait;
  // Sender's unacked byte count right after transmitting the segment.
  std::vector<std::int64_t> sender_inflight;
  std::vector<bool> is_retransmission;
};

struct SimResult {
  FlowTrace trace;
  SimStats stats;
};

// Runs one bulk-transfer flow. Equal inputs produce bit-identical results.
// Throws SimulationError when the event loop stalls.
SimResult run_simulation(CcAlgorithm algo, const LinkConfig& link,
                         double duration, std::uint64_t seed,
                         const std::optional<RadioConfig>& radio = std::nullopt);

FlowTrace simulate_flow(CcAlgorithm algo, const LinkConfig& link,
                        double duration, std::uint64_t seed,
                        const std::optional<RadioConfig>& radio = std::nullopt);

// Independent deterministic sub-stream of `seed`.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace tcpid::ccsim
