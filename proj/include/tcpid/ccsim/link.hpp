#pragma once

#include <stdexcept>
#include <string>

namespace tcpid::ccsim {

// Bottleneck link parameters for one simulated flow.
struct LinkConfig {
  double rate_bps = 10e6;
  double prop_rtt = 0.05;  // two-way propagation delay, seconds
  int buffer = 100;        // drop-tail capacity, packets
  int mtu = 1500;
  // Per-attempt corruption probability on the radio leg; must be 0 for wired links.
  double random_loss = 0.0;
  bool wireless = false;

  // Throws std::invalid_argument naming the offending field.
  void validate() const;

  double bdp_packets() const { return rate_bps * prop_rtt / (8.0 * mtu); }
};

// Radio leg (RLC queue with bounded ARQ) used when LinkConfig::wireless is set.
struct RadioConfig {
  int rlc_cap = 300;             // packets
  double service_time = 0.003;   // per transmission attempt, seconds
  int max_retx = 3;

  void validate() const;
};

}  // namespace tcpid::ccsim
