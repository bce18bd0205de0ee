#pragma once

#include <cstdint>
#include <deque>
#include <random>

namespace tcpid::ccsim {

struct RadioParams {
  double err_prob = 0.0;
  double service_time = 0.003;
  int rlc_cap = 300;
  int max_retx = 3;
};

struct RadioOutcome {
  bool dropped = false;
  int rlc_buffer = 0;       // occupancy seen on arrival, excluding this packet
  int attempts = 0;         // transmission attempts consumed (0 if rejected at the queue)
  double pdcp_delay = 0.0;  // queueing + all attempts; 0 for overflow drops
  double departure = 0.0;   // time the packet leaves the radio leg
};

// FIFO single-server model of the base station RLC buffer. Each attempt
// occupies the air interface for `service_time`; a corrupted attempt is
// retried up to `max_retx` times, after which the packet is discarded.
// Arrivals must be offered in non-decreasing time order.
class RadioLink {
 public:
  RadioLink(RadioParams params, std::uint64_t seed);

  RadioOutcome offer(double arrival);

  // Same as offer() but with the number of corrupted attempts fixed by the
  // caller instead of drawn from the RNG.
  RadioOutcome offer_with_failures(double arrival, int failed_attempts);

  int occupancy(double now);
  int max_occupancy() const { return max_occupancy_; }
  const RadioParams& params() const { return params_; }

 private:
  void expire(double now);

  RadioParams params_;
  std::mt19937_64 rng_;
  std::deque<double> departures_;  // accepted packets not yet departed
  double server_free_ = 0.0;
  int max_occupancy_ = 0;
};

}  // namespace tcpid::ccsim
