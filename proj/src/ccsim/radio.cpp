#include "tcpid/ccsim/radio.hpp"

#include <algorithm>

namespace tcpid::ccsim {

namespace {
double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}
}  // namespace

RadioLink::RadioLink(RadioParams params, std::uint64_t seed)
    : params_(params), rng_(seed) {}

void RadioLink::expire(double now) {
  while (!departures_.empty() && departures_.front() <= now) {
    departures_.pop_front();
  }
}

int RadioLink::occupancy(double now) {
  expire(now);
  return static_cast<int>(departures_.size());
}

RadioOutcome RadioLink::offer(double arrival) {
  int failures = 0;
  while (failures <= params_.max_retx && uniform01(rng_) < params_.err_prob) {
    ++failures;
  }
  return offer_with_failures(arrival, failures);
}

RadioOutcome RadioLink::offer_with_failures(double arrival, int failed_attempts) {
  RadioOutcome out;
  out.rlc_buffer = occupancy(arrival);
  if (out.rlc_buffer >= params_.rlc_cap) {
    out.dropped = true;
    out.departure = arrival;
    return out;
  }
  const int max_attempts = params_.max_retx + 1;
  out.dropped = failed_attempts >= max_attempts;
  out.attempts = out.dropped ? max_attempts : failed_attempts + 1;

  const double start = std::max(arrival, server_free_);
  out.departure = start + out.attempts * params_.service_time;
  out.pdcp_delay = out.departure - arrival;
  server_free_ = out.departure;
  departures_.push_back(out.departure);
  max_occupancy_ = std::max(max_occupancy_, static_cast<int>(departures_.size()));
  return out;
}

}  // namespace tcpid::ccsim
