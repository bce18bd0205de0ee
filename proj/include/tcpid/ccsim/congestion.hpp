#pragma once

#include <array>
#include <cstdint>
#include <limits>

#include "tcpid/ccsim/algorithm.hpp"

namespace tcpid::ccsim {

enum class Phase {
  SlowStart,
  CongestionAvoidance,
  Recovery,
  // BBR only.
  Startup,
  Drain,
  ProbeBw,
  ProbeRtt,
};

const char* to_string(Phase phase);

namespace constants {
inline constexpr double kInitialCwnd = 10.0;
inline constexpr double kMinSsthresh = 2.0;
inline constexpr double kRenoBeta = 0.5;
inline constexpr double kCubicBeta = 0.7;
inline constexpr double kCubicC = 0.4;  // packets / s^3
inline constexpr double kVegasAlpha = 2.0;
inline constexpr double kVegasBeta = 4.0;
inline constexpr double kVegasGamma = 1.0;
inline constexpr double kHyblaRtt0 = 0.025;
inline constexpr double kWestwoodMinSampleInterval = 0.05;
inline constexpr double kBbrHighGain = 2.885;  // 2 / ln 2
inline constexpr double kBbrCwndGain = 2.0;
inline constexpr double kBbrMinCwnd = 4.0;
inline constexpr double kBbrFullBwThresh = 1.25;
inline constexpr int kBbrFullBwRounds = 3;
inline constexpr int kBbrBwWindowRounds = 10;
inline constexpr double kBbrMinRttWindow = 10.0;
inline constexpr double kBbrProbeRttDuration = 0.2;
inline constexpr std::array<double, 8> kBbrGainCycle = {1.25, 0.75, 1.0, 1.0,
                                                        1.0,  1.0,  1.0, 1.0};
}  // namespace constants

// Sender-side congestion control state shared by every algorithm. Fields that
// an algorithm does not use keep their defaults.
struct SenderState {
  double cwnd = constants::kInitialCwnd;  // packets
  double ssthresh = std::numeric_limits<double>::infinity();
  Phase phase = Phase::SlowStart;

  double min_rtt = std::numeric_limits<double>::infinity();   // all-time minimum
  double base_rtt = std::numeric_limits<double>::infinity();  // Vegas
  double srtt = 0.0;

  // Cubic
  double w_max = 0.0;
  double epoch_start = -1.0;  // < 0 means "start an epoch on the next ack"
  double epoch_k = 0.0;
  double epoch_origin = 0.0;

  // Westwood and BBR, packets/second.
  double bw_estimate = 0.0;

  // Westwood+ sampling
  double ww_acked = 0.0;
  double ww_last_sample = -1.0;
  double ww_bw_ns = 0.0;

  // Hybla
  double rho = 1.0;
  double min_srtt = std::numeric_limits<double>::infinity();

  // BBR
  double pacing_gain = 1.0;
  double cwnd_gain = 1.0;
  double rtprop = std::numeric_limits<double>::infinity();  // windowed min RTT
  double rtprop_stamp = 0.0;
  std::int64_t round_count = 0;
  std::array<double, constants::kBbrBwWindowRounds> bw_samples{};
  std::array<std::int64_t, constants::kBbrBwWindowRounds> bw_sample_round{};
  double full_bw = 0.0;
  int full_bw_count = 0;
  bool full_bw_reached = false;
  int cycle_index = 0;
  double cycle_stamp = 0.0;
  double probe_rtt_done = -1.0;
  Phase phase_before_probe_rtt = Phase::ProbeBw;
  double prior_cwnd = 0.0;
};

struct AckInfo {
  double rtt_sample = 0.0;  // seconds, > 0
  double acked = 1.0;       // packets newly delivered, >= 1
  double now = 0.0;
  // The following are populated by the simulator; zero means "not available".
  double delivery_rate = 0.0;  // packets/second
  bool round_start = false;
  double inflight = 0.0;  // packets
};

// W(t) for one ack (ack=true) or one loss (ack=false), clamped to >= 1.
double aimd_step(double w, bool ack, double alpha, double beta);

// Cubic growth curve W(t) = C (t - K)^3 + w_max with K = cbrt(w_max (1 - beta) / C).
double cubic_window(double t, double w_max, double c = constants::kCubicC,
                    double beta = constants::kCubicBeta);

// Multiplicative decrease factor applied at a loss event (0 for algorithms
// that do not use a fixed factor).
double backoff_factor(CcAlgorithm algo);

bool is_loss_based(CcAlgorithm algo);

// `cycle_offset` seeds the BBR ProbeBW phase; ignored by other algorithms.
SenderState initial_state(CcAlgorithm algo, int cycle_offset = 0);

SenderState cc_on_ack(CcAlgorithm algo, SenderState state, const AckInfo& ack);

// Fast-retransmit loss signal (at most once per window).
SenderState cc_on_loss(CcAlgorithm algo, SenderState state, double now);

// Retransmission timeout.
SenderState cc_on_timeout(CcAlgorithm algo, SenderState state, double now);

// Cumulative ack passed the recovery point.
SenderState cc_on_recovery_exit(CcAlgorithm algo, SenderState state, double now);

// Packets/second the sender may pace at; 0 means unpaced (ack clocked).
double pacing_rate(CcAlgorithm algo, const SenderState& state);

}  // namespace tcpid::ccsim
