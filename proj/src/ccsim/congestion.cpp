#include "tcpid/ccsim/congestion.hpp"

#include <algorithm>
#include <cmath>

namespace tcpid::ccsim {

using namespace constants;

const char* to_string(Phase phase) {
  switch (phase) {
    case Phase::SlowStart: return "SlowStart";
    case Phase::CongestionAvoidance: return "CongestionAvoidance";
    case Phase::Recovery: return "Recovery";
    case Phase::Startup: return "Startup";
    case Phase::Drain: return "Drain";
    case Phase::ProbeBw: return "ProbeBW";
    case Phase::ProbeRtt: return "ProbeRTT";
  }
  return "?";
}

double aimd_step(double w, bool ack, double alpha, double beta) {
  const double next = ack ? w + alpha : beta * w;
  return std::max(1.0, next);
}

double cubic_window(double t, double w_max, double c, double beta) {
  const double k = std::cbrt(w_max * (1.0 - beta) / c);
  const double d = t - k;
  return std::max(1.0, c * d * d * d + w_max);
}

double backoff_factor(CcAlgorithm algo) {
  switch (algo) {
    case CcAlgorithm::NewReno:
    case CcAlgorithm::Vegas:
    case CcAlgorithm::Hybla:
      return kRenoBeta;
    case CcAlgorithm::Cubic:
      return kCubicBeta;
    case CcAlgorithm::Westwood:
    case CcAlgorithm::Bbr:
      return 0.0;
  }
  return 0.0;
}

bool is_loss_based(CcAlgorithm algo) { return algo != CcAlgorithm::Bbr; }

SenderState initial_state(CcAlgorithm algo, int cycle_offset) {
  SenderState s;
  if (algo == CcAlgorithm::Bbr) {
    s.phase = Phase::Startup;
    s.pacing_gain = kBbrHighGain;
    s.cwnd_gain = kBbrHighGain;
    s.cycle_index =
        ((cycle_offset % static_cast<int>(kBbrGainCycle.size())) +
         static_cast<int>(kBbrGainCycle.size())) %
        static_cast<int>(kBbrGainCycle.size());
    s.bw_sample_round.fill(-1);
  }
  return s;
}

namespace {

void update_rtt(SenderState& s, double sample) {
  s.min_rtt = std::min(s.min_rtt, sample);
  s.srtt = s.srtt <= 0.0 ? sample : 0.875 * s.srtt + 0.125 * sample;
}

void leave_slow_start_if_needed(SenderState& s) {
  if (s.phase == Phase::SlowStart && s.cwnd >= s.ssthresh) {
    s.phase = Phase::CongestionAvoidance;
  }
}

// Reno slow start / congestion avoidance with per-RTT increment `ca_gain`.
void reno_grow(SenderState& s, double acked, double ss_gain, double ca_gain) {
  if (s.phase == Phase::SlowStart) {
    s.cwnd += ss_gain * acked;
    leave_slow_start_if_needed(s);
  } else if (s.phase == Phase::CongestionAvoidance) {
    s.cwnd += ca_gain * acked / s.cwnd;
  }
}

void cubic_grow(SenderState& s, const AckInfo& ack) {
  if (s.phase == Phase::SlowStart) {
    s.cwnd += ack.acked;
    leave_slow_start_if_needed(s);
    return;
  }
  if (s.phase != Phase::CongestionAvoidance) return;
  if (s.epoch_start < 0.0) {
    s.epoch_start = ack.now;
    if (s.cwnd < s.w_max) {
      s.epoch_k = std::cbrt((s.w_max - s.cwnd) / kCubicC);
      s.epoch_origin = s.w_max;
    } else {
      s.epoch_k = 0.0;
      s.epoch_origin = s.cwnd;
    }
  }
  const double d = (ack.now - s.epoch_start) - s.epoch_k;
  const double target = s.epoch_origin + kCubicC * d * d * d;
  if (target > s.cwnd) {
    // At most half a packet per acked packet, as in the Linux implementation.
    s.cwnd += std::min(0.5, (target - s.cwnd) / s.cwnd) * ack.acked;
  } else {
    s.cwnd += 0.01 * ack.acked / s.cwnd;
  }
}

void vegas_grow(SenderState& s, const AckInfo& ack) {
  s.base_rtt = std::min(s.base_rtt, ack.rtt_sample);
  const double diff = s.cwnd * (1.0 - s.base_rtt / ack.rtt_sample);
  if (s.phase == Phase::SlowStart) {
    if (diff > kVegasGamma) {
      s.ssthresh = std::max(kMinSsthresh, s.cwnd);
      s.phase = Phase::CongestionAvoidance;
      return;
    }
    s.cwnd += ack.acked;
    leave_slow_start_if_needed(s);
  } else if (s.phase == Phase::CongestionAvoidance) {
    if (diff < kVegasAlpha) {
      s.cwnd += ack.acked / s.cwnd;
    } else if (diff > kVegasBeta) {
      s.cwnd = std::max(kMinSsthresh, s.cwnd - ack.acked / s.cwnd);
    }
  }
}

void hybla_grow(SenderState& s, const AckInfo& ack) {
  // rho follows the smallest smoothed RTT seen, as Linux recomputes it only
  // when srtt drops.
  if (s.srtt < s.min_srtt) {
    s.min_srtt = s.srtt;
    s.rho = std::max(1.0, s.min_srtt / kHyblaRtt0);
  }
  reno_grow(s, ack.acked, std::exp2(s.rho) - 1.0, s.rho * s.rho);
}

void westwood_sample(SenderState& s, const AckInfo& ack) {
  s.ww_acked += ack.acked;
  if (s.ww_last_sample < 0.0) {
    s.ww_last_sample = ack.now;
    s.ww_acked = 0.0;
    return;
  }
  const double elapsed = ack.now - s.ww_last_sample;
  if (elapsed < std::max(s.srtt, kWestwoodMinSampleInterval)) return;
  const double sample = s.ww_acked / elapsed;
  if (s.ww_bw_ns <= 0.0) {
    s.ww_bw_ns = sample;
    s.bw_estimate = sample;
  } else {
    s.ww_bw_ns = 0.875 * s.ww_bw_ns + 0.125 * sample;
    s.bw_estimate = 0.875 * s.bw_estimate + 0.125 * s.ww_bw_ns;
  }
  s.ww_acked = 0.0;
  s.ww_last_sample = ack.now;
}

double bbr_max_bw(const SenderState& s) {
  double best = 0.0;
  for (std::size_t i = 0; i < s.bw_samples.size(); ++i) {
    const auto round = s.bw_sample_round[i];
    if (round >= 0 && s.round_count - round < kBbrBwWindowRounds) {
      best = std::max(best, s.bw_samples[i]);
    }
  }
  return best;
}

void bbr_enter_probe_bw(SenderState& s, double now) {
  s.phase = Phase::ProbeBw;
  s.cycle_stamp = now;
  s.pacing_gain = kBbrGainCycle[static_cast<std::size_t>(s.cycle_index)];
  s.cwnd_gain = kBbrCwndGain;
}

void bbr_on_ack(SenderState& s, const AckInfo& ack) {
  if (ack.round_start) ++s.round_count;

  if (ack.delivery_rate > 0.0) {
    const auto slot = static_cast<std::size_t>(s.round_count % kBbrBwWindowRounds);
    if (s.bw_sample_round[slot] != s.round_count) {
      s.bw_sample_round[slot] = s.round_count;
      s.bw_samples[slot] = 0.0;
    }
    s.bw_samples[slot] = std::max(s.bw_samples[slot], ack.delivery_rate);
  }
  s.bw_estimate = bbr_max_bw(s);

  const bool rtprop_expired = ack.now > s.rtprop_stamp + kBbrMinRttWindow;
  if (ack.rtt_sample <= s.rtprop || rtprop_expired) {
    s.rtprop = ack.rtt_sample;
    s.rtprop_stamp = ack.now;
  }

  if (!s.full_bw_reached && ack.round_start && s.bw_estimate > 0.0) {
    if (s.bw_estimate >= s.full_bw * kBbrFullBwThresh) {
      s.full_bw = s.bw_estimate;
      s.full_bw_count = 0;
    } else if (++s.full_bw_count >= kBbrFullBwRounds) {
      s.full_bw_reached = true;
    }
  }

  const double bdp = s.bw_estimate * s.rtprop;

  if (s.phase == Phase::Startup && s.full_bw_reached) {
    s.phase = Phase::Drain;
    s.pacing_gain = 1.0 / kBbrHighGain;
    s.cwnd_gain = kBbrHighGain;
  }
  if (s.phase == Phase::Drain && ack.inflight <= bdp) {
    bbr_enter_probe_bw(s, ack.now);
  }
  if (s.phase == Phase::ProbeBw && ack.now - s.cycle_stamp > s.rtprop) {
    s.cycle_index = (s.cycle_index + 1) % static_cast<int>(kBbrGainCycle.size());
    s.cycle_stamp = ack.now;
    s.pacing_gain = kBbrGainCycle[static_cast<std::size_t>(s.cycle_index)];
  }

  if (rtprop_expired && s.phase != Phase::ProbeRtt) {
    s.phase_before_probe_rtt = s.full_bw_reached ? Phase::ProbeBw : Phase::Startup;
    s.phase = Phase::ProbeRtt;
    s.pacing_gain = 1.0;
    s.cwnd_gain = 1.0;
    s.probe_rtt_done = -1.0;
    s.prior_cwnd = s.cwnd;
  }
  if (s.phase == Phase::ProbeRtt) {
    if (s.probe_rtt_done < 0.0 && ack.inflight <= kBbrMinCwnd) {
      s.probe_rtt_done = ack.now + std::max(kBbrProbeRttDuration, s.rtprop);
    } else if (s.probe_rtt_done >= 0.0 && ack.now >= s.probe_rtt_done) {
      s.rtprop_stamp = ack.now;
      s.cwnd = std::max(s.cwnd, s.prior_cwnd);
      if (s.phase_before_probe_rtt == Phase::ProbeBw) {
        bbr_enter_probe_bw(s, ack.now);
      } else {
        s.phase = Phase::Startup;
        s.pacing_gain = kBbrHighGain;
        s.cwnd_gain = kBbrHighGain;
      }
    }
  }

  if (s.bw_estimate > 0.0 && std::isfinite(s.rtprop)) {
    const double target = s.cwnd_gain * bdp;
    if (s.full_bw_reached) {
      s.cwnd = std::min(s.cwnd + ack.acked, target);
    } else if (s.cwnd < target) {
      s.cwnd += ack.acked;
    }
  } else {
    s.cwnd += ack.acked;
  }
  s.cwnd = std::max(s.cwnd, kBbrMinCwnd);
  if (s.phase == Phase::ProbeRtt) s.cwnd = std::min(s.cwnd, kBbrMinCwnd);
}

double loss_ssthresh(CcAlgorithm algo, const SenderState& s) {
  if (algo == CcAlgorithm::Westwood) {
    if (s.bw_estimate > 0.0 && std::isfinite(s.min_rtt)) {
      return std::max(kMinSsthresh, s.bw_estimate * s.min_rtt);
    }
    return std::max(kMinSsthresh, kRenoBeta * s.cwnd);
  }
  return std::max(kMinSsthresh, backoff_factor(algo) * s.cwnd);
}

}  // namespace

SenderState cc_on_ack(CcAlgorithm algo, SenderState s, const AckInfo& ack) {
  update_rtt(s, ack.rtt_sample);
  switch (algo) {
    case CcAlgorithm::NewReno:
      reno_grow(s, ack.acked, 1.0, 1.0);
      break;
    case CcAlgorithm::Cubic:
      cubic_grow(s, ack);
      break;
    case CcAlgorithm::Vegas:
      vegas_grow(s, ack);
      break;
    case CcAlgorithm::Hybla:
      hybla_grow(s, ack);
      break;
    case CcAlgorithm::Westwood:
      westwood_sample(s, ack);
      reno_grow(s, ack.acked, 1.0, 1.0);
      break;
    case CcAlgorithm::Bbr:
      bbr_on_ack(s, ack);
      break;
  }
  s.cwnd = std::max(1.0, s.cwnd);
  return s;
}

SenderState cc_on_loss(CcAlgorithm algo, SenderState s, double /*now*/) {
  if (algo == CcAlgorithm::Bbr) return s;
  if (algo == CcAlgorithm::Cubic) {
    s.w_max = s.cwnd;
    s.epoch_start = -1.0;
  }
  s.ssthresh = loss_ssthresh(algo, s);
  s.cwnd = std::max(1.0, s.ssthresh);
  s.phase = Phase::Recovery;
  return s;
}

SenderState cc_on_timeout(CcAlgorithm algo, SenderState s, double /*now*/) {
  if (algo == CcAlgorithm::Bbr) return s;
  if (algo == CcAlgorithm::Cubic) {
    s.w_max = s.cwnd;
    s.epoch_start = -1.0;
  }
  s.ssthresh = loss_ssthresh(algo, s);
  s.cwnd = 1.0;
  s.phase = Phase::SlowStart;
  return s;
}

SenderState cc_on_recovery_exit(CcAlgorithm algo, SenderState s, double /*now*/) {
  if (algo == CcAlgorithm::Bbr || s.phase != Phase::Recovery) return s;
  s.cwnd = std::max(1.0, s.ssthresh);
  s.phase = Phase::CongestionAvoidance;
  return s;
}

double pacing_rate(CcAlgorithm algo, const SenderState& s) {
  if (algo != CcAlgorithm::Bbr) return 0.0;
  if (s.bw_estimate > 0.0) return s.pacing_gain * s.bw_estimate;
  const double rtt = s.srtt > 0.0 ? s.srtt : 0.001;
  return kBbrHighGain * s.cwnd / rtt;
}

}  // namespace tcpid::ccsim
