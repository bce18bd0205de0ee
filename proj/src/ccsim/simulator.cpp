#include "tcpid/ccsim/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <queue>
#include <random>
#include <set>
#include <string>

#include "tcpid/ccsim/radio.hpp"

namespace tcpid::ccsim {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  // SplitMix64 finalizer over (seed, stream).
  std::uint64_t z = seed + (stream + 1) * 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

namespace {

constexpr std::int64_t kDupThresh = 3;
constexpr double kMinRto = 0.2;
constexpr double kMaxRto = 60.0;
constexpr double kInitialRto = 1.0;
constexpr std::int64_t kMaxEvents = 200'000'000;

enum class Fate { InFlight, Delivered, Lost };
enum class PacketState { Unsent, Outstanding, Delivered, Lost };

struct Transmission {
  std::int64_t packet = 0;
  double send_time = 0.0;
  std::int64_t delivered_at_send = 0;
  double delivered_time_at_send = 0.0;
  std::int64_t snd_una_bytes = 0;
  std::int64_t inflight_bytes = 0;
  double bottleneck_wait = 0.0;
  RadioOutcome radio;
  bool retransmission = false;
  Fate fate = Fate::InFlight;
};

enum class EventType { DataArrival, AckArrival, Rto, Pacing };

struct Event {
  double time;
  std::uint64_t order;
  EventType type;
  std::int64_t tx;
  std::int64_t value;  // cumulative ack (AckArrival) or timer generation (Rto)
};

struct EventLater {
  bool operator()(const Event& a, const Event& b) const {
    if (a.time != b.time) return a.time > b.time;
    return a.order > b.order;
  }
};

// Drop-tail FIFO served at a fixed bit rate. Service is computed on arrival.
class Bottleneck {
 public:
  Bottleneck(double rate_bps, int capacity) : rate_(rate_bps), capacity_(capacity) {}

  // Returns the departure time, or nullopt when the packet is dropped.
  std::optional<double> offer(double now, std::int64_t bytes, double* wait) {
    while (!departures_.empty() && departures_.front() <= now) departures_.pop_front();
    if (static_cast<int>(departures_.size()) >= capacity_) return std::nullopt;
    const double start = std::max(now, free_);
    *wait = start - now;
    free_ = start + static_cast<double>(bytes) * 8.0 / rate_;
    departures_.push_back(free_);
    max_occupancy_ = std::max(max_occupancy_, static_cast<int>(departures_.size()));
    return free_;
  }

  int max_occupancy() const { return max_occupancy_; }

 private:
  double rate_;
  int capacity_;
  std::deque<double> departures_;
  double free_ = 0.0;
  int max_occupancy_ = 0;
};

class FlowSimulation {
 public:
  FlowSimulation(CcAlgorithm algo, const LinkConfig& link, double duration,
                 std::uint64_t seed, const std::optional<RadioConfig>& radio)
      : algo_(algo),
        link_(link),
        duration_(duration),
        mtu_(link.mtu),
        bottleneck_(link.rate_bps, link.buffer) {
    link_.validate();
    if (!(duration > 0.0)) throw std::invalid_argument("duration: must be > 0");
    std::mt19937_64 sender_rng(derive_seed(seed, 1));
    state_ = initial_state(algo, 2 + static_cast<int>(sender_rng() % 6));
    if (link_.wireless) {
      RadioConfig rc = radio.value_or(RadioConfig{});
      rc.validate();
      radio_.emplace(RadioParams{link_.random_loss, rc.service_time, rc.rlc_cap, rc.max_retx},
                     derive_seed(seed, 2));
      result_.trace.radio = rc;
    }
    result_.trace.label = algo;
    result_.trace.link = link_;
    result_.trace.seed = seed;
    result_.trace.duration = duration;
  }

  SimResult run() {
    try_send(0.0);
    std::int64_t processed = 0;
    double now = 0.0;
    while (!events_.empty()) {
      const Event ev = events_.top();
      if (ev.time > duration_) break;
      events_.pop();
      now = ev.time;
      if (++processed > kMaxEvents) {
        throw SimulationError("event budget exhausted at t=" + std::to_string(now));
      }
      switch (ev.type) {
        case EventType::DataArrival: on_data_arrival(now, ev.tx); break;
        case EventType::AckArrival: on_ack_arrival(now, ev.tx, ev.value); break;
        case EventType::Rto: on_rto(now, ev.value); break;
        case EventType::Pacing:
          pacing_pending_ = false;
          try_send(now);
          break;
      }
    }
    if (events_.empty()) {
      throw SimulationError("event queue drained at t=" + std::to_string(now) +
                            " before the end of the flow");
    }
    while (!events_.empty()) {
      if (events_.top().type == EventType::DataArrival) ++stats().in_network_at_end;
      events_.pop();
    }
    stats().max_queue = bottleneck_.max_occupancy();
    if (radio_) stats().max_rlc_queue = radio_->max_occupancy();
    return std::move(result_);
  }

 private:
  SimStats& stats() { return result_.stats; }

  void schedule(double time, EventType type, std::int64_t tx = 0, std::int64_t value = 0) {
    events_.push(Event{time, next_order_++, type, tx, value});
  }

  void arm_rto(double now) {
    ++rto_gen_;
    schedule(now + rto_, EventType::Rto, 0, rto_gen_);
  }

  void try_send(double now) {
    for (;;) {
      if (pipe_ >= static_cast<std::int64_t>(state_.cwnd)) return;
      const double rate = pacing_rate(algo_, state_);
      if (rate > 0.0 && now < next_send_time_) {
        if (!pacing_pending_) {
          pacing_pending_ = true;
          schedule(next_send_time_, EventType::Pacing);
        }
        return;
      }
      std::int64_t packet = -1;
      bool retransmission = false;
      while (!retx_queue_.empty()) {
        const std::int64_t candidate = *retx_queue_.begin();
        retx_queue_.erase(retx_queue_.begin());
        if (packets_[static_cast<std::size_t>(candidate)] == PacketState::Lost) {
          packet = candidate;
          retransmission = true;
          break;
        }
      }
      if (packet < 0) {
        packet = next_new_++;
        packets_.push_back(PacketState::Unsent);
      }
      transmit(now, packet, retransmission);
      if (rate > 0.0) next_send_time_ = std::max(now, next_send_time_) + 1.0 / rate;
    }
  }

  void transmit(double now, std::int64_t packet, bool retransmission) {
    const bool had_outstanding = pipe_ > 0;
    Transmission tx;
    tx.packet = packet;
    tx.send_time = now;
    tx.delivered_at_send = delivered_packets_;
    tx.delivered_time_at_send = delivered_time_;
    tx.snd_una_bytes = snd_una_ * mtu_;
    tx.inflight_bytes = (next_new_ - snd_una_) * mtu_;
    tx.retransmission = retransmission;
    packets_[static_cast<std::size_t>(packet)] = PacketState::Outstanding;

    ++stats().transmitted;
    if (retransmission) ++stats().retransmitted;

    const auto id = static_cast<std::int64_t>(txs_.size());
    const auto departure = bottleneck_.offer(now, mtu_, &tx.bottleneck_wait);
    if (!departure) {
      ++stats().dropped_bottleneck;
      stats().drop_times.push_back(now);
    } else {
      double arrival = *departure + link_.prop_rtt / 2.0;
      bool delivered = true;
      if (radio_) {
        tx.radio = radio_->offer(arrival);
        if (tx.radio.dropped) {
          ++stats().dropped_rlc;
          stats().drop_times.push_back(arrival);
          delivered = false;
        } else {
          arrival = tx.radio.departure;
        }
      }
      if (delivered) schedule(arrival, EventType::DataArrival, id);
    }
    txs_.push_back(tx);
    inflight_txs_.push_back(id);
    ++pipe_;
    if (!had_outstanding) arm_rto(now);
  }

  void on_data_arrival(double now, std::int64_t id) {
    const Transmission& tx = txs_[static_cast<std::size_t>(id)];
    const auto pkt = static_cast<std::size_t>(tx.packet);
    if (received_.size() <= pkt) received_.resize(pkt + 1, false);
    received_[pkt] = true;
    while (rcv_nxt_ < static_cast<std::int64_t>(received_.size()) &&
           received_[static_cast<std::size_t>(rcv_nxt_)]) {
      ++rcv_nxt_;
    }
    highest_end_ = std::max(highest_end_, (tx.packet + 1) * mtu_);
    ++stats().delivered;

    PacketRecord rec;
    rec.rx_time = now;
    rec.tx_time = tx.send_time;
    rec.size = mtu_;
    rec.seq_end = highest_end_;
    rec.ack_sent = tx.snd_una_bytes;
    if (radio_) {
      rec.rlc_buffer = static_cast<double>(tx.radio.rlc_buffer);
      rec.pdcp_delay = tx.radio.pdcp_delay;
    }
    result_.trace.records.push_back(rec);
    stats().bottleneck_wait.push_back(tx.bottleneck_wait);
    stats().sender_inflight.push_back(tx.inflight_bytes);
    stats().is_retransmission.push_back(tx.retransmission);

    schedule(now + link_.prop_rtt / 2.0, EventType::AckArrival, id, rcv_nxt_);
  }

  void update_rto(double rtt) {
    if (srtt_ <= 0.0) {
      srtt_ = rtt;
      rttvar_ = rtt / 2.0;
    } else {
      rttvar_ = 0.75 * rttvar_ + 0.25 * std::abs(srtt_ - rtt);
      srtt_ = 0.875 * srtt_ + 0.125 * rtt;
    }
    rto_ = std::clamp(srtt_ + 4.0 * rttvar_, kMinRto, kMaxRto);
  }

  void mark_delivered(std::int64_t packet, double& acked) {
    auto& st = packets_[static_cast<std::size_t>(packet)];
    if (st == PacketState::Delivered) return;
    st = PacketState::Delivered;
    ++delivered_packets_;
    acked += 1.0;
  }

  void on_ack_arrival(double now, std::int64_t id, std::int64_t cum_ack) {
    Transmission& tx = txs_[static_cast<std::size_t>(id)];
    const double rtt = now - tx.send_time;
    update_rto(rtt);

    double acked = 0.0;
    mark_delivered(tx.packet, acked);
    for (std::int64_t p = snd_una_; p < cum_ack; ++p) mark_delivered(p, acked);
    const bool advanced = cum_ack > snd_una_;
    snd_una_ = std::max(snd_una_, cum_ack);
    if (tx.fate == Fate::InFlight) --pipe_;
    tx.fate = Fate::Delivered;
    if (acked > 0.0) delivered_time_ = now;

    double delivery_rate = 0.0;
    const double interval = now - tx.delivered_time_at_send;
    if (interval > 0.0) {
      delivery_rate = static_cast<double>(delivered_packets_ - tx.delivered_at_send) / interval;
    }
    bool round_start = false;
    if (tx.delivered_at_send >= next_round_delivered_) {
      round_start = true;
      next_round_delivered_ = delivered_packets_;
    }

    bool newly_lost = false;
    bool lost_retransmission = false;
    while (!inflight_txs_.empty()) {
      const std::int64_t front = inflight_txs_.front();
      Transmission& f = txs_[static_cast<std::size_t>(front)];
      if (f.fate != Fate::InFlight) {
        inflight_txs_.pop_front();
        continue;
      }
      if (id - front < kDupThresh) break;
      f.fate = Fate::Lost;
      --pipe_;
      auto& st = packets_[static_cast<std::size_t>(f.packet)];
      if (st != PacketState::Delivered) {
        st = PacketState::Lost;
        retx_queue_.insert(f.packet);
        newly_lost = true;
        lost_retransmission = lost_retransmission || f.retransmission;
      }
      inflight_txs_.pop_front();
    }

    if (lost_retransmission) {
      // Without SACK a lost retransmission is only repaired by the RTO.
      enter_timeout(now);
      newly_lost = false;
    }
    if (in_recovery_ && snd_una_ > recover_point_) {
      state_ = cc_on_recovery_exit(algo_, state_, now);
      if (recovery_is_fast_) {
        stats().recoveries.push_back(
            RecoveryEvent{recovery_start_, now, cwnd_before_loss_, state_.cwnd});
      }
      in_recovery_ = false;
    }
    if (newly_lost && !in_recovery_) {
      cwnd_before_loss_ = state_.cwnd;
      state_ = cc_on_loss(algo_, state_, now);
      in_recovery_ = true;
      recovery_is_fast_ = true;
      recovery_start_ = now;
      recover_point_ = next_new_ - 1;
    }

    if (acked > 0.0) {
      AckInfo info;
      info.rtt_sample = rtt;
      info.acked = acked;
      info.now = now;
      info.delivery_rate = delivery_rate;
      info.round_start = round_start;
      info.inflight = static_cast<double>(pipe_);
      state_ = cc_on_ack(algo_, state_, info);
    }
    note_slow_start_exit(now);

    if (advanced || acked > 0.0) {
      if (snd_una_ < next_new_) arm_rto(now);
    }
    try_send(now);
  }

  void on_rto(double now, std::int64_t gen) {
    if (gen != rto_gen_ || snd_una_ >= next_new_) return;
    enter_timeout(now);
    rto_ = std::min(rto_ * 2.0, kMaxRto);
    arm_rto(now);
    try_send(now);
  }

  void enter_timeout(double now) {
    ++stats().timeouts;
    for (std::int64_t id : inflight_txs_) {
      Transmission& f = txs_[static_cast<std::size_t>(id)];
      if (f.fate != Fate::InFlight) continue;
      f.fate = Fate::Lost;
      auto& st = packets_[static_cast<std::size_t>(f.packet)];
      if (st != PacketState::Delivered) {
        st = PacketState::Lost;
        retx_queue_.insert(f.packet);
      }
    }
    inflight_txs_.clear();
    pipe_ = 0;
    state_ = cc_on_timeout(algo_, state_, now);
    in_recovery_ = true;
    recovery_is_fast_ = false;
    recover_point_ = next_new_ - 1;
    note_slow_start_exit(now);
  }

  void note_slow_start_exit(double now) {
    if (stats().slow_start_exit < 0.0 && state_.phase != Phase::SlowStart &&
        state_.phase != Phase::Startup) {
      stats().slow_start_exit = now;
    }
  }

  CcAlgorithm algo_;
  LinkConfig link_;
  double duration_;
  std::int64_t mtu_;
  Bottleneck bottleneck_;
  std::optional<RadioLink> radio_;
  SenderState state_;
  SimResult result_;

  std::priority_queue<Event, std::vector<Event>, EventLater> events_;
  std::uint64_t next_order_ = 0;

  // Sender
  std::vector<PacketState> packets_;
  std::vector<Transmission> txs_;
  std::deque<std::int64_t> inflight_txs_;
  std::set<std::int64_t> retx_queue_;
  std::int64_t next_new_ = 0;
  std::int64_t snd_una_ = 0;
  std::int64_t pipe_ = 0;
  std::int64_t delivered_packets_ = 0;
  double delivered_time_ = 0.0;
  std::int64_t next_round_delivered_ = 0;
  bool in_recovery_ = false;
  bool recovery_is_fast_ = false;
  std::int64_t recover_point_ = -1;
  double recovery_start_ = 0.0;
  double cwnd_before_loss_ = 0.0;
  double srtt_ = 0.0;
  double rttvar_ = 0.0;
  double rto_ = kInitialRto;
  std::int64_t rto_gen_ = 0;
  double next_send_time_ = 0.0;
  bool pacing_pending_ = false;

  // Receiver
  std::vector<bool> received_;
  std::int64_t rcv_nxt_ = 0;
  std::int64_t highest_end_ = 0;
};

}  // namespace

SimResult run_simulation(CcAlgorithm algo, const LinkConfig& link, double duration,
                         std::uint64_t seed, const std::optional<RadioConfig>& radio) {
  return FlowSimulation(algo, link, duration, seed, radio).run();
}

FlowTrace simulate_flow(CcAlgorithm algo, const LinkConfig& link, double duration,
                        std::uint64_t seed, const std::optional<RadioConfig>& radio) {
  return run_simulation(algo, link, duration, seed, radio).trace;
}

}  // namespace tcpid::ccsim
