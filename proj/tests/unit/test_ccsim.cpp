#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>
#include <set>

#include "support/sim_checks.hpp"
#include "tcpid/ccsim/congestion.hpp"
#include "tcpid/ccsim/radio.hpp"
#include "tcpid/ccsim/simulator.hpp"
#include "tcpid/ccsim/trace.hpp"

using namespace tcpid::ccsim;

namespace {

SenderState in_avoidance(CcAlgorithm algo, double cwnd) {
  SenderState s = initial_state(algo);
  s.phase = Phase::CongestionAvoidance;
  s.cwnd = cwnd;
  s.ssthresh = cwnd;
  return s;
}

AckInfo ack(double rtt, double acked, double now = 1.0) {
  AckInfo a;
  a.rtt_sample = rtt;
  a.acked = acked;
  a.now = now;
  return a;
}

LinkConfig wired(double mbps, double rtt, int buffer) {
  LinkConfig l;
  l.rate_bps = mbps * 1e6;
  l.prop_rtt = rtt;
  l.buffer = buffer;
  return l;
}

}  // namespace

TEST_CASE("algorithm ids are the six labels 0..5") {
  std::set<int> ids;
  for (auto a : kAllAlgorithms) {
    ids.insert(class_id(a));
    CHECK(algorithm_from_class_id(class_id(a)) == a);
    CHECK(parse_algorithm(to_string(a)) == a);
  }
  CHECK(ids == std::set<int>{0, 1, 2, 3, 4, 5});
  CHECK(parse_algorithm("cubic") == CcAlgorithm::Cubic);
  CHECK(parse_algorithm("BBR") == CcAlgorithm::Bbr);
  CHECK_FALSE(parse_algorithm("reno2").has_value());
  CHECK_FALSE(algorithm_from_class_id(6).has_value());
}

TEST_CASE("aimd_step examples") {
  CHECK(aimd_step(100, true, 1, 0.5) == doctest::Approx(101));
  CHECK(aimd_step(100, false, 1, 0.5) == doctest::Approx(50));
  CHECK(aimd_step(100, false, 1, 0.7) == doctest::Approx(70));
  CHECK(aimd_step(1, false, 1, 0.5) == doctest::Approx(1));  // clamped
}

TEST_CASE("cubic_window examples") {
  const double k = std::cbrt(100 * (1 - 0.7) / 0.4);
  CHECK(cubic_window(k, 100) == doctest::Approx(100).epsilon(1e-12));
  CHECK(cubic_window(0, 100, 0.4, 0.7) == doctest::Approx(70).epsilon(1e-12));
  CHECK(cubic_window(k + 1, 100, 0.4) == doctest::Approx(100.4).epsilon(1e-12));
  CHECK(cubic_window(0, 1, 0.4, 0.01) >= 1.0);
}

TEST_CASE("cc_on_ack growth rules") {
  SUBCASE("NewReno gains one packet per window") {
    auto s = cc_on_ack(CcAlgorithm::NewReno, in_avoidance(CcAlgorithm::NewReno, 10), ack(0.05, 10));
    CHECK(s.cwnd == doctest::Approx(11));
  }
  SUBCASE("Vegas with diff 0 grows by 1/cwnd per ack") {
    auto s = in_avoidance(CcAlgorithm::Vegas, 20);
    s.base_rtt = 0.05;
    s = cc_on_ack(CcAlgorithm::Vegas, s, ack(0.05, 1));
    CHECK(s.cwnd == doctest::Approx(20 + 1.0 / 20));
  }
  SUBCASE("Vegas backs off when more than beta packets queue") {
    auto s = in_avoidance(CcAlgorithm::Vegas, 20);
    s.base_rtt = 0.05;
    s = cc_on_ack(CcAlgorithm::Vegas, s, ack(0.1, 1));  // diff = 10 > 4
    CHECK(s.cwnd == doctest::Approx(20 - 1.0 / 20));
  }
  SUBCASE("Hybla with rho=2 gains rho^2 per window") {
    auto s = cc_on_ack(CcAlgorithm::Hybla, in_avoidance(CcAlgorithm::Hybla, 10), ack(0.05, 10));
    CHECK(s.rho == doctest::Approx(2));
    CHECK(s.cwnd == doctest::Approx(14));
  }
  SUBCASE("slow start doubles per window") {
    auto s = cc_on_ack(CcAlgorithm::NewReno, initial_state(CcAlgorithm::NewReno), ack(0.05, 10));
    CHECK(s.cwnd == doctest::Approx(20));
    CHECK(s.phase == Phase::SlowStart);
  }
  SUBCASE("min_rtt tracks the smallest sample") {
    SenderState s = initial_state(CcAlgorithm::Cubic);
    for (double r : {0.08, 0.05, 0.09}) s = cc_on_ack(CcAlgorithm::Cubic, s, ack(r, 1));
    CHECK(s.min_rtt == doctest::Approx(0.05));
  }
}

TEST_CASE("cc_on_loss back-off") {
  auto reno = cc_on_loss(CcAlgorithm::NewReno, in_avoidance(CcAlgorithm::NewReno, 64), 1.0);
  CHECK(reno.cwnd == doctest::Approx(32));
  CHECK(reno.ssthresh == doctest::Approx(32));
  CHECK(reno.phase == Phase::Recovery);

  auto cubic = cc_on_loss(CcAlgorithm::Cubic, in_avoidance(CcAlgorithm::Cubic, 100), 1.0);
  CHECK(cubic.cwnd == doctest::Approx(70));
  CHECK(cubic.w_max == doctest::Approx(100));
  CHECK(cubic.epoch_start < 0.0);

  for (auto algo : {CcAlgorithm::Vegas, CcAlgorithm::Hybla}) {
    CHECK(cc_on_loss(algo, in_avoidance(algo, 40), 1.0).cwnd == doctest::Approx(20));
  }

  auto ww = in_avoidance(CcAlgorithm::Westwood, 80);
  ww.bw_estimate = 500;  // packets/s
  ww.min_rtt = 0.04;
  ww = cc_on_loss(CcAlgorithm::Westwood, ww, 1.0);
  CHECK(ww.ssthresh == doctest::Approx(20));
  CHECK(ww.cwnd == doctest::Approx(20));

  SenderState bbr = initial_state(CcAlgorithm::Bbr);
  bbr.cwnd = 37;
  bbr.phase = Phase::ProbeBw;
  bbr.pacing_gain = 1.25;
  const auto after = cc_on_loss(CcAlgorithm::Bbr, bbr, 1.0);
  CHECK(after.cwnd == 37);
  CHECK(after.phase == Phase::ProbeBw);
  CHECK(after.pacing_gain == 1.25);
}

TEST_CASE("recovery exit deflates to ssthresh and timeouts restart slow start") {
  auto s = cc_on_loss(CcAlgorithm::NewReno, in_avoidance(CcAlgorithm::NewReno, 50), 1.0);
  s = cc_on_recovery_exit(CcAlgorithm::NewReno, s, 2.0);
  CHECK(s.cwnd == doctest::Approx(25));
  CHECK(s.phase == Phase::CongestionAvoidance);

  auto t = cc_on_timeout(CcAlgorithm::Cubic, in_avoidance(CcAlgorithm::Cubic, 50), 1.0);
  CHECK(t.cwnd == 1.0);
  CHECK(t.phase == Phase::SlowStart);
  CHECK(t.ssthresh == doctest::Approx(35));
}

TEST_CASE("loss-based algorithms never enter BBR phases") {
  const std::set<Phase> bbr_phases{Phase::Startup, Phase::Drain, Phase::ProbeBw, Phase::ProbeRtt};
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> rtt(0.02, 0.2);
  for (auto algo : kAllAlgorithms) {
    if (algo == CcAlgorithm::Bbr) continue;
    SenderState s = initial_state(algo);
    double now = 0.0;
    for (int i = 0; i < 2000; ++i) {
      now += 0.001;
      if (i % 300 == 299) {
        s = cc_on_loss(algo, s, now);
      } else if (i % 300 == 5) {
        s = cc_on_recovery_exit(algo, s, now);
      } else {
        s = cc_on_ack(algo, s, ack(rtt(rng), 1, now));
      }
      CHECK(s.cwnd >= 1.0);
      CHECK(bbr_phases.count(s.phase) == 0);
    }
  }
}

TEST_CASE("radio stage examples") {
  RadioParams p;
  p.err_prob = 0.0;
  p.rlc_cap = 3;
  RadioLink idle(p, 1);
  auto first = idle.offer(1.0);
  CHECK(first.pdcp_delay == doctest::Approx(0.003));
  CHECK(first.rlc_buffer == 0);

  RadioLink retry(p, 1);
  auto once = retry.offer_with_failures(1.0, 1);
  CHECK(once.attempts == 2);
  CHECK(once.pdcp_delay == doctest::Approx(2 * 0.003));
  auto dropped = retry.offer_with_failures(10.0, 4);
  CHECK(dropped.dropped);

  RadioLink busy(p, 1);  // three arrivals at once fill a 3-packet buffer
  for (int i = 0; i < 3; ++i) CHECK_FALSE(busy.offer(0.0).dropped);
  auto overflow = busy.offer(0.0);
  CHECK(overflow.dropped);
  CHECK(overflow.rlc_buffer == 3);
  CHECK(busy.max_occupancy() == 3);
}

TEST_CASE("link validation names the field") {
  LinkConfig l = wired(10, 0.05, 50);
  CHECK_NOTHROW(l.validate());
  auto expect = [](LinkConfig bad, const std::string& field) {
    try {
      bad.validate();
      FAIL("accepted an invalid link");
    } catch (const std::invalid_argument& e) {
      CHECK(std::string(e.what()).rfind(field, 0) == 0);
    }
  };
  auto z = l; z.rate_bps = 0; expect(z, "rate_bps");
  auto r = l; r.prop_rtt = -1; expect(r, "prop_rtt");
  auto b = l; b.buffer = 0; expect(b, "buffer");
  auto w = l; w.random_loss = 0.01; expect(w, "random_loss");
  auto q = l; q.wireless = true; q.random_loss = 1.0; expect(q, "random_loss");
}

TEST_CASE("simulate_flow is deterministic and seed dependent") {
  LinkConfig l = wired(8, 0.06, 40);
  auto a = simulate_flow(CcAlgorithm::Cubic, l, 10, 77);
  auto b = simulate_flow(CcAlgorithm::Cubic, l, 10, 77);
  CHECK(trace_to_csv(a) == trace_to_csv(b));
  CHECK(a.label == CcAlgorithm::Cubic);

  LinkConfig wl = l;
  wl.wireless = true;
  wl.random_loss = 0.05;
  RadioConfig rc;
  rc.rlc_cap = 200;
  auto c = simulate_flow(CcAlgorithm::Cubic, wl, 10, 77, rc);
  auto d = simulate_flow(CcAlgorithm::Cubic, wl, 10, 78, rc);
  CHECK(trace_to_csv(c) != trace_to_csv(d));
  CHECK(derive_seed(1, 2) != derive_seed(1, 3));
  CHECK(derive_seed(1, 2) == derive_seed(1, 2));
}

TEST_CASE("simulator invariants on a small sweep") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  tcpid::testing::InvariantTally tally;
  for (int i = 0; i < 24; ++i) {
    tcpid::testing::SimCase c;
    c.algo = kAllAlgorithms[static_cast<std::size_t>(i) % kAllAlgorithms.size()];
    c.link = wired(2 + 18 * u(rng), 0.02 + 0.15 * u(rng), 1);
    c.link.buffer = std::max(2, static_cast<int>(std::lround((0.5 + 3 * u(rng)) * c.link.bdp_packets())));
    if (i % 3 == 0) {
      c.link.wireless = true;
      c.link.random_loss = 0.03 * u(rng);
      c.radio = RadioConfig{};
      c.radio->rlc_cap = 20 + static_cast<int>(300 * u(rng));
    }
    c.duration = 15;
    c.seed = rng();
    auto r = run_simulation(c.algo, c.link, c.duration, c.seed, c.radio);
    tcpid::testing::check_invariants(c, r, tally);
  }
  for (const auto& f : tally.failures) MESSAGE(f);
  CHECK(tally.ok());
  CHECK(tally.recovery_checked > 0);
}

TEST_CASE("NewReno on a 1 BDP buffer shows a sawtooth within the buffer") {
  LinkConfig l = wired(10, 0.06, 50);
  auto r = run_simulation(CcAlgorithm::NewReno, l, 30, 5);
  CHECK(r.stats.max_queue <= l.buffer);
  CHECK(r.stats.recoveries.size() >= 3);
  CHECK(r.stats.dropped_bottleneck > 0);
}

TEST_CASE("Vegas stays lossless on a clean link with a deep buffer") {
  LinkConfig l = wired(10, 0.05, 300);  // 300 >> BDP (~42 packets)
  auto r = run_simulation(CcAlgorithm::Vegas, l, 60, 9);
  CHECK(r.stats.slow_start_exit > 0.0);
  long late = 0;
  for (double d : r.stats.drop_times) late += d > r.stats.slow_start_exit ? 1 : 0;
  CHECK(late == 0);
  CHECK(r.stats.retransmitted == 0);
}

TEST_CASE("delivered bytes never exceed link capacity") {
  LinkConfig l = wired(10, 0.05, 60);
  for (auto algo : kAllAlgorithms) {
    auto t = simulate_flow(algo, l, 20, 3);
    double bytes = 0;
    for (const auto& rec : t.records) bytes += static_cast<double>(rec.size);
    CHECK(bytes <= 10e6 / 8 * 20);
  }
}

TEST_CASE("trace CSV and sidecar round trip") {
  LinkConfig l = wired(6, 0.04, 30);
  l.wireless = true;
  l.random_loss = 0.01;
  auto t = simulate_flow(CcAlgorithm::Westwood, l, 5, 4, RadioConfig{});
  const auto dir = std::filesystem::temp_directory_path() / "tcpid_trace_rt";
  std::filesystem::create_directories(dir);
  write_trace(t, dir / "flow");
  auto back = read_trace(dir / "flow.csv");
  CHECK(back.label == CcAlgorithm::Westwood);
  CHECK(back.records.size() == t.records.size());
  CHECK(trace_to_csv(back) == trace_to_csv(t));
  CHECK(back.has_radio_channels());
  std::filesystem::remove_all(dir);

  CHECK_THROWS_AS(records_from_csv("rx_time,tx_time\n1,2\n"), TraceFormatError);
  CHECK_THROWS_AS(records_from_csv("rx_time,tx_time,size,seq_end,ack_sent\n1,0.5,abc,1,1\n"),
                  TraceFormatError);
}
