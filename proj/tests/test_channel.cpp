#include "gen.hpp"

#include "trigrate/channel.hpp"

#include <doctest.h>

using namespace trigrate;

namespace {

Packet packet(int flat, double t, int bits = 3, CoordId c = {0, 0}) {
  Packet p;
  p.coord = c;
  p.flat = flat;
  p.t_send = t;
  p.payload.assign(static_cast<std::size_t>(bits), true);
  return p;
}

}  // namespace

TEST_CASE("ceil_log2") {
  CHECK(ceil_log2(1) == 0);
  CHECK(ceil_log2(2) == 1);
  CHECK(ceil_log2(3) == 2);
  CHECK(ceil_log2(29) == 5);
  CHECK(ceil_log2(30) == 5);
  CHECK(ceil_log2(33) == 6);
}

TEST_CASE("idle channel delivers after the realized delay") {
  Channel ch(ChannelMode{}, 1);
  CHECK(ch.submit(packet(0, 1.0), 0.3) == doctest::Approx(1.3));
}

TEST_CASE("FIFO hold keeps order behind an earlier reception") {
  Channel ch({ChannelLayout::kParallel, ChannelSemantics::kFifoHold}, 1);
  CHECK(ch.submit(packet(0, 1.0), 1.0) == 2.0);
  CHECK(ch.submit(packet(0, 1.5), 0.2) == 2.0);
}

TEST_CASE("queueing channel accumulates delay: k-th reception at k gamma") {
  Channel ch(ChannelMode{}, 1);
  const double T = 0.5, gamma = 1.0;
  for (int k = 0; k < 10; ++k) {
    const double tc = ch.submit(packet(0, k * T), gamma);
    CHECK(tc == doctest::Approx((k + 1) * gamma));
  }
}

TEST_CASE("stop-and-wait rejects a submission while busy") {
  Channel ch({ChannelLayout::kParallel, ChannelSemantics::kStopAndWait}, 1);
  CHECK(ch.submit(packet(0, 0.0), 1.2) == doctest::Approx(1.2));
  CHECK(ch.busy(0, 1.0));
  try {
    ch.submit(packet(0, 1.0), 0.0);
    FAIL("expected ProtocolError");
  } catch (const ProtocolError& e) {
    CHECK(e.time() == 1.0);
  }
  CHECK_FALSE(ch.busy(0, 1.3));
}

TEST_CASE("next_reception order and exhaustion") {
  Channel ch({ChannelLayout::kParallel, ChannelSemantics::kIdleBoundedQueueing}, 2);
  CHECK_FALSE(ch.next_reception(0.0).has_value());
  ch.submit(packet(0, 0.5), 1.0);
  ch.submit(packet(1, 0.2, 3, {1, 0}), 1.0);
  CHECK(ch.in_flight() == 2);
  auto a = ch.next_reception(1.0);
  REQUIRE(a);
  CHECK(a->t_c == doctest::Approx(1.2));
  auto b = ch.next_reception(1.0);
  REQUIRE(b);
  CHECK(b->t_c == doctest::Approx(1.5));
  CHECK_FALSE(ch.next_reception(1.0).has_value());
}

TEST_CASE("equal reception times are delivered in coordinate order") {
  Channel ch(ChannelMode{}, 3);
  ch.submit(packet(2, 0.0, 1, {1, 0}), 1.0);
  ch.submit(packet(1, 0.5, 1, {0, 1}), 0.5);
  ch.submit(packet(0, 0.2, 1, {0, 0}), 0.8);
  CHECK(ch.next_reception(0.0)->packet.flat == 0);
  CHECK(ch.next_reception(0.0)->packet.flat == 1);
  CHECK(ch.next_reception(0.0)->packet.flat == 2);
}

TEST_CASE("shared channel adds ceil(log2 n) header bits") {
  Channel shared({ChannelLayout::kSharedWithHeader, ChannelSemantics::kIdleBoundedQueueing}, 5);
  Channel parallel(ChannelMode{}, 5);
  const auto p = packet(0, 0.0, 6);
  CHECK(shared.header_bits() == 3);
  CHECK(shared.wire_bits(p) - parallel.wire_bits(p) == 3);
  CHECK(Channel({ChannelLayout::kSharedWithHeader, ChannelSemantics::kIdleBoundedQueueing}, 1).header_bits() == 0);
}

TEST_CASE("delay schedules") {
  CHECK(DelaySchedule::all_max(0.7).delay(5) == 0.7);
  CHECK(DelaySchedule::all_zero(0.7).delay(5) == 0.0);
  const auto alt = DelaySchedule::alternating(0.7);
  CHECK(alt.delay(0) == 0.7);
  CHECK(alt.delay(1) == 0.0);
  CHECK(alt.delay(2) == 0.7);
  const auto lst = DelaySchedule::explicit_list({0.1, 0.2}, 0.5);
  CHECK(lst.delay(3) == 0.2);
  CHECK(DelaySchedule::constant(0.25, 1.0).delay(9) == 0.25);
  CHECK_THROWS(DelaySchedule::explicit_list({0.1, 0.6}, 0.5));
  CHECK_THROWS(DelaySchedule::constant(2.0, 1.0));
  CHECK_THROWS(DelaySchedule::from_name("bogus", 1.0, 0));
  CHECK(DelaySchedule::from_name("all-max", 1.0, 0).kind() == DelayKind::kAllMax);
}

TEST_CASE("property: uniform delays lie in [0, gamma] and are lane-independent") {
  gen::Rng rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    const double gamma = rng.uniform(0.0, 3.0);
    const auto seed = rng.bits();
    const auto s = DelaySchedule::uniform(gamma, seed);
    const auto again = DelaySchedule::uniform(gamma, seed);
    for (int k = 0; k < 200; ++k) {
      const double d = s.delay(k, k % 3);
      CHECK(d >= 0.0);
      CHECK(d <= gamma);
      CHECK(d == again.delay(k, k % 3));
    }
  }
}

TEST_CASE("property: per-lane FIFO delivery with realized idle delay <= gamma") {
  gen::Rng rng(22);
  for (auto sem : {ChannelSemantics::kIdleBoundedQueueing, ChannelSemantics::kFifoHold}) {
    for (int trial = 0; trial < 30; ++trial) {
      const int n = rng.integer(1, 4);
      const double gamma = rng.uniform(0.0, 2.0);
      Channel ch({ChannelLayout::kParallel, sem}, n);
      std::vector<double> t(static_cast<std::size_t>(n), 0.0);
      std::vector<double> last_tc(static_cast<std::size_t>(n), -1.0);
      for (int k = 0; k < 100; ++k) {
        const int f = rng.integer(0, n - 1);
        t[static_cast<std::size_t>(f)] += rng.uniform(0.0, 1.0);
        const double send = t[static_cast<std::size_t>(f)];
        const bool idle = !ch.busy(f, send);
        const double delay = rng.uniform(0.0, gamma);
        const double tc = ch.submit(packet(f, send, 1, {f, 0}), delay);
        CHECK(tc >= last_tc[static_cast<std::size_t>(f)]);
        if (idle) CHECK(tc - send <= gamma + 1e-12);
        last_tc[static_cast<std::size_t>(f)] = tc;
      }
      double prev = -1.0;
      while (auto d = ch.next_reception(0.0)) {
        CHECK(d->t_c >= prev);
        prev = d->t_c;
      }
    }
  }
}
