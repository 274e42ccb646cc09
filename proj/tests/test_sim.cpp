#include "gen.hpp"

#include "trigrate/experiments.hpp"
#include "trigrate/sim.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

using namespace trigrate;

namespace {

SimConfig et_config(double lambda, double sigma, double gamma, double z0, const DelaySchedule& delays) {
  TriggerConfig tc;
  tc.sigma = sigma;
  tc.v0 = Eigen::VectorXd::Constant(1, 1.0);
  tc.rho0 = 0.5;
  tc.b = 2.0;
  tc.gamma = gamma;
  SimConfig c;
  c.spec = JordanSpec::scalar(lambda);
  c.policy = tc;
  c.delays = delays;
  c.x0 = {Eigen::VectorXd::Constant(1, z0), 0.0};
  c.xhat0 = {Eigen::VectorXd::Zero(1), 0.0};
  c.horizon = 20.0;
  return c;
}

SimConfig tt_config(double period, double gamma, TTVariant variant, ChannelSemantics sem) {
  TTConfig tt;
  tt.period = period;
  tt.variant = variant;
  tt.sigma = 0.5;
  SimConfig c;
  c.spec = JordanSpec::scalar(1.0);
  c.policy = tt;
  c.channel.semantics = sem;
  c.delays = DelaySchedule::all_zero(gamma);
  c.x0 = {Eigen::VectorXd::Constant(1, 1.0), 0.0};
  c.xhat0 = {Eigen::VectorXd::Zero(1), 0.0};
  c.horizon = 20.0;
  c.integrate_state = false;
  return c;
}

double et_envelope(const SimConfig& c, double t, int f) {
  const auto& tc = std::get<TriggerConfig>(c.policy);
  return tc.threshold(f, t) * std::exp((c.spec.blocks()[0].lambda + tc.sigma) * tc.gamma);
}

bool same_trace(const SimTrace& a, const SimTrace& b) {
  if (a.events.size() != b.events.size() || a.sample_t != b.sample_t || a.sample_z != b.sample_z) return false;
  for (std::size_t k = 0; k < a.events.size(); ++k) {
    const auto& x = a.events[k];
    const auto& y = b.events[k];
    if (x.t != y.t || x.kind != y.kind || x.flat != y.flat || x.bits != y.bits || x.z_abs != y.z_abs) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("zero initial error never transmits") {
  const auto r = run(et_config(1.0, 0.5, 0.5, 0.0, DelaySchedule::all_max(0.5)));
  CHECK(r.metrics.sends == 0);
  CHECK(r.metrics.no_transmissions);
  CHECK(r.metrics.rate_s == 0.0);
}

TEST_CASE("zero delay: one-bit packets and exact cancellation") {
  const auto r = run(et_config(1.0, 0.5, 0.0, 0.9, DelaySchedule::all_zero(0.0)));
  // The single jump leaves z exactly zero, so nothing else is ever sent.
  CHECK(r.metrics.sends == 1);
  int jumps = 0;
  for (const auto& e : r.trace.events) {
    if (e.kind == EventKind::kSend) CHECK(e.bits == 1);
    if (e.kind == EventKind::kJump) {
      ++jumps;
      CHECK(e.z_abs == 0.0);
    }
  }
  CHECK(jumps == 1);
  CHECK(r.trace.z(r.trace.samples() - 1, 0) == 0.0);
  CHECK(r.metrics.escalations == 0);
}

TEST_CASE("zero delay on a coupled block: one-bit packets on every row") {
  TriggerConfig tc;
  tc.sigma = 0.5;
  tc.v0 = Eigen::Vector2d(1.0, 1.0);
  tc.cascade = {{0.25, 0.5}};
  SimConfig c;
  c.spec = JordanSpec({{1.0, 2}});
  c.policy = tc;
  c.x0 = {Eigen::Vector2d(0.3, 0.9), 0.0};
  c.xhat0 = {Eigen::Vector2d::Zero(), 0.0};
  c.integrate_state = false;
  const auto r = run(c);
  CHECK(r.metrics.sends > 1);
  for (const auto& e : r.trace.events) {
    if (e.kind == EventKind::kSend) CHECK(e.bits == 1);
    if (e.kind == EventKind::kJump) CHECK(e.z_abs == 0.0);
  }
}

TEST_CASE("z is the plant error when the state is integrated") {
  auto c = et_config(1.0, 0.5, 0.3, 0.7, DelaySchedule::uniform(0.3, 5));
  c.horizon = 5.0;
  const auto r = run(c);
  // |x| decays once the error is small; the integrated norm stays bounded.
  double worst = 0.0;
  for (double x : r.trace.sample_x_norm) worst = std::max(worst, x);
  CHECK(std::isfinite(worst));
  CHECK(r.trace.sample_x_norm.back() < 0.1);
}

TEST_CASE("property: envelope, rate and inter-event time over random delays") {
  gen::Rng rng(91);
  for (int trial = 0; trial < 60; ++trial) {
    const double lambda = rng.uniform(0.2, 2.0);
    const double sigma = rng.uniform(0.2, 1.0);
    const double gamma = rng.uniform(0.0, 1.0);
    const std::uint64_t seed = rng.bits();
    auto c = et_config(lambda, sigma, gamma, rng.uniform(-1.0, 1.0), DelaySchedule::uniform(gamma, seed));
    c.integrate_state = false;
    c.horizon = 30.0;
    const auto r = run(c);
    CHECK(envelope_check(r.trace, [&](double t, int f) { return et_envelope(c, t, f); }) <= 1e-9);
    CHECK(r.trace.max_jump_ratio <= 1.0 + 1e-9);
    // Each lane sends at most one packet per minimum inter-event time.
    const int g = et_codec_params(lambda, std::get<TriggerConfig>(c.policy)).bits;
    CHECK(r.metrics.rate_s <= g / et_min_interevent(lambda, sigma, gamma, 0.5) + 1e-9);
    if (r.metrics.sends > 1) CHECK(r.metrics.min_interevent >= et_min_interevent(lambda, sigma, gamma, 0.5) - 1e-6);
  }
}

TEST_CASE("a coarsened codec breaks the precision guarantee unless escalation repairs it") {
  auto c = et_config(1.0, 0.5, 1.0, 0.9, DelaySchedule::all_max(1.0));
  c.integrate_state = false;
  c.codec_fault = [](int, const CodecParams& p) {
    CodecParams q = p;
    q.delta = p.delta * 8.0;
    q.cells = static_cast<std::int64_t>(std::ceil(1.0 / q.delta)) + 1;
    q.bits = 1 + ceil_log2(q.cells);
    return q;
  };
  c.max_refinements = 0;
  const auto broken = run(c);
  CHECK(broken.trace.max_jump_ratio > 1.0);
  CHECK(broken.trace.unresolved_escalations > 0);

  c.max_refinements = 8;
  const auto repaired = run(c);
  CHECK(repaired.metrics.escalations > 0);
  CHECK(repaired.trace.unresolved_escalations == 0);
  CHECK(repaired.trace.max_jump_ratio <= 1.0 + 1e-9);
  CHECK(envelope_check(repaired.trace, [&](double t, int f) { return et_envelope(c, t, f); }) <= 1e-9);
}

TEST_CASE("runs are bitwise deterministic") {
  auto c = et_config(1.0, 0.5, 0.5, -0.6, DelaySchedule::uniform(0.5, 17));
  CHECK(same_trace(run(c).trace, run(c).trace));
  auto t = tt_config(0.5, 0.0, TTVariant::kStopAndWait, ChannelSemantics::kStopAndWait);
  CHECK(same_trace(run(t).trace, run(t).trace));
}

TEST_CASE("property: received bits never exceed sent bits") {
  gen::Rng rng(101);
  for (int trial = 0; trial < 20; ++trial) {
    const double gamma = rng.uniform(0.0, 1.0);
    auto c = et_config(1.0, 0.5, gamma, rng.uniform(-1.0, 1.0), DelaySchedule::uniform(gamma, rng.bits()));
    c.integrate_state = false;
    const auto r = run(c);
    for (const auto& e : r.trace.events) CHECK(bits_received(r.trace, e.t) <= bits_sent(r.trace, e.t));
    CHECK(bits_received(r.trace, c.horizon) <= bits_sent(r.trace, c.horizon));
  }
}

TEST_CASE("parallel lanes: the sent rate is the sum over coordinates") {
  TriggerConfig tc;
  tc.sigma = 0.5;
  tc.v0 = Eigen::Vector2d(1.0, 1.0);
  tc.gamma = 0.5;
  SimConfig c;
  c.spec = JordanSpec({{1.0, 1}, {2.0, 1}});
  c.policy = tc;
  c.delays = DelaySchedule::uniform(0.5, 3);
  c.x0 = {Eigen::Vector2d(0.8, -0.5), 0.0};
  c.xhat0 = {Eigen::Vector2d::Zero(), 0.0};
  c.horizon = 20.0;
  c.integrate_state = false;
  const auto r = run(c);
  REQUIRE(r.metrics.rate_s_coord.size() == 2);
  CHECK(r.metrics.rate_s == doctest::Approx(r.metrics.rate_s_coord[0] + r.metrics.rate_s_coord[1]));
  CHECK(r.metrics.rate_s_coord[1] > r.metrics.rate_s_coord[0]);
}

TEST_CASE("stop-and-wait at zero delay sends one packet per period") {
  const auto r = run(tt_config(0.5, 0.0, TTVariant::kStopAndWait, ChannelSemantics::kStopAndWait));
  // Two-bit packets every half second.
  CHECK(r.metrics.rate_s == doctest::Approx(4.0));
  CHECK(r.metrics.sends == 40);
}

TEST_CASE("rate estimator on a hand-built trace") {
  SimTrace t;
  t.n = 1;
  t.horizon = 10.0;
  t.events.push_back({6.0, EventKind::kSend, 0, {0, 0}, 5});
  t.events.push_back({6.5, EventKind::kReceive, 0, {0, 0}, 5});
  const auto m = measure_rates(t, 0.5);
  CHECK(m.rate_s == doctest::Approx(5.0 / 4.0));
  CHECK(m.rate_c == doctest::Approx(5.0 / 6.5));
  CHECK_FALSE(m.no_transmissions);

  SimTrace early = t;
  early.events[0].t = 1.0;
  early.events[1].t = 1.5;
  const auto e = measure_rates(early, 0.5);
  CHECK(e.rate_s == 0.0);
  CHECK(e.no_transmissions);
}

TEST_CASE("adversary: zero delay bound returns the all-zero schedule") {
  auto c = tt_config(0.5, 0.0, TTVariant::kStopAndWait, ChannelSemantics::kStopAndWait);
  const auto r = adversary_search(c, {AdversaryObjective::kRate, nullptr}, {});
  CHECK(r.evaluations == 1);
  CHECK(r.schedule.delay(0, 0) == 0.0);
  CHECK(r.value == doctest::Approx(4.0));
}

TEST_CASE("adversary: maximal delays maximize the stop-and-wait volume") {
  auto c = tt_config(0.5, 1.0, TTVariant::kStopAndWait, ChannelSemantics::kStopAndWait);
  TTConfig tt = std::get<TTConfig>(c.policy);
  tt.bits = 3;
  c.policy = tt;
  const auto r = adversary_search(c, {AdversaryObjective::kTerminalLogVolume, nullptr}, {4, 3, 20});
  CHECK(r.evaluations <= 20);
  CHECK(r.schedule.delay(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("trace CSV") {
  const auto c = et_config(1.0, 0.5, 0.0, 0.9, DelaySchedule::all_zero(0.0));
  const auto r = run(c);
  std::ostringstream os;
  write_trace_csv(os, r.trace, [&](double t, int f) { return et_envelope(c, t, f); });
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  CHECK(line == "t,event_kind,block,coord,g_bits,z_abs,envelope,b_s,b_c");
  std::size_t rows = 0, sends = 0;
  while (std::getline(is, line)) {
    ++rows;
    if (line.find(",send,") != std::string::npos) ++sends;
  }
  CHECK(sends == static_cast<std::size_t>(r.metrics.sends));
  CHECK(rows == r.trace.events.size() + r.trace.samples());
}

TEST_CASE("configuration and protocol errors") {
  auto collide = tt_config(0.5, 1.0, TTVariant::kPeriodic, ChannelSemantics::kStopAndWait);
  collide.delays = DelaySchedule::all_max(1.0);
  CHECK_THROWS_AS(run(collide), ProtocolError);
  auto outside = tt_config(0.5, 0.0, TTVariant::kStopAndWait, ChannelSemantics::kStopAndWait);
  outside.x0.coords[0] = 1.5;
  CHECK_THROWS_AS(run(outside), ConfigError);
  CHECK_THROWS_AS(run(et_config(1.0, 0.5, 0.0, 1.5, DelaySchedule::all_zero(0.0))), ConfigError);
  CHECK_THROWS_AS(run(et_config(1.0, 0.5, 0.1, 0.5, DelaySchedule::all_max(0.2))), ConfigError);
  auto bad = et_config(1.0, 0.5, 0.0, 0.5, DelaySchedule::all_zero(0.0));
  bad.horizon = -1.0;
  bad.dt = 0.0;
  try {
    run(bad);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("horizon") != std::string::npos);
    CHECK(msg.find("dt") != std::string::npos);
  }
}
