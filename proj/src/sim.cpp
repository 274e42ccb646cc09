#include "trigrate/sim.hpp"

#include "trigrate/csv.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>

namespace trigrate {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void validate_common(const SimConfig& cfg) {
  std::vector<std::string> errors;
  const int n = cfg.spec.n();
  if (n == 0) errors.push_back("spec: empty");
  if (cfg.x0.coords.size() != n) errors.push_back("x0: dimension does not match spec");
  if (cfg.xhat0.coords.size() != n) errors.push_back("xhat0: dimension does not match spec");
  if (!(cfg.horizon > 0.0)) errors.push_back("horizon: must be > 0");
  if (!(cfg.dt > 0.0)) errors.push_back("dt: must be > 0");
  if (!(cfg.L > 0.0)) errors.push_back("L: must be > 0");
  if (!(cfg.tail_fraction > 0.0 && cfg.tail_fraction <= 1.0)) errors.push_back("tail_fraction: must be in (0, 1]");
  if (cfg.max_refinements < 0) errors.push_back("max_refinements: must be >= 0");
  if (errors.empty() && cfg.x0.coords.norm() > cfg.L * (1.0 + 1e-12)) {
    std::ostringstream os;
    os << "x0: norm " << cfg.x0.coords.norm() << " exceeds L = " << cfg.L;
    errors.push_back(os.str());
  }
  if (!errors.empty()) {
    std::string msg = "invalid simulation config:";
    for (const auto& e : errors) msg += "\n  " + e;
    throw ConfigError(msg);
  }
}

class Engine {
 public:
  explicit Engine(const SimConfig& cfg)
      : cfg_(cfg),
        spec_(cfg.spec),
        n_(cfg.spec.n()),
        channel_(cfg.channel, cfg.spec.n()),
        integrator_(cfg.spec, cfg.gain, cfg.dt),
        vol_spec_(cfg.spec.shifted(cfg.volume_shift.value_or(0.0))) {
    x_ = cfg.x0.coords;
    xhat_ = cfg.xhat0.coords;
    z_ = x_ - xhat_;
    z_seg_ = z_;
    trace_.n = n_;
    trace_.horizon = cfg.horizon;
    trace_.dt = cfg.dt;
    trace_.header_bits = channel_.header_bits();
    trace_.parallel = cfg.channel.layout == ChannelLayout::kParallel;
    trace_.tracks_volume = cfg.volume_shift.has_value();
    for (int f = 0; f < n_; ++f) trace_.coords.push_back(spec_.coord(f));
    vol_.log_measure = n_ * std::log(2.0 * cfg.L);
  }

  SimTrace run() {
    sample();
    last_sample_right_ = false;
    if (std::holds_alternative<TriggerConfig>(cfg_.policy)) {
      run_et(std::get<TriggerConfig>(cfg_.policy));
    } else {
      run_tt(std::get<TTConfig>(cfg_.policy));
    }
    trace_.terminal_log_volume = vol_.log_measure;
    return std::move(trace_);
  }

 private:
  // ---- shared plumbing -------------------------------------------------

  void set_z_at(double s) {
    const double h = s - t_seg_;
    if (h == 0.0) {
      z_ = z_seg_;
      return;
    }
    for (int f = 0; f < n_; ++f) z_[f] = propagate_coordinate(spec_, z_seg_, f, h);
  }

  void step_state_to(double s) {
    const double h = s - t_;
    if (h <= 0.0) return;
    if (cfg_.integrate_state) {
      integrator_.advance(x_, xhat_, h);
      set_z_at(s);
    } else {
      xhat_ *= std::exp(-cfg_.gain.kappa * h);
      set_z_at(s);
      x_ = z_ + xhat_;
    }
    t_ = s;
  }

  void sample() {
    if (!trace_.sample_t.empty() && trace_.sample_t.back() == t_ && last_sample_right_) {
      // Collapse repeated right limits at one instant.
      const std::size_t row = trace_.sample_t.size() - 1;
      for (int f = 0; f < n_; ++f) trace_.sample_z[row * static_cast<std::size_t>(n_) + static_cast<std::size_t>(f)] = z_[f];
      trace_.sample_x_norm.back() = x_.norm();
      trace_.sample_order.back() = order_++;
      return;
    }
    trace_.sample_t.push_back(t_);
    for (int f = 0; f < n_; ++f) trace_.sample_z.push_back(z_[f]);
    trace_.sample_x_norm.push_back(x_.norm());
    trace_.sample_order.push_back(order_++);
    last_sample_right_ = true;
  }

  // Advance to t_to, recording grid samples strictly inside and the left
  // limit at t_to.
  void advance(double t_to) {
    if (t_to <= t_) return;
    const double before = t_;
    if (cfg_.record_grid) {
      auto k = static_cast<std::int64_t>(std::floor(t_ / cfg_.dt)) + 1;
      for (double g = static_cast<double>(k) * cfg_.dt; g < t_to; g = static_cast<double>(++k) * cfg_.dt) {
        if (g <= t_) continue;
        step_state_to(g);
        last_sample_right_ = false;
        sample();
      }
    }
    step_state_to(t_to);
    if (trace_.tracks_volume) vol_ = volume_step(vol_, vol_spec_, t_to - before);
    last_sample_right_ = false;
    sample();
    last_sample_right_ = false;
  }

  // Commit the current z as the origin of the next exact segment.
  void rebase() {
    z_seg_ = z_;
    t_seg_ = t_;
  }

  std::size_t push_event(EventKind kind, int flat, int bits, double z_abs, std::int64_t seq) {
    TraceEvent e;
    e.t = t_;
    e.kind = kind;
    e.flat = flat;
    e.coord = flat >= 0 ? spec_.coord(flat) : CoordId{-1, -1};
    e.bits = bits;
    e.z_abs = z_abs;
    e.seq = seq;
    e.log_volume = trace_.tracks_volume ? vol_.log_measure : 0.0;
    e.order = order_++;
    trace_.events.push_back(e);
    return trace_.events.size() - 1;
  }

  // ---- event-triggered policy ------------------------------------------

  struct EtFlight {
    double t_s;
    int sign;
    std::size_t send_event;
  };

  void run_et(const TriggerConfig& tc) {
    validate(spec_, tc);
    const auto cascade = validate_cascade(spec_, tc);
    if (auto bad = cascade.first_violation()) {
      std::ostringstream os;
      const auto c = spec_.coord(bad->flat);
      os << "cascade violation at block " << c.block << " coord " << c.index << ": v0 = " << tc.v0[bad->flat]
         << " exceeds bound " << bad->adopted;
      throw ConfigError(os.str());
    }
    if (cfg_.delays.gamma() > tc.gamma * (1.0 + 1e-12)) throw ConfigError("delays: schedule gamma exceeds trigger gamma");
    for (int f = 0; f < n_; ++f) {
      if (std::abs(z_[f]) > tc.v0[f] * (1.0 + 1e-12)) {
        std::ostringstream os;
        os << "initial error |z_" << f << "(0)| = " << std::abs(z_[f]) << " exceeds v0 = " << tc.v0[f];
        throw ConfigError(os.str());
      }
    }

    std::vector<CodecParams> codec(static_cast<std::size_t>(n_));
    for (int f = 0; f < n_; ++f) {
      auto& c = codec[static_cast<std::size_t>(f)];
      c = et_codec_params(spec_.lambda_of(f), tc, tc.rho(spec_, f));
      if (cfg_.codec_fault) c = cfg_.codec_fault(f, c);
    }
    std::vector<bool> in_flight(static_cast<std::size_t>(n_), false);
    std::vector<std::int64_t> count(static_cast<std::size_t>(n_), 0);
    std::map<std::int64_t, EtFlight> flights;
    std::int64_t seq = 0;
    const double H = cfg_.horizon;
    const double contract = tc.rho0 * std::exp(-tc.sigma * tc.gamma);

    while (true) {
      const double t_rec = channel_.peek_time().value_or(kInf);
      double best_t = kInf;
      int best_f = -1;
      const StateVec zs{z_, t_};
      for (int f = 0; f < n_; ++f) {
        if (in_flight[static_cast<std::size_t>(f)]) continue;
        const double limit = std::min({t_rec, H, best_t});
        const auto ts = et_trigger_time(spec_, tc, zs, f, limit, cfg_.dt);
        if (ts && *ts < best_t) {
          best_t = *ts;
          best_f = f;
        }
      }
      const double t_next = std::min({t_rec, best_t, H});
      advance(t_next);
      if (t_next >= H) break;
      rebase();

      if (t_rec <= best_t) {
        while (channel_.peek_time() && *channel_.peek_time() <= t_) {
          auto d = channel_.next_reception(t_);
          const Packet& p = d->packet;
          const int f = p.flat;
          const auto fu = static_cast<std::size_t>(f);
          const int wire = channel_.wire_bits(p);
          if (trace_.tracks_volume) vol_ = volume_refine(vol_, wire);
          const std::size_t recv_ev = push_event(EventKind::kReceive, f, wire, std::abs(z_[f]), p.seq);
          const EtFlight fl = flights.at(p.seq);
          flights.erase(p.seq);
          const double lambda = spec_.lambda_of(f);
          const double rho = tc.rho(spec_, f);
          EtDecoded dec = et_decode(tc, codec[fu], p.payload, t_, lambda, tc.v0[f]);
          const double radius = contract * tc.threshold(f, fl.t_s);
          double err = std::abs(z_[f] - dec.z_bar);
          int level = 0;
          int bits = p.size();
          while (err > radius * (1.0 + 1e-9) && level < cfg_.max_refinements) {
            ++level;
            const CodecParams c = et_codec_params(lambda, tc, rho, level);
            const Bits payload = et_encode(c, fl.t_s, fl.sign);
            dec = et_decode(tc, c, payload, t_, lambda, tc.v0[f]);
            err = std::abs(z_[f] - dec.z_bar);
            bits = static_cast<int>(payload.size());
          }
          if (err > radius * (1.0 + 1e-9)) ++trace_.unresolved_escalations;
          if (level > 0) {
            ++trace_.escalations;
            const int patched = bits + channel_.header_bits();
            trace_.events[fl.send_event].bits = patched;
            trace_.events[recv_ev].bits = patched;
          }
          if (radius > 0.0) trace_.max_jump_ratio = std::max(trace_.max_jump_ratio, err / radius);
          xhat_[f] += dec.z_bar;
          z_[f] -= dec.z_bar;
          if (!cfg_.integrate_state) x_ = z_ + xhat_;
          rebase();
          push_event(EventKind::kJump, f, 0, std::abs(z_[f]), p.seq);
          in_flight[fu] = false;
        }
      } else {
        const int f = best_f;
        const auto fu = static_cast<std::size_t>(f);
        const int sign = z_[f] < 0.0 ? -1 : 1;
        const double v = tc.threshold(f, t_);
        // A located crossing sits on the threshold up to root-finding
        // tolerance; put it there exactly.
        if (std::abs(std::abs(z_[f]) - v) <= 1e-6 * v) {
          const double snapped = sign * tc.v0[f] * std::exp(-tc.sigma * t_);
          x_[f] += snapped - z_[f];
          z_[f] = snapped;
          rebase();
        }
        push_event(EventKind::kTrigger, f, 0, std::abs(z_[f]), seq);
        Packet p;
        p.coord = spec_.coord(f);
        p.flat = f;
        p.seq = seq;
        p.t_send = t_;
        p.payload = et_encode(codec[fu], t_, sign);
        const double delay = cfg_.delays.delay(count[fu]++, f);
        const int wire = channel_.wire_bits(p);
        const std::size_t send_ev = push_event(EventKind::kSend, f, wire, std::abs(z_[f]), seq);
        channel_.submit(std::move(p), delay);
        flights.emplace(seq, EtFlight{t_, sign, send_ev});
        in_flight[fu] = true;
        ++seq;
      }
      sample();
    }
  }

  // ---- time-triggered policies -----------------------------------------

  struct TtFlight {
    double t_s;
    Eigen::VectorXd half_width;
    Eigen::VectorXd center;
  };

  void run_tt(const TTConfig& tt) {
    if (!(tt.period > 0.0)) throw ConfigError("period: must be > 0");
    if (z_.lpNorm<Eigen::Infinity>() > cfg_.L * (1.0 + 1e-12)) throw ConfigError("initial error lies outside the box [-L, L]^n");
    const int g = tt.bits ? *tt.bits : tt_packet_size(spec_, tt, cfg_.delays.gamma());
    if (g < 1) throw ConfigError("bits: must be >= 1");
    const std::vector<int> split = tt_split_bits(spec_, tt.sigma, g);
    Eigen::VectorXd box = Eigen::VectorXd::Constant(n_, cfg_.L);
    Eigen::VectorXd e(n_);
    std::map<std::int64_t, TtFlight> flights;
    std::int64_t k = 0;
    std::int64_t m = 0;
    double next_send = 0.0;
    const double H = cfg_.horizon;
    const double T = tt.period;

    while (true) {
      const double t_rec = channel_.peek_time().value_or(kInf);
      const double t_next = std::min({t_rec, next_send, H});
      advance(t_next);
      if (t_next >= H) break;
      rebase();
      if (t_rec <= next_send) {
        while (channel_.peek_time() && *channel_.peek_time() <= t_) {
          auto d = channel_.next_reception(t_);
          const Packet& p = d->packet;
          const int wire = channel_.wire_bits(p);
          if (trace_.tracks_volume) vol_ = volume_refine(vol_, wire);
          push_event(EventKind::kReceive, -1, wire, z_.norm(), p.seq);
          const TtFlight fl = flights.at(p.seq);
          flights.erase(p.seq);
          const Eigen::VectorXd c = tt_dequantize(p.payload, fl.half_width, split);
          Eigen::VectorXd zbar(n_);
          for (int f = 0; f < n_; ++f) zbar[f] = propagate_coordinate(spec_, c, f, t_ - fl.t_s);
          xhat_ += zbar;
          z_ -= zbar;
          if (!cfg_.integrate_state) x_ = z_ + xhat_;
          rebase();
          push_event(EventKind::kJump, -1, 0, z_.norm(), p.seq);
        }
      } else {
        // Error left once every packet in flight has been applied.
        e = z_;
        for (const auto& [s, fl] : flights)
          for (int f = 0; f < n_; ++f) e[f] -= propagate_coordinate(spec_, fl.center, f, t_ - fl.t_s);
        BoxQuantization q = tt_quantize(e, box, split);
        Packet p;
        p.coord = {0, 0};
        p.flat = 0;
        p.seq = k;
        p.t_send = t_;
        p.payload = std::move(q.payload);
        const double delay = cfg_.delays.delay(k, 0);
        const int wire = channel_.wire_bits(p);
        push_event(EventKind::kSend, -1, wire, z_.norm(), k);
        flights.emplace(k, TtFlight{t_, box, q.center});
        const double t_c = channel_.submit(std::move(p), delay);
        if (tt.variant == TTVariant::kPeriodic) {
          m += 1;
        } else {
          m += static_cast<std::int64_t>(std::floor(delay / T)) + 1;
          while (static_cast<double>(m) * T <= t_c) ++m;
        }
        const double following = static_cast<double>(m) * T;
        // Slack for rounding, so an error on the box corner stays inside.
        box = tt_propagate_box(spec_, q.half_width, following - t_) * (1.0 + 1e-12);
        next_send = following;
        ++k;
      }
      sample();
    }
  }

  const SimConfig& cfg_;
  const JordanSpec& spec_;
  int n_;
  Channel channel_;
  ClosedLoopIntegrator integrator_;
  JordanSpec vol_spec_;
  VolumeState vol_;
  Eigen::VectorXd x_, xhat_, z_, z_seg_;
  double t_ = 0.0;
  double t_seg_ = 0.0;
  bool last_sample_right_ = false;
  std::int64_t order_ = 0;
  SimTrace trace_;
};

double rate_of_stream(const std::vector<std::pair<double, int>>& sends, double horizon, double tail_start, bool& empty) {
  empty = true;
  if (sends.empty() || sends.back().first < tail_start) return 0.0;
  double best = 0.0;
  double cum = 0.0;
  const double t1 = sends.front().first;
  for (std::size_t N = 0; N < sends.size(); ++N) {
    cum += sends[N].second;
    const double end = N + 1 < sends.size() ? sends[N + 1].first : horizon;
    if (end < tail_start || end <= t1) continue;
    empty = false;
    best = std::max(best, cum / (end - t1));
  }
  return best;
}

}  // namespace

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::kTrigger: return "trigger";
    case EventKind::kSend: return "send";
    case EventKind::kReceive: return "receive";
    case EventKind::kJump: return "jump";
  }
  return "unknown";
}

double bits_sent(const SimTrace& trace, double t) {
  double total = 0.0;
  for (const auto& e : trace.events)
    if (e.kind == EventKind::kSend && e.t <= t) total += e.bits;
  return total;
}

double bits_received(const SimTrace& trace, double t) {
  double total = 0.0;
  for (const auto& e : trace.events)
    if (e.kind == EventKind::kReceive && e.t <= t) total += e.bits;
  return total;
}

SimResult run(const SimConfig& cfg) {
  validate_common(cfg);
  Engine engine(cfg);
  SimResult out;
  out.trace = engine.run();
  out.metrics = measure_rates(out.trace, cfg.tail_fraction);
  return out;
}

Metrics measure_rates(const SimTrace& trace, double tail_fraction) {
  Metrics m;
  const double H = trace.horizon;
  const double tail_start = H * (1.0 - tail_fraction);
  // One stream per lane: coordinates on parallel ET lanes, else merged.
  std::map<int, std::vector<std::pair<double, int>>> streams;
  std::vector<std::pair<double, int>> merged;
  std::map<int, double> last_send;
  m.min_interevent = kInf;
  for (const auto& e : trace.events) {
    if (e.kind == EventKind::kSend) {
      ++m.sends;
      streams[e.flat].emplace_back(e.t, e.bits);
      merged.emplace_back(e.t, e.bits);
      auto it = last_send.find(e.flat);
      if (it != last_send.end()) m.min_interevent = std::min(m.min_interevent, e.t - it->second);
      last_send[e.flat] = e.t;
    } else if (e.kind == EventKind::kReceive) {
      ++m.receptions;
    }
  }
  m.escalations = trace.escalations;
  m.terminal_log_volume = trace.terminal_log_volume;
  bool empty = true;
  if (trace.parallel) {
    bool any = false;
    for (const auto& [flat, s] : streams) {
      bool e = true;
      const double r = rate_of_stream(s, H, tail_start, e);
      any = any || !e;
      m.rate_s_coord.push_back(r);
      m.rate_s += r;
    }
    empty = !any;
  } else {
    m.rate_s = rate_of_stream(merged, H, tail_start, empty);
    m.rate_s_coord.push_back(m.rate_s);
  }
  double bc = 0.0;
  bool any_rec = false;
  for (const auto& e : trace.events) {
    if (e.kind != EventKind::kReceive) continue;
    bc += e.bits;
    if (e.t >= tail_start && e.t > 0.0) {
      any_rec = true;
      m.rate_c = std::max(m.rate_c, bc / e.t);
    }
  }
  m.no_transmissions = empty || !any_rec;
  if (empty) m.rate_s = 0.0;
  return m;
}

double envelope_check(const SimTrace& trace, const std::function<double(double, int)>& envelope) {
  double worst = -kInf;
  for (std::size_t r = 0; r < trace.samples(); ++r) {
    const double t = trace.sample_t[r];
    for (int f = 0; f < trace.n; ++f) worst = std::max(worst, std::abs(trace.z(r, f)) - envelope(t, f));
  }
  return worst;
}

void write_trace_csv(std::ostream& os, const SimTrace& trace, const std::function<double(double, int)>& envelope) {
  write_csv_row(os, {"t", "event_kind", "block", "coord", "g_bits", "z_abs", "envelope", "b_s", "b_c"});
  double bs = 0.0;
  double bc = 0.0;
  std::size_t ei = 0;
  std::size_t si = 0;
  const auto& ev = trace.events;
  // Final bit counts of sends are known only after escalations; the
  // running sums below use the patched values.
  while (ei < ev.size() || si < trace.samples()) {
    const bool take_event = si >= trace.samples() || (ei < ev.size() && ev[ei].order < trace.sample_order[si]);
    if (take_event) {
      const auto& e = ev[ei++];
      if (e.kind == EventKind::kSend) bs += e.bits;
      if (e.kind == EventKind::kReceive) bc += e.bits;
      const bool coord = e.flat >= 0;
      const bool has_bits = e.kind == EventKind::kSend || e.kind == EventKind::kReceive;
      write_csv_row(os, {format_number(e.t), std::string(to_string(e.kind)), coord ? std::to_string(e.coord.block) : "",
                         coord ? std::to_string(e.coord.index) : "", has_bits ? std::to_string(e.bits) : "",
                         format_number(e.z_abs), (envelope && coord) ? format_number(envelope(e.t, e.flat)) : "",
                         format_number(bs), format_number(bc)});
    } else {
      const std::size_t r = si++;
      const double t = trace.sample_t[r];
      for (int f = 0; f < trace.n; ++f) {
        const CoordId c = trace.coords[static_cast<std::size_t>(f)];
        write_csv_row(os, {format_number(t), "sample", std::to_string(c.block), std::to_string(c.index), "",
                           format_number(std::abs(trace.z(r, f))), envelope ? format_number(envelope(t, f)) : "",
                           format_number(bs), format_number(bc)});
      }
    }
  }
}

}  // namespace trigrate
