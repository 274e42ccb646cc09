// Closed-loop executor: plant, estimator, policy, channel and metrics.
#ifndef TRIGRATE_SIM_HPP
#define TRIGRATE_SIM_HPP

#include "trigrate/channel.hpp"
#include "trigrate/jordan.hpp"
#include "trigrate/policies.hpp"
#include "trigrate/rate_bounds.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string_view>
#include <variant>
#include <vector>

namespace trigrate {

using Policy = std::variant<TriggerConfig, TTConfig>;

struct SimConfig {
  JordanSpec spec;
  ControllerGain gain;
  Policy policy;
  ChannelMode channel;
  DelaySchedule delays = DelaySchedule::all_zero(0.0);
  /// Bound on ||x(0)||; also the initial half-width of the time-triggered
  /// quantizer box.
  double L = 1.0;
  StateVec x0;
  StateVec xhat0;
  double horizon = 10.0;
  double dt = 1e-3;
  double tail_fraction = 0.5;
  /// Integrate x and x-hat numerically; z is always exact.
  bool integrate_state = true;
  /// Record |z| on the dt grid (event limits are always recorded).
  bool record_grid = true;
  /// Track ln m(Gamma) of A + shift I when set; shift = sigma measures the
  /// uncertainty relative to the e^{-sigma t} envelope.
  std::optional<double> volume_shift;
  /// Event-triggered codec escalations allowed per packet (each halves the
  /// time cell).
  int max_refinements = 8;
  /// Fault injection: replaces the event-triggered codec of a coordinate.
  std::function<CodecParams(int flat, const CodecParams&)> codec_fault;
};

enum class EventKind { kTrigger, kSend, kReceive, kJump };
std::string_view to_string(EventKind kind);

/// One trace event. `flat` is -1 for time-triggered packets, which carry
/// the whole state. `z_abs` is |z_flat| (event-triggered) or ||z||
/// (time-triggered) just before the event takes effect, except for jumps,
/// where it is the post-jump value.
struct TraceEvent {
  double t = 0.0;
  EventKind kind = EventKind::kSend;
  int flat = -1;
  CoordId coord{-1, -1};
  int bits = 0;
  double z_abs = 0.0;
  std::int64_t seq = 0;
  double log_volume = 0.0;
  std::int64_t order = 0;
};

struct SimTrace {
  int n = 0;
  double horizon = 0.0;
  double dt = 0.0;
  int header_bits = 0;
  bool parallel = true;
  bool tracks_volume = false;
  std::vector<CoordId> coords;  // (block, index) of each flat coordinate
  std::vector<TraceEvent> events;
  /// Sample rows: dt grid plus left and right limits at every event.
  std::vector<double> sample_t;
  std::vector<double> sample_z;  // n signed entries per row
  std::vector<double> sample_x_norm;
  std::vector<std::int64_t> sample_order;
  std::int64_t escalations = 0;
  /// Receptions whose post-jump error still exceeds the precision radius.
  std::int64_t unresolved_escalations = 0;
  /// max over receptions of |z(t_c+)| / (rho0 e^{-sigma gamma} v(t_s)).
  double max_jump_ratio = 0.0;
  double terminal_log_volume = 0.0;

  std::size_t samples() const { return sample_t.size(); }
  double z(std::size_t row, int flat) const { return sample_z[row * static_cast<std::size_t>(n) + static_cast<std::size_t>(flat)]; }
};

/// b_s(t) and b_c(t): wire bits sent / received up to and including t.
double bits_sent(const SimTrace& trace, double t);
double bits_received(const SimTrace& trace, double t);

struct Metrics {
  double rate_s = 0.0;
  double rate_c = 0.0;
  std::vector<double> rate_s_coord;
  bool no_transmissions = false;
  double min_interevent = 0.0;
  double max_envelope_residual = 0.0;
  std::int64_t sends = 0;
  std::int64_t receptions = 0;
  std::int64_t escalations = 0;
  double terminal_log_volume = 0.0;
};

struct SimResult {
  SimTrace trace;
  Metrics metrics;
};

/// Deterministic run to cfg.horizon. At equal times receptions are handled
/// before sends. Throws ConfigError, ProtocolError or DecodeError.
SimResult run(const SimConfig& cfg);

/// Finite-horizon limsup estimates. R_s: max over N of
/// sum_{k<=N} g_k / (t_s^{N+1} - t_s^1) with t_s^{N+1} (the horizon for the
/// last packet) inside the tail; summed over coordinates on parallel lanes.
/// R_c: max of b_c(t) / t over receptions in the tail. Zero (flagged) when
/// the tail holds no transmissions.
Metrics measure_rates(const SimTrace& trace, double tail_fraction);

/// Max over sample rows of |z_flat(t)| - envelope(t, flat); <= 0 passes.
double envelope_check(const SimTrace& trace, const std::function<double(double, int)>& envelope);

/// CSV: t,event_kind,block,coord,g_bits,z_abs,envelope,b_s,b_c
void write_trace_csv(std::ostream& os, const SimTrace& trace,
                     const std::function<double(double, int)>& envelope = nullptr);

enum class AdversaryObjective { kTerminalLogVolume, kEnvelopeResidual, kRate };

struct AdversaryGoal {
  AdversaryObjective objective = AdversaryObjective::kTerminalLogVolume;
  std::function<double(double, int)> envelope;  // for kEnvelopeResidual
};

struct AdversaryBudget {
  int slots = 8;
  int grid_points = 5;
  int max_evaluations = 64;
};

struct AdversaryResult {
  DelaySchedule schedule = DelaySchedule::all_zero(0.0);
  double value = 0.0;
  int evaluations = 0;
};

/// Best delay realization for `goal` (maximized): all-0, all-gamma and
/// alternating first, then coordinate-wise greedy over `slots` cyclic delay
/// slots on a `grid_points` grid of [0, gamma]. Ties keep the earlier
/// candidate.
AdversaryResult adversary_search(const SimConfig& cfg, const AdversaryGoal& goal, const AdversaryBudget& budget);

}  // namespace trigrate

#endif  // TRIGRATE_SIM_HPP
