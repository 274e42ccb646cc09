#include "trigrate/experiments.hpp"

#include "trigrate/csv.hpp"
#include "trigrate/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numbers>
#include <ostream>
#include <random>

namespace trigrate {

namespace {

constexpr double kLn2 = std::numbers::ln2;
constexpr double kInf = std::numeric_limits<double>::infinity();

std::string num(double v) { return format_number(v); }
std::string pass(bool ok) { return ok ? "pass" : "fail"; }

ReportTable make_table(std::vector<std::string> header) {
  ReportTable t;
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == "pass" || header[i].rfind("pass_", 0) == 0) t.pass_columns.push_back(i);
  t.header = std::move(header);
  return t;
}

// Cascade thresholds: the top row at 1 (or the configured v0), every row
// below at the adopted bound.
TriggerConfig trigger_for(const ExperimentSpec& spec, const GridPoint& p, const JordanSpec& js) {
  TriggerConfig tc;
  tc.sigma = p.sigma;
  tc.rho0 = p.rho0;
  tc.b = p.b;
  tc.nu = p.nu;
  tc.gamma = p.gamma;
  if (!spec.cascade.empty()) tc.cascade = {spec.cascade};
  if (!spec.v0.empty()) {
    tc.v0 = Eigen::Map<const Eigen::VectorXd>(spec.v0.data(), static_cast<Eigen::Index>(spec.v0.size()));
    return tc;
  }
  tc.v0 = Eigen::VectorXd::Ones(js.n());
  for (int i = 1; i < js.n(); ++i) {
    const auto report = validate_cascade(js, tc);
    tc.v0[i] = report.coords[static_cast<std::size_t>(i)].adopted;
  }
  return tc;
}

struct EtAggregate {
  int runs = 0;
  std::int64_t sends = 0;
  std::int64_t receptions = 0;
  std::int64_t escalations = 0;
  double max_rs = 0.0;
  double min_rc = kInf;
  double max_residual = -kInf;
  double min_interevent = kInf;
  double min_bc_margin = kInf;
};

// Seeded event-triggered runs at one grid point and schedule.
EtAggregate run_et_batch(const ExperimentSpec& spec, const GridPoint& p, const std::string& schedule,
                         const std::function<double(const TriggerConfig&, double, int)>& envelope) {
  const JordanSpec js({{p.lambda, p.order}});
  const TriggerConfig tc = trigger_for(spec, p, js);
  const double v0_norm = tc.v0.norm();
  // Effective ||z(0)|| certified by the envelope.
  const double z0_eff = v0_norm * std::exp((p.lambda + p.sigma) * p.gamma);
  EtAggregate agg;
  for (int s = 0; s < spec.seeds; ++s) {
    const std::uint64_t seed = spec.seed_base + static_cast<std::uint64_t>(s);
    SimConfig c;
    c.spec = js;
    c.gain.kappa = spec.kappa;
    c.policy = tc;
    c.channel.layout = spec.layout;
    c.delays = DelaySchedule::from_name(schedule, p.gamma, seed, p.gamma);
    c.L = v0_norm;
    c.x0 = {seeded_initial_state(seed, tc.v0), 0.0};
    c.xhat0 = {Eigen::VectorXd::Zero(js.n()), 0.0};
    c.horizon = spec.horizon;
    c.dt = spec.dt;
    c.tail_fraction = spec.tail_fraction;
    c.integrate_state = false;
    const SimResult r = run(c);
    ++agg.runs;
    agg.sends += r.metrics.sends;
    agg.receptions += r.metrics.receptions;
    agg.escalations += r.metrics.escalations;
    agg.max_rs = std::max(agg.max_rs, r.metrics.rate_s);
    agg.min_rc = std::min(agg.min_rc, r.metrics.rate_c);
    agg.min_interevent = std::min(agg.min_interevent, r.metrics.min_interevent);
    agg.max_residual =
        std::max(agg.max_residual, envelope_check(r.trace, [&](double t, int f) { return envelope(tc, t, f); }));
    double bc = 0.0;
    for (const auto& e : r.trace.events) {
      if (e.kind != EventKind::kReceive) continue;
      bc += e.bits;
      agg.min_bc_margin = std::min(agg.min_bc_margin, bc - bc_lower_bound(js, p.sigma, v0_norm, z0_eff, e.t));
    }
  }
  return agg;
}

ReportTable et_sufficiency(const ExperimentSpec& spec, int workers) {
  auto table = make_table({"lambda", "sigma", "rho0", "b", "gamma", "schedule", "runs", "sends", "et_sufficient",
                           "max_rs", "max_residual", "min_interevent", "interevent_bound", "min_rc", "access_rate",
                           "min_bc_margin", "pass_envelope", "pass_rate", "pass_interevent", "pass_access"});
  struct Job {
    GridPoint p;
    std::string schedule;
  };
  std::vector<Job> jobs;
  for (const auto& p : expand(spec.grid))
    for (const auto& s : spec.schedules) jobs.push_back({p, s});
  table.rows.resize(jobs.size());
  parallel_for(jobs.size(), workers, [&](std::size_t i) {
    const auto& [p, schedule] = jobs[i];
    const double E = std::exp((p.lambda + p.sigma) * p.gamma);
    const auto agg = run_et_batch(spec, p, schedule, [&](const TriggerConfig& tc, double t, int f) {
      return tc.threshold(f, t) * E;
    });
    const double suff = et_sufficient_rate(p.lambda, p.sigma, p.gamma, p.rho0, p.b);
    const double ie = et_min_interevent(p.lambda, p.sigma, p.gamma, p.rho0);
    const double access = (p.lambda + p.sigma) / kLn2;
    const double min_rc = std::isfinite(agg.min_rc) ? agg.min_rc : 0.0;
    table.rows[i] = {num(p.lambda), num(p.sigma), num(p.rho0), num(p.b), num(p.gamma), schedule, std::to_string(agg.runs),
                     std::to_string(agg.sends), num(suff), num(agg.max_rs), num(agg.max_residual),
                     num(agg.min_interevent), num(ie), num(min_rc), num(access), num(agg.min_bc_margin),
                     pass(agg.max_residual <= 1e-6), pass(agg.max_rs <= 1.05 * suff),
                     pass(agg.min_interevent >= ie - 1e-6), pass(agg.min_bc_margin >= -8.0 && min_rc >= access - 0.05)};
  });
  return table;
}

ReportTable vector_cascade(const ExperimentSpec& spec, int workers) {
  auto table = make_table({"lambda", "order", "sigma", "rho0", "b", "gamma", "schedule", "runs", "v0", "max_residual",
                           "receptions", "escalations", "escalation_fraction", "max_rs", "vector_sufficient",
                           "pass_envelope", "pass_escalation"});
  struct Job {
    GridPoint p;
    std::string schedule;
  };
  std::vector<Job> jobs;
  for (const auto& p : expand(spec.grid))
    for (const auto& s : spec.schedules) jobs.push_back({p, s});
  table.rows.resize(jobs.size());
  parallel_for(jobs.size(), workers, [&](std::size_t i) {
    const auto& [p, schedule] = jobs[i];
    const JordanSpec js({{p.lambda, p.order}});
    const TriggerConfig tc = trigger_for(spec, p, js);
    const double E = std::exp((p.lambda + p.sigma) * p.gamma);
    const auto agg = run_et_batch(spec, p, schedule, [&](const TriggerConfig& c, double t, int f) {
      return c.v0[f] * ((c.rho0 - c.rho(js, f)) + E) * std::exp(-c.sigma * t);
    });
    std::string v0s;
    for (int f = 0; f < tc.v0.size(); ++f) v0s += (f ? ";" : "") + num(tc.v0[f]);
    const double frac = agg.receptions ? static_cast<double>(agg.escalations) / static_cast<double>(agg.receptions) : 0.0;
    const double suff = vector_sufficient_rate(js, p.sigma, p.gamma, tc.cascade, p.rho0, p.b);
    table.rows[i] = {num(p.lambda), std::to_string(p.order), num(p.sigma), num(p.rho0), num(p.b), num(p.gamma), schedule,
                     std::to_string(agg.runs), v0s, num(agg.max_residual), std::to_string(agg.receptions),
                     std::to_string(agg.escalations), num(frac), num(agg.max_rs), num(suff),
                     pass(agg.max_residual <= 1e-6), pass(frac < 0.05)};
  });
  return table;
}

SimConfig tt_config(const ExperimentSpec& spec, const JordanSpec& js, const TTConfig& tt, ChannelSemantics sem,
                    double gamma, double volume_shift) {
  SimConfig c;
  c.spec = js;
  c.gain.kappa = spec.kappa;
  c.policy = tt;
  c.channel.semantics = sem;
  c.delays = DelaySchedule::all_zero(gamma);
  c.L = spec.L;
  // On the box corner: |z_i(0)| = L / sqrt(n), ||z(0)|| = L.
  c.x0 = {Eigen::VectorXd::Constant(js.n(), spec.L / std::sqrt(static_cast<double>(js.n()))), 0.0};
  c.xhat0 = {Eigen::VectorXd::Zero(js.n()), 0.0};
  c.horizon = spec.horizon;
  c.dt = spec.dt;
  c.tail_fraction = spec.tail_fraction;
  c.integrate_state = false;
  c.record_grid = false;
  c.volume_shift = volume_shift;
  return c;
}

ReportTable tt_stopwait(const ExperimentSpec& spec, int workers) {
  auto table = make_table({"lambda", "order", "sigma", "gamma", "period", "scenario", "bits", "schedule", "stopwait_bound",
                           "rs", "rs_minus_bound", "log_volume_growth", "max_send_residual", "pass"});
  const auto points = expand(spec.grid);
  table.rows.resize(points.size() * 2);
  parallel_for(table.rows.size(), workers, [&](std::size_t i) {
    const GridPoint& p = points[i / 2];
    const bool sized = i % 2 == 0;
    const JordanSpec js({{p.lambda, p.order}});
    TTConfig tt;
    tt.period = p.period;
    tt.variant = TTVariant::kStopAndWait;
    tt.sigma = p.sigma;
    const int g = tt_packet_size(js, tt, p.gamma);
    tt.bits = sized ? g : std::max(1, static_cast<int>(std::floor(spec.bits_scale * g)));
    SimConfig c = tt_config(spec, js, tt, ChannelSemantics::kStopAndWait, p.gamma, p.sigma);
    AdversaryGoal goal;
    goal.objective = sized ? AdversaryObjective::kRate : AdversaryObjective::kTerminalLogVolume;
    const auto adv = adversary_search(c, goal, spec.adversary);
    c.delays = adv.schedule;
    const SimResult r = run(c);
    const double bound = tt_necessary_rate_stopwait(js, p.sigma, p.gamma, p.period);
    const double growth = r.trace.terminal_log_volume - js.n() * std::log(2.0 * spec.L);
    double send_residual = -kInf;
    for (const auto& e : r.trace.events)
      if (e.kind == EventKind::kSend) send_residual = std::max(send_residual, e.z_abs - spec.L * std::exp(-p.sigma * e.t));
    const bool ok = sized ? std::abs(r.metrics.rate_s - bound) <= 1.0 / p.period
                          : growth >= spec.volume_growth_threshold;
    table.rows[i] = {num(p.lambda), std::to_string(p.order), num(p.sigma), num(p.gamma), num(p.period),
                     sized ? "sized-rate-adversary" : "undersized-volume-adversary", std::to_string(*tt.bits),
                     adv.schedule.name(), num(bound), num(r.metrics.rate_s), num(r.metrics.rate_s - bound), num(growth),
                     num(send_residual), pass(ok)};
  });
  return table;
}

ReportTable tt_pipelined(const ExperimentSpec& spec, int workers) {
  auto table = make_table({"lambda", "order", "period", "gamma", "bits", "rate", "pipelined_bound", "regime",
                           "balance_predicted", "balance_min", "balance_max", "cycles", "log_volume_growth", "pass"});
  const auto points = expand(spec.grid);
  table.rows.resize(points.size());
  parallel_for(points.size(), workers, [&](std::size_t i) {
    const GridPoint& p = points[i];
    const JordanSpec js({{p.lambda, p.order}});
    const double gamma = p.gamma_over_period * p.period;
    TTConfig tt;
    tt.period = p.period;
    tt.variant = TTVariant::kPeriodic;
    tt.sigma = 0.0;
    tt.bits = p.bits;
    SimConfig c = tt_config(spec, js, tt, ChannelSemantics::kIdleBoundedQueueing, gamma, 0.0);
    c.delays = DelaySchedule::all_max(gamma);
    const SimResult r = run(c);
    const double rate = p.bits / p.period;
    const double bound = tt_necessary_rate_pipelined(js, gamma, p.period);
    // Receptions are spaced by gamma once the queue builds (gamma >= T).
    const double predicted = js.trace() * std::max(gamma, p.period) - p.bits * kLn2;
    double lo = kInf;
    double hi = -kInf;
    int cycles = 0;
    double prev = std::numeric_limits<double>::quiet_NaN();
    for (const auto& e : r.trace.events) {
      if (e.kind != EventKind::kReceive) continue;
      if (!std::isnan(prev)) {
        lo = std::min(lo, e.log_volume - prev);
        hi = std::max(hi, e.log_volume - prev);
        ++cycles;
      }
      prev = e.log_volume;
    }
    const bool marginal = std::abs(rate - bound) <= 1e-9 * bound;
    const std::string regime = marginal ? "marginal" : (rate < bound ? "divergent" : "sufficient");
    bool ok = cycles > 0 && std::abs(lo - predicted) <= 1e-9 && std::abs(hi - predicted) <= 1e-9;
    if (regime == "divergent") ok = ok && lo > 0.0;
    if (regime == "marginal") ok = ok && std::abs(lo) <= 1e-9 && std::abs(hi) <= 1e-9;
    table.rows[i] = {num(p.lambda), std::to_string(p.order), num(p.period), num(gamma), std::to_string(p.bits), num(rate),
                     num(bound), regime, num(predicted), num(lo), num(hi), std::to_string(cycles),
                     num(r.trace.terminal_log_volume - js.n() * std::log(2.0 * spec.L)), pass(ok)};
  });
  return table;
}

ReportTable fig2_grid(const ExperimentSpec& spec) {
  ReportTable out;
  for (double lambda : spec.grid.lambda)
    for (double sigma : spec.grid.sigma)
      for (double rho0 : spec.grid.rho0) {
        ReportTable t = fig2_table(lambda, sigma, rho0, spec.grid.gamma);
        if (out.header.empty()) {
          out.header = t.header;
          out.pass_columns = t.pass_columns;
        }
        for (auto& row : t.rows) out.rows.push_back(std::move(row));
      }
  return out;
}

ReportTable bound_grid(const ExperimentSpec& spec) {
  ReportTable out;
  for (const auto& p : expand(spec.grid)) {
    RateBoundInputs in;
    in.spec = JordanSpec({{p.lambda, p.order}});
    in.sigma = p.sigma;
    in.gamma = p.gamma;
    in.rho0 = p.rho0;
    in.nu = p.nu;
    in.b = p.b;
    in.period = p.period;
    if (!spec.cascade.empty()) in.cascade = {spec.cascade};
    ReportTable t = bounds_table(in);
    if (out.header.empty()) out.header = t.header;
    out.rows.push_back(std::move(t.rows.front()));
  }
  return out;
}

}  // namespace

std::string_view to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::kFig2Curves: return "fig2-curves";
    case ExperimentKind::kEtSufficiency: return "et-sufficiency";
    case ExperimentKind::kTtStopwaitNecessity: return "tt-stopwait-necessity";
    case ExperimentKind::kTtPipelinedNecessity: return "tt-pipelined-necessity";
    case ExperimentKind::kVectorCascade: return "vector-cascade";
    case ExperimentKind::kBoundTables: return "bound-tables";
  }
  return "unknown";
}

std::optional<ExperimentKind> parse_kind(std::string_view name) {
  for (auto k : {ExperimentKind::kFig2Curves, ExperimentKind::kEtSufficiency, ExperimentKind::kTtStopwaitNecessity,
                 ExperimentKind::kTtPipelinedNecessity, ExperimentKind::kVectorCascade, ExperimentKind::kBoundTables})
    if (to_string(k) == name) return k;
  return std::nullopt;
}

std::vector<GridPoint> expand(const ParameterGrid& g) {
  std::vector<GridPoint> out;
  for (double lambda : g.lambda)
    for (double order : g.order)
      for (double sigma : g.sigma)
        for (double rho0 : g.rho0)
          for (double b : g.b)
            for (double nu : g.nu)
              for (double period : g.period)
                for (double bits : g.bits)
                  for (double gop : g.gamma_over_period)
                    for (double gamma : g.gamma)
                      out.push_back({lambda, static_cast<int>(order), sigma, rho0, b, nu, period, static_cast<int>(bits),
                                     gop, gamma});
  return out;
}

bool ReportTable::all_pass() const { return failures() == 0; }

std::size_t ReportTable::failures() const {
  std::size_t n = 0;
  for (const auto& row : rows)
    for (auto c : pass_columns)
      if (row.at(c) != "pass") ++n;
  return n;
}

ReportTable run_experiment(const ExperimentSpec& spec, int workers) {
  switch (spec.kind) {
    case ExperimentKind::kFig2Curves: return fig2_grid(spec);
    case ExperimentKind::kEtSufficiency: return et_sufficiency(spec, workers);
    case ExperimentKind::kTtStopwaitNecessity: return tt_stopwait(spec, workers);
    case ExperimentKind::kTtPipelinedNecessity: return tt_pipelined(spec, workers);
    case ExperimentKind::kVectorCascade: return vector_cascade(spec, workers);
    case ExperimentKind::kBoundTables: return bound_grid(spec);
  }
  return {};
}

void write_report(std::ostream& os, const ReportTable& table) {
  write_csv_row(os, table.header);
  for (const auto& row : table.rows) write_csv_row(os, row);
}

ReportTable fig2_table(double lambda, double sigma, double rho0, const std::vector<double>& gammas) {
  auto table = make_table({"lambda", "sigma", "rho0", "gamma", "tt_stopwait", "et_approx", "access_rate",
                           "free_delay", "critical_delay", "tt_steps", "pass_tt_staircase", "pass_et_zero"});
  const JordanSpec js = JordanSpec::scalar(lambda);
  const double T = kLn2 / lambda;
  const double access = (lambda + sigma) / kLn2;
  const double gamma0 = et_free_delay(lambda, sigma, rho0);
  for (double gamma : gammas) {
    const double tt = tt_necessary_rate_stopwait(js, sigma, gamma, T);
    const double et = et_necessary_rate_approx(lambda, sigma, gamma, rho0);
    const double steps = std::floor(gamma / T) + 1.0;
    const bool stair = std::abs(tt - access * steps) <= 1e-12 * tt;
    const bool et_zero = gamma > gamma0 || et == 0.0;
    table.rows.push_back({num(lambda), num(sigma), num(rho0), num(gamma), num(tt), num(et), num(access), num(gamma0),
                          num(critical_delay(lambda)), num(steps), pass(stair), pass(et_zero)});
  }
  return table;
}

ReportTable bounds_table(const RateBoundInputs& in) {
  std::vector<std::string> header{"n", "trace", "sigma", "gamma", "rho0", "nu", "b", "period"};
  for (auto& h : report_csv_header()) header.push_back(h);
  auto table = make_table(header);
  std::vector<std::string> row{std::to_string(in.spec.n()), num(in.spec.trace()), num(in.sigma), num(in.gamma),
                               num(in.rho0), num(in.nu), num(in.b), num(in.period)};
  for (double v : report_csv_values(evaluate_bounds(in))) row.push_back(num(v));
  table.rows.push_back(std::move(row));
  return table;
}

Eigen::VectorXd seeded_initial_state(std::uint64_t seed, const Eigen::VectorXd& scale) {
  std::mt19937_64 rng(seed * 0x9E3779B97F4A7C15ULL + 1);
  Eigen::VectorXd x(scale.size());
  for (Eigen::Index f = 0; f < scale.size(); ++f) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;  // [0, 1)
    x[f] = (2.0 * u - 1.0) * scale[f];
  }
  return x;
}

int default_workers() {
  if (const char* env = std::getenv("TRIGRATE_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<int>(v);
  }
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

}  // namespace trigrate
