#include "trigrate/sim.hpp"

#include <algorithm>

namespace trigrate {

namespace {

std::vector<double> pattern_values(const DelaySchedule& s, int slots) {
  std::vector<double> v(static_cast<std::size_t>(slots));
  for (int k = 0; k < slots; ++k) v[static_cast<std::size_t>(k)] = s.delay(k, 0);
  return v;
}

}  // namespace

AdversaryResult adversary_search(const SimConfig& cfg, const AdversaryGoal& goal, const AdversaryBudget& budget) {
  const double gamma = cfg.delays.gamma();
  AdversaryResult best;
  best.schedule = DelaySchedule::all_zero(gamma);

  auto score = [&](const DelaySchedule& s) {
    SimConfig c = cfg;
    c.delays = s;
    if (goal.objective == AdversaryObjective::kTerminalLogVolume && !c.volume_shift) c.volume_shift = 0.0;
    if (goal.objective != AdversaryObjective::kEnvelopeResidual) c.record_grid = false;
    const SimResult r = run(c);
    ++best.evaluations;
    switch (goal.objective) {
      case AdversaryObjective::kTerminalLogVolume: return r.trace.terminal_log_volume;
      case AdversaryObjective::kEnvelopeResidual: return envelope_check(r.trace, goal.envelope);
      case AdversaryObjective::kRate: return r.metrics.rate_s;
    }
    return 0.0;
  };

  best.value = score(best.schedule);
  if (gamma == 0.0) return best;
  for (const auto& s : {DelaySchedule::all_max(gamma), DelaySchedule::alternating(gamma)}) {
    const double v = score(s);
    if (v > best.value) {
      best.value = v;
      best.schedule = s;
    }
  }

  const int slots = std::max(1, budget.slots);
  const int K = std::max(2, budget.grid_points);
  std::vector<double> current = pattern_values(best.schedule, slots);
  for (int s = 0; s < slots; ++s) {
    for (int g = 0; g < K; ++g) {
      if (best.evaluations >= budget.max_evaluations) return best;
      const double value = gamma * g / (K - 1);
      if (value == current[static_cast<std::size_t>(s)]) continue;
      std::vector<double> trial = current;
      trial[static_cast<std::size_t>(s)] = value;
      auto sched = DelaySchedule::explicit_list(trial, gamma);
      const double v = score(sched);
      if (v > best.value) {
        best.value = v;
        best.schedule = std::move(sched);
        current = std::move(trial);
      }
    }
  }
  return best;
}

}  // namespace trigrate
