#include "trigrate/csv.hpp"
#include "trigrate/experiments.hpp"

#include <json.hpp>

#include <cmath>
#include <map>
#include <set>
#include <sstream>

namespace trigrate {

namespace {

using nlohmann::json;

using Axis = std::vector<double> ParameterGrid::*;

const std::map<std::string, Axis>& axes() {
  static const std::map<std::string, Axis> table{
      {"lambda", &ParameterGrid::lambda}, {"order", &ParameterGrid::order},   {"sigma", &ParameterGrid::sigma},
      {"rho0", &ParameterGrid::rho0},     {"b", &ParameterGrid::b},           {"nu", &ParameterGrid::nu},
      {"period", &ParameterGrid::period}, {"bits", &ParameterGrid::bits},     {"gamma_over_period", &ParameterGrid::gamma_over_period},
      {"gamma", &ParameterGrid::gamma}};
  return table;
}

struct KindRule {
  std::set<std::string> allowed;
  std::set<std::string> required;
};

KindRule rule(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::kFig2Curves: return {{"lambda", "sigma", "rho0", "gamma"}, {"gamma"}};
    case ExperimentKind::kEtSufficiency: return {{"lambda", "sigma", "rho0", "b", "gamma"}, {"gamma"}};
    case ExperimentKind::kTtStopwaitNecessity: return {{"lambda", "order", "sigma", "period", "gamma"}, {"period", "gamma"}};
    case ExperimentKind::kTtPipelinedNecessity:
      return {{"lambda", "order", "period", "bits", "gamma_over_period"}, {"period", "bits"}};
    case ExperimentKind::kVectorCascade: return {{"lambda", "order", "sigma", "rho0", "b", "gamma"}, {"gamma"}};
    case ExperimentKind::kBoundTables:
      return {{"lambda", "order", "sigma", "rho0", "nu", "b", "period", "gamma"}, {"gamma"}};
  }
  return {};
}

const std::set<std::string> kTopKeys{"name",    "kind",     "output", "grid",     "schedules",  "seeds",
                                     "seed_base", "horizon", "dt",     "tail_fraction", "L",    "kappa",
                                     "v0",      "cascade",  "bits_scale", "volume_growth_threshold", "adversary",
                                     "channel"};

class Reader {
 public:
  std::vector<std::string> errors;

  void unknown_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
    for (const auto& [key, _] : obj.items())
      if (!allowed.count(key)) errors.push_back(where + key + ": unknown key");
  }

  bool number(const json& obj, const char* key, double& out, const std::string& where = "") {
    if (!obj.contains(key)) return false;
    const auto& v = obj.at(key);
    if (!v.is_number()) {
      errors.push_back(where + key + ": expected a number");
      return false;
    }
    out = v.get<double>();
    if (!std::isfinite(out)) {
      errors.push_back(where + key + ": must be finite");
      return false;
    }
    return true;
  }

  void positive(const json& obj, const char* key, double& out, const std::string& where = "") {
    if (number(obj, key, out, where) && !(out > 0.0)) errors.push_back(where + key + ": must be > 0");
  }

  bool integer(const json& obj, const char* key, std::int64_t& out, const std::string& where = "") {
    if (!obj.contains(key)) return false;
    const auto& v = obj.at(key);
    if (!v.is_number_integer()) {
      errors.push_back(where + key + ": expected an integer");
      return false;
    }
    out = v.get<std::int64_t>();
    return true;
  }

  bool string(const json& obj, const char* key, std::string& out) {
    if (!obj.contains(key)) return false;
    if (!obj.at(key).is_string()) {
      errors.push_back(std::string(key) + ": expected a string");
      return false;
    }
    out = obj.at(key).get<std::string>();
    return true;
  }

  bool numbers(const json& v, const std::string& field, std::vector<double>& out) {
    std::vector<double> vals;
    if (v.is_number()) {
      vals.push_back(v.get<double>());
    } else if (v.is_array()) {
      for (const auto& e : v) {
        if (!e.is_number()) {
          errors.push_back(field + ": expected numbers");
          return false;
        }
        vals.push_back(e.get<double>());
      }
    } else {
      errors.push_back(field + ": expected a number or an array of numbers");
      return false;
    }
    if (vals.empty()) {
      errors.push_back(field + ": grid must be nonempty");
      return false;
    }
    out = std::move(vals);
    return true;
  }
};

void check_axis(Reader& r, const std::string& name, const std::vector<double>& vals) {
  const std::string f = "grid." + name;
  for (double v : vals) {
    bool ok = std::isfinite(v);
    if (name == "gamma") ok = ok && v >= 0.0;
    else if (name == "rho0") ok = ok && v > 0.0 && v < 1.0;
    else if (name == "b" || name == "nu") ok = ok && v >= 1.0;
    else if (name == "order" || name == "bits") ok = ok && v >= 1.0 && v == std::floor(v);
    else ok = ok && v > 0.0;
    if (!ok) {
      std::ostringstream os;
      os << f << ": invalid value " << v;
      if (name == "gamma") os << " (must be >= 0)";
      else if (name == "rho0") os << " (must be in (0, 1))";
      else if (name == "b" || name == "nu") os << " (must be >= 1)";
      else if (name == "order" || name == "bits") os << " (must be a positive integer)";
      else os << " (must be > 0)";
      r.errors.push_back(os.str());
    }
  }
}

// Event-triggered kinds: cascade and v0 consistency for every grid point.
void check_cascade(Reader& r, const ExperimentSpec& spec) {
  if (spec.kind != ExperimentKind::kVectorCascade && spec.kind != ExperimentKind::kEtSufficiency) return;
  const double max_order = *std::max_element(spec.grid.order.begin(), spec.grid.order.end());
  if (spec.kind == ExperimentKind::kEtSufficiency && max_order > 1.0) return;
  for (const auto& p : expand(spec.grid)) {
    if (!spec.cascade.empty() && static_cast<int>(spec.cascade.size()) != p.order) {
      r.errors.push_back("cascade: expected " + std::to_string(p.order) + " entries for order " + std::to_string(p.order));
      return;
    }
    if (!spec.v0.empty() && static_cast<int>(spec.v0.size()) != p.order) {
      r.errors.push_back("v0: expected " + std::to_string(p.order) + " entries for order " + std::to_string(p.order));
      return;
    }
    if (spec.cascade.empty() && p.order > 1) {
      r.errors.push_back("cascade: required for order > 1");
      return;
    }
    if (spec.v0.empty()) continue;
    const JordanSpec js({{p.lambda, p.order}});
    TriggerConfig tc;
    tc.sigma = p.sigma;
    tc.rho0 = p.rho0;
    tc.gamma = p.gamma;
    tc.b = p.b;
    tc.v0 = Eigen::Map<const Eigen::VectorXd>(spec.v0.data(), static_cast<Eigen::Index>(spec.v0.size()));
    if (!spec.cascade.empty()) tc.cascade = {spec.cascade};
    try {
      validate(js, tc);
    } catch (const ConfigError& e) {
      r.errors.push_back(e.what());
      return;
    }
    if (auto bad = validate_cascade(js, tc).first_violation()) {
      std::ostringstream os;
      os << "v0[" << bad->flat << "]: " << format_number(tc.v0[bad->flat]) << " violates the cascade bound "
         << format_number(bad->adopted) << " at gamma = " << format_number(p.gamma);
      r.errors.push_back(os.str());
      return;
    }
  }
}

}  // namespace

SpecError::SpecError(std::vector<std::string> errors)
    : std::invalid_argument([&] {
        std::string msg = "invalid experiment config:";
        for (const auto& e : errors) msg += "\n  " + e;
        return msg;
      }()),
      errors_(std::move(errors)) {}

ExperimentSpec parse_config(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end(), nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw SpecError({std::string("syntax: ") + e.what()});
  }
  if (!doc.is_object()) throw SpecError({"document: expected an object"});

  Reader r;
  ExperimentSpec spec;
  r.unknown_keys(doc, kTopKeys, "");
  r.string(doc, "name", spec.name);
  r.string(doc, "output", spec.output);

  std::string kind;
  bool kind_ok = false;
  if (!r.string(doc, "kind", kind)) {
    if (!doc.contains("kind")) r.errors.push_back("kind: required");
  } else if (auto k = parse_kind(kind)) {
    spec.kind = *k;
    kind_ok = true;
  } else {
    r.errors.push_back("kind: unknown experiment kind '" + kind + "'");
  }

  std::set<std::string> given;
  if (doc.contains("grid")) {
    const auto& g = doc.at("grid");
    if (!g.is_object()) {
      r.errors.push_back("grid: expected an object");
    } else {
      for (const auto& [key, val] : g.items()) {
        auto it = axes().find(key);
        if (it == axes().end()) {
          r.errors.push_back("grid." + key + ": unknown key");
          continue;
        }
        if (kind_ok && !rule(spec.kind).allowed.count(key)) {
          r.errors.push_back("grid." + key + ": not a parameter of kind " + kind);
          continue;
        }
        if (r.numbers(val, "grid." + key, spec.grid.*(it->second))) {
          given.insert(key);
          check_axis(r, key, spec.grid.*(it->second));
        }
      }
    }
  }
  if (kind_ok) {
    for (const auto& req : rule(spec.kind).required)
      if (!given.count(req)) r.errors.push_back("grid." + req + ": required for kind " + kind);
  }

  if (doc.contains("schedules")) {
    const auto& s = doc.at("schedules");
    spec.schedules.clear();
    if (!s.is_array() || s.empty()) {
      r.errors.push_back("schedules: expected a nonempty array of names");
    } else {
      for (const auto& e : s) {
        const std::string name = e.is_string() ? e.get<std::string>() : "";
        try {
          (void)DelaySchedule::from_name(name, 1.0, 0);
          spec.schedules.push_back(name);
        } catch (const std::exception&) {
          r.errors.push_back("schedules: unknown schedule '" + (e.is_string() ? name : e.dump()) + "'");
        }
      }
    }
  }

  std::int64_t seeds = spec.seeds;
  if (r.integer(doc, "seeds", seeds) && seeds < 1) r.errors.push_back("seeds: must be >= 1");
  spec.seeds = static_cast<int>(seeds);
  std::int64_t seed_base = 0;
  if (r.integer(doc, "seed_base", seed_base)) {
    if (seed_base < 0) r.errors.push_back("seed_base: must be >= 0");
    spec.seed_base = static_cast<std::uint64_t>(seed_base);
  }
  r.positive(doc, "horizon", spec.horizon);
  r.positive(doc, "dt", spec.dt);
  if (r.number(doc, "tail_fraction", spec.tail_fraction) && !(spec.tail_fraction > 0.0 && spec.tail_fraction <= 1.0))
    r.errors.push_back("tail_fraction: must be in (0, 1]");
  r.positive(doc, "L", spec.L);
  r.positive(doc, "kappa", spec.kappa);
  r.positive(doc, "bits_scale", spec.bits_scale);
  r.number(doc, "volume_growth_threshold", spec.volume_growth_threshold);
  if (doc.contains("v0")) {
    if (r.numbers(doc.at("v0"), "v0", spec.v0))
      for (double v : spec.v0)
        if (!(v > 0.0)) r.errors.push_back("v0: entries must be > 0");
  }
  if (doc.contains("cascade")) {
    if (r.numbers(doc.at("cascade"), "cascade", spec.cascade))
      for (double v : spec.cascade)
        if (!(v > 0.0 && v < 1.0)) r.errors.push_back("cascade: entries must be in (0, 1)");
  }
  if (doc.contains("adversary")) {
    const auto& a = doc.at("adversary");
    if (!a.is_object()) {
      r.errors.push_back("adversary: expected an object");
    } else {
      r.unknown_keys(a, {"slots", "grid_points", "max_evaluations"}, "adversary.");
      std::int64_t v = 0;
      if (r.integer(a, "slots", v, "adversary.")) spec.adversary.slots = static_cast<int>(v);
      if (r.integer(a, "grid_points", v, "adversary.")) spec.adversary.grid_points = static_cast<int>(v);
      if (r.integer(a, "max_evaluations", v, "adversary.")) spec.adversary.max_evaluations = static_cast<int>(v);
      if (spec.adversary.slots < 1) r.errors.push_back("adversary.slots: must be >= 1");
      if (spec.adversary.grid_points < 2) r.errors.push_back("adversary.grid_points: must be >= 2");
      if (spec.adversary.max_evaluations < 1) r.errors.push_back("adversary.max_evaluations: must be >= 1");
    }
  }
  std::string channel;
  if (r.string(doc, "channel", channel)) {
    if (channel == "parallel") spec.layout = ChannelLayout::kParallel;
    else if (channel == "shared") spec.layout = ChannelLayout::kSharedWithHeader;
    else r.errors.push_back("channel: expected 'parallel' or 'shared'");
  }

  if (r.errors.empty() && kind_ok) check_cascade(r, spec);
  if (!r.errors.empty()) throw SpecError(std::move(r.errors));
  return spec;
}

}  // namespace trigrate
