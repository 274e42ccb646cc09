#include "trigrate/policies.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>

namespace trigrate {

double TriggerConfig::rho(const JordanSpec& spec, int flat) const {
  const CoordId c = spec.coord(flat);
  const auto j = static_cast<std::size_t>(c.block);
  if (j < cascade.size() && !cascade[j].empty()) return cascade[j].at(static_cast<std::size_t>(c.index));
  return rho0;
}

double TriggerConfig::threshold(int flat, double t) const { return v0[flat] * std::exp(-sigma * t); }

void validate(const JordanSpec& spec, const TriggerConfig& cfg) {
  std::vector<std::string> errors;
  if (!(cfg.sigma > 0.0)) errors.push_back("sigma must be > 0");
  if (!(cfg.rho0 > 0.0 && cfg.rho0 < 1.0)) errors.push_back("rho0 must lie in (0, 1)");
  if (!(cfg.nu >= 1.0)) errors.push_back("nu must be >= 1");
  if (!(cfg.b > 1.0)) errors.push_back("b must be > 1");
  if (!(cfg.gamma >= 0.0) || !std::isfinite(cfg.gamma)) errors.push_back("gamma must be >= 0");
  if (cfg.v0.size() != spec.n()) {
    errors.push_back("v0 must have " + std::to_string(spec.n()) + " entries");
  } else {
    for (int f = 0; f < spec.n(); ++f)
      if (!(cfg.v0[f] > 0.0)) errors.push_back("v0[" + std::to_string(f) + "] must be > 0");
  }
  if (!cfg.cascade.empty() && static_cast<int>(cfg.cascade.size()) != spec.q())
    errors.push_back("cascade must have one list per Jordan block");
  for (int j = 0; j < spec.q(); ++j) {
    const int d = spec.block(j).order;
    const bool given = static_cast<std::size_t>(j) < cfg.cascade.size() && !cfg.cascade[static_cast<std::size_t>(j)].empty();
    if (!given) {
      if (d > 1) errors.push_back("cascade for block " + std::to_string(j) + " is required (order > 1)");
      continue;
    }
    const auto& c = cfg.cascade[static_cast<std::size_t>(j)];
    if (static_cast<int>(c.size()) != d) {
      errors.push_back("cascade for block " + std::to_string(j) + " must have " + std::to_string(d) + " entries");
      continue;
    }
    if (!(c.front() > 0.0)) errors.push_back("cascade for block " + std::to_string(j) + " must start above 0");
    for (std::size_t i = 1; i < c.size(); ++i)
      if (!(c[i] > c[i - 1]))
        errors.push_back("cascade for block " + std::to_string(j) + " must be strictly increasing");
    if (c.back() != cfg.rho0) errors.push_back("cascade for block " + std::to_string(j) + " must end at rho0");
  }
  if (!errors.empty()) {
    std::ostringstream os;
    os << "invalid trigger configuration:";
    for (const auto& e : errors) os << "\n  " << e;
    throw ConfigError(os.str());
  }
}

std::optional<double> et_trigger_time(const JordanSpec& spec, const TriggerConfig& cfg, const StateVec& z, int flat,
                                      double t_limit, double scan_step) {
  const double t0 = z.time;
  const double zi = z.coords[flat];
  const double v_t0 = cfg.threshold(flat, t0);
  if (std::abs(zi) >= v_t0) return t0;
  if (!(t_limit > t0)) return std::nullopt;

  const CoordId c = spec.coord(flat);
  const auto& blk = spec.block(c.block);
  const double rate = blk.lambda + cfg.sigma;

  if (c.index == blk.order - 1) {
    if (zi == 0.0) return std::nullopt;
    const double t = t0 + (std::log(v_t0) - std::log(std::abs(zi))) / rate;
    if (t > t_limit) return std::nullopt;
    return t;
  }

  // Coupled row: z_i(t0 + s) = e^{lambda s} p(s); no crossing if p == 0.
  const int o = spec.offset(c.block);
  bool all_zero = true;
  for (int k = c.index; k < blk.order; ++k) all_zero = all_zero && z.coords[o + k] == 0.0;
  if (all_zero) return std::nullopt;

  auto excess = [&](double s) {
    return std::abs(propagate_coordinate(spec, z.coords, flat, s)) * std::exp(cfg.sigma * s) - v_t0;
  };
  const double span = t_limit - t0;
  double lo = 0.0;
  for (long k = 1;; ++k) {
    const double s = std::min(static_cast<double>(k) * scan_step, span);
    if (excess(s) >= 0.0) {
      double hi = s;
      while (hi - lo > 1e-9 * (1.0 + t0 + hi)) {
        const double mid = 0.5 * (lo + hi);
        if (excess(mid) >= 0.0)
          hi = mid;
        else
          lo = mid;
      }
      return t0 + hi;
    }
    if (s >= span) return std::nullopt;
    lo = s;
  }
}

CodecParams et_codec_params(double lambda, const TriggerConfig& cfg, double rho, int refinement) {
  if (!(lambda > 0.0)) throw std::invalid_argument("et_codec_params: lambda must be > 0");
  CodecParams p;
  p.refinement = refinement;
  const double rate = lambda + cfg.sigma;
  p.delta = std::log1p(rho * std::exp(-rate * cfg.gamma)) / (cfg.b * rate) / std::ldexp(1.0, refinement);
  if (cfg.gamma == 0.0) {
    p.cells = 1;
    p.bits = 1;
    return p;
  }
  p.cells = static_cast<std::int64_t>(std::ceil(cfg.gamma / p.delta)) + 1;
  p.bits = 1 + ceil_log2(p.cells);
  return p;
}

Bits et_encode(const CodecParams& codec, double t_s, int sign) {
  Bits out;
  out.reserve(static_cast<std::size_t>(codec.bits));
  out.push_back(sign < 0);
  if (codec.cells == 1) return out;
  const auto cell = static_cast<std::int64_t>(std::floor(t_s / codec.delta));
  const std::int64_t idx = cell % codec.cells;
  const int width = codec.bits - 1;
  for (int k = width - 1; k >= 0; --k) out.push_back(((idx >> k) & 1) != 0);
  return out;
}

EtDecoded et_decode(const TriggerConfig& cfg, const CodecParams& codec, const Bits& payload, double t_c, double lambda,
                    double v0_i) {
  if (static_cast<int>(payload.size()) != codec.bits)
    throw DecodeError("et_decode: payload has " + std::to_string(payload.size()) + " bits, codec expects " +
                          std::to_string(codec.bits),
                      t_c);
  EtDecoded out;
  out.sign = payload[0] ? -1 : 1;
  if (codec.cells == 1) {
    out.t_hat = t_c;
  } else {
    std::int64_t idx = 0;
    for (std::size_t k = 1; k < payload.size(); ++k) idx = (idx << 1) | (payload[k] ? 1 : 0);
    if (idx >= codec.cells) throw DecodeError("et_decode: cell index out of range", t_c);

    const double lo_t = t_c - cfg.gamma;
    const auto first = std::max<std::int64_t>(0, static_cast<std::int64_t>(std::floor(lo_t / codec.delta)) - 1);
    const auto last = static_cast<std::int64_t>(std::floor(t_c / codec.delta)) + 1;
    std::int64_t m = first + ((idx - first % codec.cells) % codec.cells + codec.cells) % codec.cells;
    double best_violation = std::numeric_limits<double>::infinity();
    std::int64_t best = -1;
    for (; m <= last; m += codec.cells) {
      const double lower = static_cast<double>(m) * codec.delta;
      const double upper = static_cast<double>(m + 1) * codec.delta;
      const double violation = std::max({0.0, lo_t - upper, lower - t_c});
      if (violation <= best_violation) {
        best_violation = violation;
        best = m;
      }
    }
    if (best < 0 || best_violation > 1e-9 * (1.0 + t_c))
      throw DecodeError("et_decode: no cell consistent with the delay bound at t_c=" + std::to_string(t_c), t_c);
    out.t_hat = static_cast<double>(best) * codec.delta;
  }
  out.z_bar = out.sign * v0_i * std::exp(-cfg.sigma * out.t_hat) * std::exp(lambda * (t_c - out.t_hat));
  return out;
}

StateVec jump_update(const StateVec& xhat, int flat, double z_bar) {
  StateVec out = xhat;
  out.coords[flat] += z_bar;
  return out;
}

double tt_next_send(const TTConfig& tt, double t_s, double delay) {
  if (tt.variant == TTVariant::kPeriodic) return t_s + tt.period;
  return t_s + (std::floor(delay / tt.period) + 1.0) * tt.period;
}

int tt_packet_size(const JordanSpec& spec, const TTConfig& tt, double gamma) {
  if (!(tt.period > 0.0)) throw std::invalid_argument("tt_packet_size: period must be > 0");
  const double periods = std::floor(gamma / tt.period) + 1.0;
  const double bits = (spec.trace() + spec.n() * tt.sigma) * periods * tt.period / std::numbers::ln2;
  return std::max(1, static_cast<int>(std::ceil(bits)));
}

std::vector<int> tt_split_bits(const JordanSpec& spec, double sigma, int bits) {
  const int n = spec.n();
  std::vector<double> weight(static_cast<std::size_t>(n));
  for (int f = 0; f < n; ++f) weight[static_cast<std::size_t>(f)] = spec.lambda_of(f) + sigma;
  const double total = std::accumulate(weight.begin(), weight.end(), 0.0);
  std::vector<int> out(static_cast<std::size_t>(n));
  std::vector<double> frac(static_cast<std::size_t>(n));
  int used = 0;
  for (std::size_t f = 0; f < out.size(); ++f) {
    const double share = bits * weight[f] / total;
    out[f] = static_cast<int>(std::floor(share));
    frac[f] = share - out[f];
    used += out[f];
  }
  std::vector<std::size_t> order(out.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return frac[a] > frac[b]; });
  for (std::size_t k = 0; used < bits; ++k, ++used) ++out[order[k % order.size()]];
  return out;
}

BoxQuantization tt_quantize(const Eigen::VectorXd& e, const Eigen::VectorXd& half_width, const std::vector<int>& bits) {
  BoxQuantization q;
  q.center = Eigen::VectorXd::Zero(e.size());
  q.half_width = half_width;
  for (Eigen::Index f = 0; f < e.size(); ++f) {
    const int m = bits[static_cast<std::size_t>(f)];
    if (m == 0) continue;
    const double w = half_width[f];
    const std::int64_t cells = std::int64_t{1} << m;
    auto idx = static_cast<std::int64_t>(std::floor((e[f] + w) / (2.0 * w) * static_cast<double>(cells)));
    idx = std::clamp<std::int64_t>(idx, 0, cells - 1);
    q.center[f] = -w + (static_cast<double>(idx) + 0.5) * 2.0 * w / static_cast<double>(cells);
    q.half_width[f] = w / static_cast<double>(cells);
    for (int k = m - 1; k >= 0; --k) q.payload.push_back(((idx >> k) & 1) != 0);
  }
  return q;
}

Eigen::VectorXd tt_dequantize(const Bits& payload, const Eigen::VectorXd& half_width, const std::vector<int>& bits) {
  Eigen::VectorXd center = Eigen::VectorXd::Zero(half_width.size());
  std::size_t pos = 0;
  for (Eigen::Index f = 0; f < half_width.size(); ++f) {
    const int m = bits[static_cast<std::size_t>(f)];
    if (m == 0) continue;
    std::int64_t idx = 0;
    for (int k = 0; k < m; ++k) idx = (idx << 1) | (payload.at(pos++) ? 1 : 0);
    const double w = half_width[f];
    const auto cells = static_cast<double>(std::int64_t{1} << m);
    center[f] = -w + (static_cast<double>(idx) + 0.5) * 2.0 * w / cells;
  }
  return center;
}

Eigen::VectorXd tt_propagate_box(const JordanSpec& spec, const Eigen::VectorXd& half_width, double s) {
  // e^{A s} has non-negative entries for s >= 0, so it maps the corner w to
  // the bounding corner.
  return propagate_error(spec, StateVec{half_width, 0.0}, s).coords;
}

bool CascadeReport::ok() const {
  return std::all_of(coords.begin(), coords.end(), [](const CascadeBound& c) { return c.satisfied; });
}

std::optional<CascadeBound> CascadeReport::first_violation() const {
  for (const auto& c : coords)
    if (!c.satisfied) return c;
  return std::nullopt;
}

CascadeReport validate_cascade(const JordanSpec& spec, const TriggerConfig& cfg) {
  CascadeReport report;
  const double inf = std::numeric_limits<double>::infinity();
  auto bound = [&](double v_prev, double rate, double margin) {
    if (margin <= 0.0) return 0.0;
    const double e = std::exp(rate * cfg.gamma);
    if (e - 1.0 <= 0.0) return inf;
    return v_prev * rate * margin / ((margin + e) * (e - 1.0));
  };
  for (int j = 0; j < spec.q(); ++j) {
    const auto& blk = spec.block(j);
    const double rate = blk.lambda + cfg.sigma;
    const int o = spec.offset(j);
    for (int i = 0; i < blk.order; ++i) {
      CascadeBound cb;
      cb.flat = o + i;
      if (i == 0) {
        cb.adopted = inf;
        cb.literal = inf;
      } else {
        const double v_prev = cfg.v0[o + i - 1];
        cb.adopted = bound(v_prev, rate, cfg.rho0 - cfg.rho(spec, o + i - 1));
        cb.literal = bound(v_prev, rate, cfg.rho0 - cfg.rho(spec, o + i));
      }
      cb.satisfied = cfg.v0[o + i] <= cb.adopted * (1.0 + 1e-12);
      report.coords.push_back(cb);
    }
  }
  return report;
}

}  // namespace trigrate
