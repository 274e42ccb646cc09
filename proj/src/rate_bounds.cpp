#include "trigrate/rate_bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace trigrate {

namespace {

constexpr double kLn2 = std::numbers::ln2;

// log2(ln(1 + rho e^{-r})), staying finite when e^{-r} underflows.
double log2_log1p_exp(double rho, double r) {
  const double ln_x = std::log(rho) - r;
  if (ln_x < -30.0) return ln_x / kLn2;
  return std::log2(std::log1p(std::exp(ln_x)));
}

// -ln(rho0 e^{-sigma gamma})
double contraction(double sigma, double gamma, double rho0) { return sigma * gamma - std::log(rho0); }

double scalar_sufficient(double lambda, double sigma, double gamma, double rho, double b) {
  if (gamma == 0.0) return 0.0;
  const double rate = lambda + sigma;
  const double bracket = 1.0 + std::log2(b * gamma * rate) - log2_log1p_exp(rho, rate * gamma);
  return rate / contraction(sigma, gamma, rho) * std::max(0.0, bracket);
}

}  // namespace

double log2_expm1(double x) {
  if (x <= 0.0) return x == 0.0 ? -std::numeric_limits<double>::infinity() : std::numeric_limits<double>::quiet_NaN();
  if (x > 30.0) return (x + std::log1p(-std::exp(-x))) / kLn2;
  return std::log2(std::expm1(x));
}

double bc_lower_bound(const JordanSpec& spec, double sigma, double L, double z0_norm, double t) {
  return bc_lower_bound_state(spec, sigma, t) + spec.n() * std::log2(L / z0_norm);
}

double bc_lower_bound_state(const JordanSpec& spec, double sigma, double t) {
  return t * access_rate_bound(spec, sigma);
}

double access_rate_bound(const JordanSpec& spec, double sigma) { return (spec.trace() + spec.n() * sigma) / kLn2; }

double tt_necessary_rate_pipelined(const JordanSpec& spec, double gamma, double period) {
  if (!(period > 0.0)) throw std::invalid_argument("tt_necessary_rate_pipelined: period must be > 0");
  if (gamma < period) return spec.trace() / kLn2;
  return spec.trace() * (gamma / period) / kLn2;
}

double tt_necessary_rate_stopwait(const JordanSpec& spec, double sigma, double gamma, double period) {
  if (!(period > 0.0)) throw std::invalid_argument("tt_necessary_rate_stopwait: period must be > 0");
  return (spec.trace() + spec.n() * sigma) * (std::floor(gamma / period) + 1.0) / kLn2;
}

double et_necessary_rate(double lambda, double sigma, double gamma, double rho0, double nu) {
  const double arg = log2_expm1(lambda * gamma) + contraction(sigma, gamma, rho0) / kLn2;
  if (!(arg > 0.0)) return 0.0;
  // ln(2 + e^{sigma gamma} / rho0) without overflow
  const double s = contraction(sigma, gamma, rho0);
  const double denom = std::log(nu) + s + std::log1p(2.0 * std::exp(-s));
  return (lambda + sigma) / denom * arg;
}

double et_necessary_rate_approx(double lambda, double sigma, double gamma, double rho0) {
  const double bracket = 1.0 + log2_expm1(lambda * gamma) / (contraction(sigma, gamma, rho0) / kLn2);
  if (!(bracket > 0.0)) return 0.0;
  return (lambda + sigma) / kLn2 * bracket;
}

double et_sufficient_rate(double lambda, double sigma, double gamma, double rho0, double b) {
  return scalar_sufficient(lambda, sigma, gamma, rho0, b);
}

double vector_necessary_rate(const JordanSpec& spec, double sigma, double gamma, double rho0, double nu) {
  double total = 0.0;
  for (const auto& blk : spec.blocks()) total += blk.order * et_necessary_rate(blk.lambda, sigma, gamma, rho0, nu);
  return total;
}

double vector_necessary_rate_approx(const JordanSpec& spec, double sigma, double gamma, double rho0) {
  double total = 0.0;
  for (const auto& blk : spec.blocks()) total += blk.order * et_necessary_rate_approx(blk.lambda, sigma, gamma, rho0);
  return total;
}

double vector_sufficient_rate(const JordanSpec& spec, double sigma, double gamma,
                              const std::vector<std::vector<double>>& cascade, double rho0, double b) {
  double total = 0.0;
  for (int j = 0; j < spec.q(); ++j) {
    const auto& blk = spec.block(j);
    const auto ju = static_cast<std::size_t>(j);
    for (int i = 0; i < blk.order; ++i) {
      const double rho = (ju < cascade.size() && !cascade[ju].empty()) ? cascade[ju].at(static_cast<std::size_t>(i)) : rho0;
      total += scalar_sufficient(blk.lambda, sigma, gamma, rho, b);
    }
  }
  return total;
}

double critical_delay(double lambda) { return kLn2 / lambda; }

double et_free_delay(double lambda, double sigma, double rho0) {
  // f is strictly increasing on (0, inf), -inf at 0.
  auto f = [&](double g) { return std::log(std::expm1(lambda * g)) - std::log(rho0) + sigma * g; };
  double lo = 0.0;
  double hi = 1.0 / lambda;
  while (f(hi) < 0.0) hi *= 2.0;
  for (int k = 0; k < 200 && hi - lo > 1e-15 * hi; ++k) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double et_asymptote(double lambda, double sigma) { return (lambda + sigma) / kLn2 * (1.0 + lambda / sigma); }

double et_min_interevent(double lambda, double sigma, double gamma, double rho0) {
  return contraction(sigma, gamma, rho0) / (lambda + sigma);
}

double nu_precision_delay(double lambda, double sigma, double gamma, double rho0) {
  return std::log1p(2.0 * rho0 * std::exp(-sigma * gamma)) / lambda;
}

RateBoundReport evaluate_bounds(const RateBoundInputs& in) {
  const auto& spec = in.spec;
  const double lambda = spec.block(0).lambda;
  RateBoundReport r;
  r.entropy_rate = entropy_rate(spec);
  r.access_rate = {access_rate_bound(spec, in.sigma), true};
  r.bc_slope = r.access_rate.value;
  r.bc_log_coeff = spec.n();
  r.tt_pipelined = {tt_necessary_rate_pipelined(spec, in.gamma, in.period), true};
  r.tt_stopwait = {tt_necessary_rate_stopwait(spec, in.sigma, in.gamma, in.period), false};
  r.et_necessary = {et_necessary_rate(lambda, in.sigma, in.gamma, in.rho0, in.nu), false};
  r.et_necessary_approx = {et_necessary_rate_approx(lambda, in.sigma, in.gamma, in.rho0), false};
  r.et_sufficient = et_sufficient_rate(lambda, in.sigma, in.gamma, in.rho0, in.b);
  r.vector_necessary = {vector_necessary_rate(spec, in.sigma, in.gamma, in.rho0, in.nu), true};
  r.vector_sufficient = vector_sufficient_rate(spec, in.sigma, in.gamma, in.cascade, in.rho0, in.b);
  r.critical_delay = kLn2 / spec.trace();
  r.beta = nu_precision_delay(lambda, in.sigma, in.gamma, in.rho0);
  r.min_interevent = std::numeric_limits<double>::infinity();
  for (const auto& blk : spec.blocks()) {
    r.asymptote += blk.order * et_asymptote(blk.lambda, in.sigma);
    r.min_interevent = std::min(r.min_interevent, et_min_interevent(blk.lambda, in.sigma, in.gamma, in.rho0));
  }
  return r;
}

std::vector<std::string> report_csv_header() {
  return {"entropy_rate",  "access_rate",       "tt_pipelined",   "tt_stopwait",      "et_necessary",
          "et_necessary_approx", "et_sufficient", "vector_necessary", "vector_sufficient", "critical_delay",
          "asymptote",     "beta",              "min_interevent"};
}

std::vector<double> report_csv_values(const RateBoundReport& r) {
  return {r.entropy_rate,           r.access_rate.value,      r.tt_pipelined.value, r.tt_stopwait.value,
          r.et_necessary.value,     r.et_necessary_approx.value, r.et_sufficient,   r.vector_necessary.value,
          r.vector_sufficient,      r.critical_delay,         r.asymptote,          r.beta,
          r.min_interevent};
}

VolumeState volume_step(const VolumeState& vol, const JordanSpec& spec, double dt) {
  if (dt < 0.0) throw std::invalid_argument("volume_step: dt must be >= 0");
  return {vol.log_measure + spec.trace() * dt, vol.time + dt};
}

VolumeState volume_refine(const VolumeState& vol, double bits) {
  if (bits < 0.0) throw std::invalid_argument("volume_refine: bits must be >= 0");
  return {vol.log_measure - bits * kLn2, vol.time};
}

}  // namespace trigrate
