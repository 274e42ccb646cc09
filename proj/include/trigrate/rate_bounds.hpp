// Closed-form rate bounds and the uncertainty-volume oracle.
//
// All rates are in bits per second, all delays in seconds. Scalar
// formulas take the eigenvalue explicitly; the vector forms sum block
// terms of a JordanSpec.
#ifndef TRIGRATE_RATE_BOUNDS_HPP
#define TRIGRATE_RATE_BOUNDS_HPP

#include "trigrate/jordan.hpp"

#include <string>
#include <vector>

namespace trigrate {

/// log2(e^x - 1) evaluated without overflow for large x.
double log2_expm1(double x);

/// Minimum cumulative bits received by t for ||z(t)|| <= ||z(0)|| e^{-sigma t}:
///   t (Tr(A) + n sigma) / ln 2 + n log2(L / ||z(0)||).
double bc_lower_bound(const JordanSpec& spec, double sigma, double L, double z0_norm, double t);
/// Same bound for the state itself (no initial-condition term).
double bc_lower_bound_state(const JordanSpec& spec, double sigma, double t);

/// (Tr(A) + n sigma) / ln 2, the access rate every scheme needs (strict).
double access_rate_bound(const JordanSpec& spec, double sigma);

/// Periodic sends with queueing channel: Tr/ln2 if gamma < T, else
/// Tr (gamma / T) / ln 2 (strict).
double tt_necessary_rate_pipelined(const JordanSpec& spec, double gamma, double period);

/// Stop-and-wait sends: (Tr + n sigma)(floor(gamma / T) + 1) / ln 2.
double tt_necessary_rate_stopwait(const JordanSpec& spec, double sigma, double gamma, double period);

/// Event-triggered necessary rate under nu-precision quantization:
///   (lambda+sigma) / (ln nu + ln(2 + e^{sigma gamma} / rho0))
///     * max{0, log2((e^{lambda gamma} - 1) / (rho0 e^{-sigma gamma}))}.
double et_necessary_rate(double lambda, double sigma, double gamma, double rho0, double nu);

/// Large-sigma approximation:
///   (lambda+sigma)/ln2 * max{0, 1 + log2(e^{lambda gamma} - 1) / (-log2(rho0 e^{-sigma gamma}))}.
double et_necessary_rate_approx(double lambda, double sigma, double gamma, double rho0);

/// Rate attained by the timing codec:
///   (lambda+sigma) / (-ln(rho0 e^{-sigma gamma}))
///     * max{0, 1 + log2(b gamma (lambda+sigma) / ln(1 + rho0 e^{-(sigma+lambda) gamma}))}.
/// Zero when gamma = 0.
double et_sufficient_rate(double lambda, double sigma, double gamma, double rho0, double b);

/// Vector forms: sum over blocks weighted by d_j, and the double sum over
/// coordinates with per-row rho_i^j for the sufficient rate.
double vector_necessary_rate(const JordanSpec& spec, double sigma, double gamma, double rho0, double nu);
double vector_necessary_rate_approx(const JordanSpec& spec, double sigma, double gamma, double rho0);
double vector_sufficient_rate(const JordanSpec& spec, double sigma, double gamma,
                              const std::vector<std::vector<double>>& cascade, double rho0, double b);

/// ln 2 / lambda: the delay at which the approximate event-triggered bound
/// reaches the scalar access rate.
double critical_delay(double lambda);

/// Delay gamma_0 where the necessary event-triggered rate leaves zero:
/// e^{lambda gamma} - 1 = rho0 e^{-sigma gamma}.
double et_free_delay(double lambda, double sigma, double rho0);

/// ((lambda+sigma)/ln2)(1 + lambda/sigma): gamma -> infinity limit of the
/// event-triggered bounds.
double et_asymptote(double lambda, double sigma);

/// Lower bound on the inter-event time: -ln(rho0 e^{-sigma gamma}) / (lambda+sigma).
double et_min_interevent(double lambda, double sigma, double gamma, double rho0);

/// (1/lambda) ln(1 + 2 rho0 e^{-sigma gamma}).
double nu_precision_delay(double lambda, double sigma, double gamma, double rho0);

struct RateBound {
  double value = 0.0;
  bool strict = false;  // ">" rather than ">="
};

struct RateBoundInputs {
  JordanSpec spec;
  double sigma = 0.5;
  double gamma = 0.0;
  double rho0 = 0.5;
  double nu = 1.0;
  double b = 2.0;
  double period = 1.0;
  std::vector<std::vector<double>> cascade;
};

struct RateBoundReport {
  double entropy_rate = 0.0;
  RateBound access_rate;
  double bc_slope = 0.0;  // bits/s coefficient of t in the access bound
  int bc_log_coeff = 0;   // n, coefficient of log2(L / ||z(0)||)
  RateBound tt_pipelined;
  RateBound tt_stopwait;
  RateBound et_necessary;
  RateBound et_necessary_approx;
  double et_sufficient = 0.0;
  RateBound vector_necessary;
  double vector_sufficient = 0.0;
  double critical_delay = 0.0;
  double asymptote = 0.0;
  double beta = 0.0;
  double min_interevent = 0.0;
};

/// Scalar entries use the first block; vector entries use all blocks.
RateBoundReport evaluate_bounds(const RateBoundInputs& in);

std::vector<std::string> report_csv_header();
std::vector<double> report_csv_values(const RateBoundReport& r);

/// ln m(Gamma_t) of the controller's uncertainty set.
struct VolumeState {
  double log_measure = 0.0;
  double time = 0.0;
};

/// Open-loop growth: ln m += Tr(A) dt.
VolumeState volume_step(const VolumeState& vol, const JordanSpec& spec, double dt);
/// Best-case refinement by g bits: ln m -= g ln 2.
VolumeState volume_refine(const VolumeState& vol, double bits);

}  // namespace trigrate

#endif  // TRIGRATE_RATE_BOUNDS_HPP
