// Transmission policies: event-triggered (trigger, timing codec, jump) and
// the two time-triggered schedules with their box quantizer.
#ifndef TRIGRATE_POLICIES_HPP
#define TRIGRATE_POLICIES_HPP

#include "trigrate/channel.hpp"
#include "trigrate/jordan.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace trigrate {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DecodeError : public std::runtime_error {
 public:
  DecodeError(const std::string& what, double time) : std::runtime_error(what), time_(time) {}
  double time() const { return time_; }

 private:
  double time_;
};

/// Parameters of the event-triggering design. `v0` and the cascade are
/// indexed like the JordanSpec (flat coordinates, per-block lists).
struct TriggerConfig {
  double sigma = 0.5;
  Eigen::VectorXd v0;
  double rho0 = 0.5;
  /// Per block: 0 < rho_1 < ... < rho_d = rho0. An empty list is accepted
  /// for blocks of order 1 and means {rho0}.
  std::vector<std::vector<double>> cascade;
  double nu = 1.0;
  double b = 2.0;
  double gamma = 0.0;

  /// Codec precision of a coordinate (rho_i^j, rho0 on the last row).
  double rho(const JordanSpec& spec, int flat) const;
  /// v_i(t) = v0_i e^{-sigma t}.
  double threshold(int flat, double t) const;
};

/// Throws ConfigError listing every violated field.
void validate(const JordanSpec& spec, const TriggerConfig& cfg);

/// Earliest t in [z.time, t_limit] with |z_flat(t)| = v_flat(t), or none.
/// Starting at or above the threshold is an immediate trigger at z.time.
/// Rows without coupling use the closed form; coupled rows are bracketed on
/// a grid of `scan_step` and bisected to 1e-9 (1 + t).
std::optional<double> et_trigger_time(const JordanSpec& spec, const TriggerConfig& cfg, const StateVec& z, int flat,
                                      double t_limit, double scan_step = 1e-3);

/// Timing codec: the payload is the sign of z plus floor(t_s / delta) mod N.
struct CodecParams {
  double delta = 0.0;
  std::int64_t cells = 1;
  int bits = 1;
  int refinement = 0;
};

/// delta = ln(1 + rho e^{-(sigma+lambda) gamma}) / (b (lambda+sigma)) / 2^refinement,
/// N = ceil(gamma / delta) + 1 (N = 1 when gamma = 0), g = 1 + ceil(log2 N).
CodecParams et_codec_params(double lambda, const TriggerConfig& cfg, double rho, int refinement = 0);
inline CodecParams et_codec_params(double lambda, const TriggerConfig& cfg) {
  return et_codec_params(lambda, cfg, cfg.rho0);
}

Bits et_encode(const CodecParams& codec, double t_s, int sign);

struct EtDecoded {
  double t_hat = 0.0;
  double z_bar = 0.0;
  int sign = 1;
};

/// Recover the cell of t_s from the residue and t_c, then
/// z_bar = sign v0_i e^{-sigma t_hat} e^{lambda (t_c - t_hat)}.
EtDecoded et_decode(const TriggerConfig& cfg, const CodecParams& codec, const Bits& payload, double t_c, double lambda,
                    double v0_i);

/// x-hat_flat += z_bar.
StateVec jump_update(const StateVec& xhat, int flat, double z_bar);

enum class TTVariant { kPeriodic, kStopAndWait };

struct TTConfig {
  double period = 1.0;
  TTVariant variant = TTVariant::kStopAndWait;
  double sigma = 0.5;
  /// Packet size override; tt_packet_size when absent.
  std::optional<int> bits;
};

/// Periodic: t_s + T. Stop-and-wait: t_s + (floor(delay / T) + 1) T.
double tt_next_send(const TTConfig& tt, double t_s, double delay);

/// ceil((Tr(A) + n sigma)(floor(gamma / T) + 1) T / ln 2), at least 1.
int tt_packet_size(const JordanSpec& spec, const TTConfig& tt, double gamma);

/// Split `bits` over coordinates proportionally to lambda_j + sigma
/// (largest remainder, ties to the lower coordinate).
std::vector<int> tt_split_bits(const JordanSpec& spec, double sigma, int bits);

struct BoxQuantization {
  Bits payload;
  Eigen::VectorXd center;
  Eigen::VectorXd half_width;
};

/// Uniform grid over the box [-w, w]: 2^bits_i cells on coordinate i.
BoxQuantization tt_quantize(const Eigen::VectorXd& e, const Eigen::VectorXd& half_width, const std::vector<int>& bits);
Eigen::VectorXd tt_dequantize(const Bits& payload, const Eigen::VectorXd& half_width, const std::vector<int>& bits);

/// Bounding half-widths of e^{A s} applied to the box [-w, w].
Eigen::VectorXd tt_propagate_box(const JordanSpec& spec, const Eigen::VectorXd& half_width, double s);

struct CascadeBound {
  int flat = 0;
  double adopted = 0.0;  // rho_{i-1} in the margin
  double literal = 0.0;  // rho_i in the margin; zero on the last row
  bool satisfied = true;
};

struct CascadeReport {
  std::vector<CascadeBound> coords;

  bool ok() const;
  std::optional<CascadeBound> first_violation() const;
};

/// Recursive upper bounds on v0 along each Jordan block:
///   v0_i <= v0_{i-1} (lambda+sigma) m / ((m + E)(E - 1)),  E = e^{(lambda+sigma) gamma},
/// with margin m = rho0 - rho_{i-1} (adopted) or rho0 - rho_i (literal).
/// The first row of every block is unconstrained (+inf).
CascadeReport validate_cascade(const JordanSpec& spec, const TriggerConfig& cfg);

}  // namespace trigrate

#endif  // TRIGRATE_POLICIES_HPP
