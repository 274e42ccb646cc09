// Experiment configs, parameter sweeps and CSV reports.
#ifndef TRIGRATE_EXPERIMENTS_HPP
#define TRIGRATE_EXPERIMENTS_HPP

#include "trigrate/sim.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace trigrate {

enum class ExperimentKind {
  kFig2Curves,
  kEtSufficiency,
  kTtStopwaitNecessity,
  kTtPipelinedNecessity,
  kVectorCascade,
  kBoundTables,
};

std::string_view to_string(ExperimentKind kind);
std::optional<ExperimentKind> parse_kind(std::string_view name);

/// Parameter axes. The sweep is their Cartesian product, expanded with
/// lambda outermost and gamma innermost (the order of the members).
struct ParameterGrid {
  std::vector<double> lambda{1.0};
  std::vector<double> order{1.0};
  std::vector<double> sigma{0.5};
  std::vector<double> rho0{0.5};
  std::vector<double> b{2.0};
  std::vector<double> nu{1.0};
  std::vector<double> period{1.0};
  std::vector<double> bits{1.0};
  std::vector<double> gamma_over_period{2.0};
  std::vector<double> gamma{0.0};
};

struct GridPoint {
  double lambda = 1.0;
  int order = 1;
  double sigma = 0.5;
  double rho0 = 0.5;
  double b = 2.0;
  double nu = 1.0;
  double period = 1.0;
  int bits = 1;
  double gamma_over_period = 2.0;
  double gamma = 0.0;
};

std::vector<GridPoint> expand(const ParameterGrid& grid);

struct ExperimentSpec {
  std::string name;
  ExperimentKind kind = ExperimentKind::kBoundTables;
  ParameterGrid grid;
  std::vector<std::string> schedules{"uniform"};
  int seeds = 1;
  std::uint64_t seed_base = 0;
  double horizon = 50.0;
  double dt = 1e-3;
  double tail_fraction = 0.5;
  double L = 1.0;
  double kappa = 1.0;
  /// Initial thresholds per coordinate (event-triggered kinds). Empty means
  /// 1 on the top row and the cascade bound below it.
  std::vector<double> v0;
  /// Per-row codec precisions of the Jordan block, last entry rho0.
  std::vector<double> cascade;
  double bits_scale = 0.8;
  double volume_growth_threshold = 5.0;
  AdversaryBudget adversary{8, 5, 3};
  ChannelLayout layout = ChannelLayout::kParallel;
  std::string output;
};

/// Thrown with every validation problem, one per line.
class SpecError : public std::invalid_argument {
 public:
  explicit SpecError(std::vector<std::string> errors);
  const std::vector<std::string>& errors() const { return errors_; }

 private:
  std::vector<std::string> errors_;
};

/// Parse a JSON experiment document. Unknown keys are rejected; all
/// problems are reported together in a SpecError.
ExperimentSpec parse_config(std::string_view text);

struct ReportTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  /// Indices of the pass/fail columns ("pass" or "fail").
  std::vector<std::size_t> pass_columns;

  bool all_pass() const;
  std::size_t failures() const;
};

/// One row per grid point (and schedule or scenario where the kind has
/// them), in grid order regardless of `workers`.
ReportTable run_experiment(const ExperimentSpec& spec, int workers);

void write_report(std::ostream& os, const ReportTable& table);

/// Figure-2 curves over a gamma list: stop-and-wait necessary rate with
/// T = ln2 / lambda and n = 1, and the approximate event-triggered bound.
ReportTable fig2_table(double lambda, double sigma, double rho0, const std::vector<double>& gammas);

/// One-row table of every closed-form bound.
ReportTable bounds_table(const RateBoundInputs& in);

/// Deterministic x0 for seed k: coordinate f uniform in [-scale_f, scale_f].
Eigen::VectorXd seeded_initial_state(std::uint64_t seed, const Eigen::VectorXd& scale);

}  // namespace trigrate

#endif  // TRIGRATE_EXPERIMENTS_HPP
