// Jordan-form LTI kernel: block exponentials, exact error propagation,
// closed-loop state propagation and the entropy rate of the plant.
#ifndef TRIGRATE_JORDAN_HPP
#define TRIGRATE_JORDAN_HPP

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

namespace trigrate {

/// One real Jordan block: eigenvalue and order.
struct JordanBlock {
  double lambda = 1.0;
  int order = 1;
};

/// Coordinate address inside a Jordan-form state: block j, position i
/// (both zero based). Position 0 is the top row of the block, which is
/// driven by position 1 through the superdiagonal.
struct CoordId {
  int block = 0;
  int index = 0;

  friend bool operator==(const CoordId&, const CoordId&) = default;
};

/// The plant matrix A = diag(J_1, ..., J_q) with every eigenvalue real and
/// strictly positive.
class JordanSpec {
 public:
  JordanSpec() = default;
  explicit JordanSpec(std::vector<JordanBlock> blocks);

  static JordanSpec scalar(double a) { return JordanSpec({{a, 1}}); }

  const std::vector<JordanBlock>& blocks() const { return blocks_; }
  const JordanBlock& block(int j) const { return blocks_.at(static_cast<std::size_t>(j)); }
  int n() const { return n_; }
  int q() const { return static_cast<int>(blocks_.size()); }

  /// Tr(A) = sum_j d_j lambda_j.
  double trace() const;

  /// Flat index of the first coordinate of block j.
  int offset(int j) const { return offsets_.at(static_cast<std::size_t>(j)); }
  int flat(CoordId c) const { return offset(c.block) + c.index; }
  CoordId coord(int flat_index) const;
  double lambda_of(int flat_index) const { return block(coord(flat_index).block).lambda; }

  /// Dense A.
  Eigen::MatrixXd matrix() const;

  /// A + shift * I, still in Jordan form.
  JordanSpec shifted(double shift) const;

 private:
  std::vector<JordanBlock> blocks_;
  std::vector<int> offsets_;
  int n_ = 0;
};

/// A vector over the n coordinates of a JordanSpec, stamped with a time.
/// Used for the plant state x, the estimate x-hat and the error z.
struct StateVec {
  Eigen::VectorXd coords;
  double time = 0.0;
};

/// Feedback u = -K x-hat with B = I and K = A + kappa I, so the estimator
/// follows d/dt x-hat = -kappa x-hat.
struct ControllerGain {
  double kappa = 1.0;
};

/// e^{J t} for the Jordan block J = lambda I + N of order d:
/// entry (i, i+k) = e^{lambda t} t^k / k!, zero below the diagonal.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> exp_block(Scalar lambda, int order, Scalar t) {
  using std::exp;
  if (order < 1) throw std::invalid_argument("exp_block: order must be >= 1");
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> m =
      Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Zero(order, order);
  Scalar coeff = exp(lambda * t);
  for (int k = 0; k < order; ++k) {
    for (int i = 0; i + k < order; ++i) m(i, i + k) = coeff;
    coeff = coeff * t / Scalar(k + 1);
  }
  return m;
}

/// Block-diagonal e^{A t}.
Eigen::MatrixXd exp_jordan(const JordanSpec& spec, double t);

/// y = A v without forming A.
void apply_jordan(const JordanSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& v,
                  Eigen::Ref<Eigen::VectorXd> out);

/// Coordinate `flat_index` of e^{A s} z, evaluated directly from the block
/// polynomial (no matrix is formed).
double propagate_coordinate(const JordanSpec& spec, const Eigen::VectorXd& z, int flat_index, double s);

/// Exact error propagation between receptions: z(t1) = e^{A (t1 - z.time)} z.
StateVec propagate_error(const JordanSpec& spec, const StateVec& z, double t1);

/// Fixed-step RK4 integrator for the augmented closed loop
///   dx/dt = A x - K x-hat,   dx-hat/dt = (A - K) x-hat.
/// Holds its work buffers so repeated steps do not allocate.
class ClosedLoopIntegrator {
 public:
  ClosedLoopIntegrator(JordanSpec spec, ControllerGain gain, double max_step = 1e-3);

  /// Advance (x, xhat) in place by dt, using ceil(dt / max_step) equal
  /// substeps. Rejects dt <= 0.
  void advance(Eigen::VectorXd& x, Eigen::VectorXd& xhat, double dt);

  double max_step() const { return max_step_; }

 private:
  void rk4_step(Eigen::VectorXd& x, Eigen::VectorXd& xhat, double h);
  void rhs(const Eigen::VectorXd& x, const Eigen::VectorXd& xhat, Eigen::VectorXd& dx, Eigen::VectorXd& dxhat);

  JordanSpec spec_;
  ControllerGain gain_;
  double max_step_;
  Eigen::VectorXd kx_[4], kh_[4], tx_, th_, diff_, adiff_;
};

/// Advance x and x-hat by dt (no reception inside the interval).
std::pair<StateVec, StateVec> propagate_closed_loop(const JordanSpec& spec, const ControllerGain& gain,
                                                    const StateVec& x, const StateVec& xhat, double dt,
                                                    double max_step = 1e-3);

/// h(A) = Tr(A) / ln 2 in bits per second.
double entropy_rate(const JordanSpec& spec);

}  // namespace trigrate

#endif  // TRIGRATE_JORDAN_HPP
