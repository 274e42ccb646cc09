#include "trigrate/jordan.hpp"

#include <numbers>
#include <string>

namespace trigrate {

JordanSpec::JordanSpec(std::vector<JordanBlock> blocks) : blocks_(std::move(blocks)) {
  if (blocks_.empty()) throw std::invalid_argument("JordanSpec: at least one block required");
  offsets_.reserve(blocks_.size());
  for (std::size_t j = 0; j < blocks_.size(); ++j) {
    const auto& b = blocks_[j];
    if (!(b.lambda > 0.0) || !std::isfinite(b.lambda))
      throw std::invalid_argument("JordanSpec: block " + std::to_string(j) + " eigenvalue must be > 0");
    if (b.order < 1)
      throw std::invalid_argument("JordanSpec: block " + std::to_string(j) + " order must be >= 1");
    offsets_.push_back(n_);
    n_ += b.order;
  }
}

double JordanSpec::trace() const {
  double tr = 0.0;
  for (const auto& b : blocks_) tr += b.order * b.lambda;
  return tr;
}

CoordId JordanSpec::coord(int flat_index) const {
  if (flat_index < 0 || flat_index >= n_) throw std::out_of_range("JordanSpec::coord");
  int j = q() - 1;
  while (offsets_[static_cast<std::size_t>(j)] > flat_index) --j;
  return {j, flat_index - offsets_[static_cast<std::size_t>(j)]};
}

Eigen::MatrixXd JordanSpec::matrix() const {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n_, n_);
  for (int j = 0; j < q(); ++j) {
    const int o = offset(j);
    const auto& b = block(j);
    for (int i = 0; i < b.order; ++i) {
      a(o + i, o + i) = b.lambda;
      if (i + 1 < b.order) a(o + i, o + i + 1) = 1.0;
    }
  }
  return a;
}

JordanSpec JordanSpec::shifted(double shift) const {
  auto blocks = blocks_;
  for (auto& b : blocks) b.lambda += shift;
  return JordanSpec(std::move(blocks));
}

Eigen::MatrixXd exp_jordan(const JordanSpec& spec, double t) {
  Eigen::MatrixXd e = Eigen::MatrixXd::Zero(spec.n(), spec.n());
  for (int j = 0; j < spec.q(); ++j) {
    const auto& b = spec.block(j);
    e.block(spec.offset(j), spec.offset(j), b.order, b.order) = exp_block(b.lambda, b.order, t);
  }
  return e;
}

void apply_jordan(const JordanSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& v,
                  Eigen::Ref<Eigen::VectorXd> out) {
  for (int j = 0; j < spec.q(); ++j) {
    const auto& b = spec.block(j);
    const int o = spec.offset(j);
    for (int i = 0; i < b.order; ++i) {
      double acc = b.lambda * v[o + i];
      if (i + 1 < b.order) acc += v[o + i + 1];
      out[o + i] = acc;
    }
  }
}

double propagate_coordinate(const JordanSpec& spec, const Eigen::VectorXd& z, int flat_index, double s) {
  const CoordId c = spec.coord(flat_index);
  const auto& b = spec.block(c.block);
  const int o = spec.offset(c.block);
  double poly = 0.0;
  double term = 1.0;
  for (int k = 0; c.index + k < b.order; ++k) {
    poly += term * z[o + c.index + k];
    term = term * s / (k + 1);
  }
  return std::exp(b.lambda * s) * poly;
}

StateVec propagate_error(const JordanSpec& spec, const StateVec& z, double t1) {
  if (t1 < z.time) throw std::invalid_argument("propagate_error: t1 precedes z.time");
  const double s = t1 - z.time;
  StateVec out{Eigen::VectorXd(spec.n()), t1};
  if (s == 0.0) {
    out.coords = z.coords;
    return out;
  }
  for (int f = 0; f < spec.n(); ++f) out.coords[f] = propagate_coordinate(spec, z.coords, f, s);
  return out;
}

ClosedLoopIntegrator::ClosedLoopIntegrator(JordanSpec spec, ControllerGain gain, double max_step)
    : spec_(std::move(spec)), gain_(gain), max_step_(max_step) {
  if (!(max_step_ > 0.0)) throw std::invalid_argument("ClosedLoopIntegrator: max_step must be > 0");
  const int n = spec_.n();
  for (auto& k : kx_) k.resize(n);
  for (auto& k : kh_) k.resize(n);
  tx_.resize(n);
  th_.resize(n);
  diff_.resize(n);
  adiff_.resize(n);
}

void ClosedLoopIntegrator::rhs(const Eigen::VectorXd& x, const Eigen::VectorXd& xhat, Eigen::VectorXd& dx,
                               Eigen::VectorXd& dxhat) {
  // A x - (A + kappa I) xhat = A (x - xhat) - kappa xhat
  diff_ = x - xhat;
  apply_jordan(spec_, diff_, adiff_);
  dx = adiff_ - gain_.kappa * xhat;
  dxhat = -gain_.kappa * xhat;
}

void ClosedLoopIntegrator::rk4_step(Eigen::VectorXd& x, Eigen::VectorXd& xhat, double h) {
  rhs(x, xhat, kx_[0], kh_[0]);
  tx_ = x + 0.5 * h * kx_[0];
  th_ = xhat + 0.5 * h * kh_[0];
  rhs(tx_, th_, kx_[1], kh_[1]);
  tx_ = x + 0.5 * h * kx_[1];
  th_ = xhat + 0.5 * h * kh_[1];
  rhs(tx_, th_, kx_[2], kh_[2]);
  tx_ = x + h * kx_[2];
  th_ = xhat + h * kh_[2];
  rhs(tx_, th_, kx_[3], kh_[3]);
  x += (h / 6.0) * (kx_[0] + 2.0 * kx_[1] + 2.0 * kx_[2] + kx_[3]);
  xhat += (h / 6.0) * (kh_[0] + 2.0 * kh_[1] + 2.0 * kh_[2] + kh_[3]);
}

void ClosedLoopIntegrator::advance(Eigen::VectorXd& x, Eigen::VectorXd& xhat, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("propagate_closed_loop: dt must be > 0");
  const auto steps = static_cast<long>(std::ceil(dt / max_step_ - 1e-9));
  const double h = dt / static_cast<double>(steps < 1 ? 1 : steps);
  for (long s = 0; s < (steps < 1 ? 1 : steps); ++s) rk4_step(x, xhat, h);
}

std::pair<StateVec, StateVec> propagate_closed_loop(const JordanSpec& spec, const ControllerGain& gain,
                                                    const StateVec& x, const StateVec& xhat, double dt,
                                                    double max_step) {
  ClosedLoopIntegrator integ(spec, gain, max_step);
  StateVec xo{x.coords, x.time};
  StateVec ho{xhat.coords, xhat.time};
  integ.advance(xo.coords, ho.coords, dt);
  xo.time += dt;
  ho.time += dt;
  return {std::move(xo), std::move(ho)};
}

double entropy_rate(const JordanSpec& spec) { return spec.trace() / std::numbers::ln2; }

}  // namespace trigrate
