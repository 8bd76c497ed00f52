#include "vimix/stadam.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "vimix/rng.hpp"
#include "vimix/stats.hpp"

namespace vimix {

void StAdamParams::validate() const {
  if (eta <= 0.0) throw std::invalid_argument("StAdamParams: eta must be positive");
  if (beta < 0.0 || beta >= 1.0) throw std::invalid_argument("StAdamParams: beta outside [0,1)");
  if (gamma < 0.0 || gamma >= 1.0)
    throw std::invalid_argument("StAdamParams: gamma outside [0,1)");
  if (epsilon <= 0.0) throw std::invalid_argument("StAdamParams: epsilon must be positive");
}

OptimizerState OptimizerState::zeros(Eigen::Index dim) {
  return {Eigen::VectorXd::Zero(dim), Eigen::VectorXd::Zero(dim), 0};
}

namespace {

void check_step_inputs(const Eigen::VectorXd& w, const Eigen::VectorXd& g,
                       const OptimizerState& s, const StAdamParams& p) {
  p.validate();
  if (w.size() != g.size() || w.size() != s.m.size() || w.size() != s.v.size())
    throw std::invalid_argument("optimizer step: dimension mismatch");
  if (!g.allFinite()) throw std::invalid_argument("optimizer step: non-finite gradient");
}

}  // namespace

Eigen::VectorXd st_adam_step(const Eigen::VectorXd& w, const Eigen::VectorXd& g,
                             OptimizerState& s, const StAdamParams& p) {
  check_step_inputs(w, g, s, p);
  s.m = p.beta * s.m + (1.0 - p.beta) * g;
  s.v = p.gamma * s.v.array().matrix() + (1.0 - p.gamma) * g.array().square().matrix();
  s.t += 1;
  return w - p.eta * (s.m.array() / (s.v.array().sqrt() + p.epsilon)).matrix() -
         p.eta * p.weight_decay * w;
}

Eigen::VectorXd adam_step(const Eigen::VectorXd& w, const Eigen::VectorXd& g,
                          OptimizerState& s, const StAdamParams& p) {
  check_step_inputs(w, g, s, p);
  s.m = p.beta * s.m + (1.0 - p.beta) * g;
  s.v = p.gamma * s.v.array().matrix() + (1.0 - p.gamma) * g.array().square().matrix();
  s.t += 1;
  const double m_scale = 1.0 - std::pow(p.beta, static_cast<double>(s.t));
  const double v_scale = 1.0 - std::pow(p.gamma, static_cast<double>(s.t));
  const Eigen::ArrayXd m_hat = s.m.array() / (m_scale == 0.0 ? 1.0 : m_scale);
  const Eigen::ArrayXd v_hat = s.v.array() / (v_scale == 0.0 ? 1.0 : v_scale);
  return w - p.eta * (m_hat / (v_hat.sqrt() + p.epsilon)).matrix() -
         p.eta * p.weight_decay * w;
}

Trajectory optimize(const Objective& f, const Eigen::VectorXd& w0, const StAdamParams& p,
                    long max_iters, double tol, bool use_adam) {
  Trajectory traj;
  Eigen::VectorXd w = w0;
  Eigen::VectorXd g(w.size());
  OptimizerState s = OptimizerState::zeros(w.size());
  for (long it = 0; it < max_iters; ++it) {
    const double loss = f(w, g);
    const double gnorm = g.norm();
    traj.loss.push_back(loss);
    traj.grad_norm.push_back(gnorm);
    traj.steps = it + 1;
    if (loss > 1e12) {
      traj.diverged = true;
      break;
    }
    if (gnorm <= tol) {
      traj.converged = true;
      break;
    }
    w = use_adam ? adam_step(w, g, s, p) : st_adam_step(w, g, s, p);
  }
  traj.final_w = w;
  return traj;
}

namespace {

OscillationReport::Side run_noisy_quadratic(bool use_adam, std::uint64_t seed,
                                            double amplitude, long steps, double eta,
                                            double threshold) {
  const Eigen::Index dim = 10;
  StAdamParams p;
  p.eta = eta;
  Eigen::VectorXd w = Eigen::VectorXd::Constant(dim, 3.0);
  OptimizerState s = OptimizerState::zeros(dim);
  CounterRng rng(mix64(seed, 0x05C1ULL));
  OscillationReport::Side side;
  std::vector<double> trailing;
  const long tail_start = steps - steps / 10;
  for (long it = 0; it < steps; ++it) {
    const double loss = 0.5 * w.squaredNorm();
    if (it >= tail_start) trailing.push_back(loss);
    if (side.steps_to_threshold < 0 && loss <= threshold) side.steps_to_threshold = it;
    Eigen::VectorXd g = w;
    for (Eigen::Index i = 0; i < dim; ++i) {
      const double z = rng.next_normal();
      g[i] += amplitude * z * z * z;  // cubed normal: heavy-tailed, zero mean
    }
    w = use_adam ? adam_step(w, g, s, p) : st_adam_step(w, g, s, p);
    side.final_loss = 0.5 * w.squaredNorm();
  }
  side.trailing_loss_variance = trailing.size() > 1 ? variance(trailing) : 0.0;
  return side;
}

}  // namespace

std::string OscillationReport::to_text() const {
  std::ostringstream os;
  os.precision(12);
  os << "oscillation-benchmark seed=" << seed << " amplitude=" << noise_amplitude
     << " steps=" << steps << " threshold=" << threshold << "\n";
  os << "st-adam final_loss=" << st_adam.final_loss
     << " trailing_var=" << st_adam.trailing_loss_variance
     << " steps_to_threshold=" << st_adam.steps_to_threshold << "\n";
  os << "adam    final_loss=" << adam.final_loss
     << " trailing_var=" << adam.trailing_loss_variance
     << " steps_to_threshold=" << adam.steps_to_threshold << "\n";
  os << "tie_or_better=" << (tie_or_better ? 1 : 0) << "\n";
  return os.str();
}

OscillationReport oscillation_benchmark(std::uint64_t seed, double noise_amplitude,
                                        long steps, double eta) {
  OscillationReport rep;
  rep.seed = seed;
  rep.noise_amplitude = noise_amplitude;
  rep.steps = steps;
  rep.threshold = 0.05;
  rep.st_adam = run_noisy_quadratic(false, seed, noise_amplitude, steps, eta, rep.threshold);
  rep.adam = run_noisy_quadratic(true, seed, noise_amplitude, steps, eta, rep.threshold);
  const long st = rep.st_adam.steps_to_threshold, ad = rep.adam.steps_to_threshold;
  rep.tie_or_better = st >= 0 && (ad < 0 || st <= ad);
  return rep;
}

}  // namespace vimix
