#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace vimix {

struct StAdamParams {
  double eta = 0.001;    // learning rate
  double beta = 0.9;     // momentum decay
  double gamma = 0.999;  // second-moment decay
  double epsilon = 1e-8;
  double weight_decay = 0.0;  // decoupled, off by default

  void validate() const;
};

struct OptimizerState {
  Eigen::VectorXd m;  // first moment
  Eigen::VectorXd v;  // second moment, elementwise nonnegative
  long t = 0;

  static OptimizerState zeros(Eigen::Index dim);
};

// m' = b m + (1-b) g;  v' = c v + (1-c) g^2;  w' = w - eta m'/(sqrt(v')+eps).
// No bias-correction rescaling; that is the difference from Adam.
Eigen::VectorXd st_adam_step(const Eigen::VectorXd& w, const Eigen::VectorXd& g,
                             OptimizerState& s, const StAdamParams& p);

// Adam reference: identical update plus m/(1-b^t), v/(1-c^t) rescaling.
Eigen::VectorXd adam_step(const Eigen::VectorXd& w, const Eigen::VectorXd& g,
                          OptimizerState& s, const StAdamParams& p);

// objective: fills grad, returns loss
using Objective = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>;

struct Trajectory {
  std::vector<double> loss;
  std::vector<double> grad_norm;
  Eigen::VectorXd final_w;
  bool converged = false;  // reached ||g|| <= tol
  bool diverged = false;   // loss exceeded the guard
  long steps = 0;
};

Trajectory optimize(const Objective& f, const Eigen::VectorXd& w0, const StAdamParams& p,
                    long max_iters, double tol, bool use_adam = false);

struct OscillationReport {
  struct Side {
    double final_loss = 0.0;
    double trailing_loss_variance = 0.0;  // over the last 10% of steps
    long steps_to_threshold = -1;         // -1: never reached
  };
  Side st_adam;
  Side adam;
  double noise_amplitude = 0.0;
  std::uint64_t seed = 0;
  long steps = 0;
  double threshold = 0.0;
  bool tie_or_better = false;  // ST-Adam reached the threshold no later than Adam

  std::string to_text() const;
};

// Quadratic pull with seeded heavy-tailed gradient noise; both optimizers see
// the identical noise sequence. Default profile frozen after calibration runs
// across 20 seeds.
OscillationReport oscillation_benchmark(std::uint64_t seed, double noise_amplitude = 3.0,
                                        long steps = 400, double eta = 0.02);

}  // namespace vimix
