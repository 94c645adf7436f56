#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

namespace artic {

struct LbfgsOptions {
  int max_iterations = 200;
  double gradient_tolerance = 1e-6;
  int history = 8;
  // Line search never accepts an increase, so the energy sequence is
  // nonincreasing per iteration.
  double armijo_c1 = 1e-4;
  int max_line_search_steps = 40;
};

struct LbfgsResult {
  double energy = 0.0;
  double gradient_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  // Energy at the start point followed by each accepted iterate;
  // nonincreasing by construction.
  std::vector<double> energies;
};

// eval(x, grad) returns the energy and fills grad (same size as x).
using EnergyFn =
    std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>;

LbfgsResult lbfgs_minimize(const EnergyFn& eval, Eigen::VectorXd& x,
                           const LbfgsOptions& opts = {});

// Minimizes 0.5 x'Hx + g'x subject to lo <= x <= hi by cyclic coordinate
// descent. H must be symmetric positive semidefinite. Coordinates with a
// vanishing diagonal and gradient are left untouched. Deterministic.
void solve_box_qp(const Eigen::MatrixXd& h, const Eigen::VectorXd& g,
                  const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                  Eigen::VectorXd& x, double tolerance = 1e-13,
                  int max_sweeps = 20000);

}  // namespace artic
