#pragma once

#include <functional>

#include <Eigen/Dense>

namespace geodefect {

struct NelderMeadResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int evaluations = 0;
};

// Downhill simplex minimization with the standard coefficients
// (reflection 1, expansion 2, contraction 1/2, shrink 1/2). The initial
// simplex is x0 plus `step` along each axis. Stops when the spread of values
// on the simplex drops below `ftol` or after `max_evals` evaluations.
NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                             const Eigen::VectorXd& x0, double step, int max_evals,
                             double ftol = 1e-14);

}  // namespace geodefect
