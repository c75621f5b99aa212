#pragma once

#include <functional>
#include <vector>

namespace elc::detail {

using Vec = std::vector<double>;
using LinOp = std::function<void(const Vec&, Vec&)>;

struct GmresResult {
  int iterations = 0;
  double residual = 0.0;  // relative
  bool converged = false;
};

// Restarted GMRES with right preconditioning. x holds the initial guess.
GmresResult gmres(const LinOp& A, const LinOp& Minv, const Vec& b, Vec& x, double rtol, int restart,
                  int max_iter);

// Smallest Ritz value of a symmetric operator after `steps` Lanczos steps
// with full reorthogonalization.
double lanczos_min_ritz(const LinOp& A, const Vec& start, int steps);

}  // namespace elc::detail
