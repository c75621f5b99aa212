#pragma once

#include <optional>

#include "elc/conformal_method.hpp"
#include "elc/geometry.hpp"

namespace elc {

struct SolveOptions {
  int max_outer = 50;
  int max_newton = 50;
  double tol_residual = 1e-10;
  double damping = 0.7;
  double u_floor = 1e-8;
  // Either a full field or a constant; if neither is set the constant
  // balance root of the mean coefficients is used.
  std::optional<ScalarField> initial_guess;
  std::optional<double> initial_constant;
  // Lanczos test that Delta + h is coercive. Defocusing problems with
  // h <= 0 are still well posed (the linearization is coercive), so callers
  // may switch the test off.
  bool check_coercivity = true;
  int lanczos_steps = 20;
  int gmres_restart = 40;
  int gmres_max_iter = 600;

  void validate() const;
};

struct Solution {
  ScalarField u;
  OneFormField W;
  double scalar_residual = 0.0;
  double momentum_residual = 0.0;
  double kernel_defect = 0.0;
  int iterations = 0;
  int newton_steps = 0;
  bool converged = false;
};

struct MomentumSolve {
  OneFormField W;
  double kernel_defect = 0.0;
};

MomentumSolve solve_momentum(const ScalarField& u, const SystemCoefficients& C);

struct ScalarSolveInfo {
  int newton_steps = 0;
  double residual = 0.0;
};

ScalarField solve_scalar(const OneFormField& W, const SystemCoefficients& C, const SolveOptions& opts,
                         ScalarSolveInfo* info = nullptr);

Solution solve_system(const SystemCoefficients& C, const SolveOptions& opts);

SystemCoefficients manufactured_forcing(const ScalarField& u_star, const OneFormField& W_star,
                                        const SystemCoefficients& C, double u_floor = 1e-8);

// L-infinity residual of the scalar equation at (u, W).
double scalar_residual(const ScalarField& u, const OneFormField& W, const SystemCoefficients& C);
// L-infinity residual of the momentum equation after removing the kernel
// (constant-form) component of its right-hand side.
double momentum_residual(const ScalarField& u, const OneFormField& W, const SystemCoefficients& C);

// Smallest positive root of h t = f t^{2*-1} + a t^{-2*-1}. When no root
// exists, the point of closest approach on a logarithmic scan is returned.
double constant_balance_root(double h, double f, double a, int n);

// Smallest Ritz value of the discrete Delta + h.
double coercivity_margin(const ScalarField& h, int steps = 20);

}  // namespace elc
