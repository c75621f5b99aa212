#pragma once

#include <vector>

#include "elc/geometry.hpp"

namespace elc {

// phi(x) = (lambda^2 - 1)^{(n-2)/4} (lambda - cos d)^{1 - n/2}, d the distance
// to the concentration point on the round S^n. Solves
// Delta phi + n(n-2)/4 phi = n(n-2)/4 phi^{(n+2)/(n-2)}.
double phi_bubble_sphere(int n, double lambda, double d);

// Smooth cutoff eta on [0, pi]: zero on [0, delta_left] and [pi - delta_right, pi],
// rising over width_left and falling over width_right through C^infinity steps
// built from exp(-1/t), equal to `amplitude` on the plateau in between.
struct EtaParams {
  double delta_left = 1.0;
  double width_left = 0.5;
  double delta_right = 1.0;
  double width_right = 0.5;
  double amplitude = 1.0;

  void validate() const;
};

struct EtaValue {
  double value = 0.0, d1 = 0.0, d2 = 0.0;
};

EtaValue eta(const EtaParams& p, double r);

// Radial profile solving Z'' + 2 cot r Z' + (1 - 2 cot^2 r) Z = -(3/4) s phi^6
// with Z(pi/2) = 1, Z'(pi/2) = 0, integrated outward from pi/2 in both
// directions (s = rhs_scale; s = 0 gives the homogeneous problem).
struct ZProfile {
  std::vector<double> r, Z, dZ, d2Z;
};

struct OdeOptions {
  double abs_tol = 1e-13;
  double rel_tol = 1e-13;
  double min_step = 1e-14;
};

ZProfile solve_Z(double lambda, const std::vector<double>& nodes, double rhs_scale = 1.0, const OdeOptions& opts = {});

// Independent fixed-step classical Runge-Kutta integrator for the same ODE,
// used as a cross-check. `substeps` steps are taken between consecutive nodes.
ZProfile solve_Z_rk4(double lambda, const std::vector<double>& nodes, double rhs_scale = 1.0, int substeps = 64);

// Blow-up family member on the round S^3 (radial reduction):
//   W = eta Z dr, U = -L_h W, X0 = eta dr,
//   Y = -(4/3)(2 eta' Z' + eta'' Z + 2 cot r eta' Z) dr.
struct InstabilityAssembly {
  double lambda = 0.0;
  EtaParams eta;
  GeometryPtr grid;
  ScalarField phi;
  ZProfile Z;
  ScalarField eta_values;
  OneFormField W, X0, Y;
  SymTensorField U;
};

InstabilityAssembly assemble(double lambda, const EtaParams& eta = {}, int resolution = 4096, double eps = 1e-3);

struct InstabilityReport {
  double lambda = 0.0;
  double scalar_residual = 0.0;  // L-infinity, relative to the largest term of the scalar equation
  double vector_residual = 0.0;  // L-infinity, relative to |phi^6 X0 + Y|
  double cancellation = 0.0;     // max |U + L W|
  double sup_phi = 0.0;          // extrapolated to the concentration point
  double sup_phi_exact = 0.0;
  double U_sup = 0.0;
  double Y_sup = 0.0;
};

InstabilityReport verify(const InstabilityAssembly& a);

}  // namespace elc
