#pragma once

#include <optional>
#include <vector>

#include "elc/conformal_method.hpp"
#include "elc/geometry.hpp"

namespace elc {

// Ball in grid coordinates. On the torus distances use the nearest periodic
// image; on the radial sphere the ball is the interval |r - center[0]| <= radius.
struct Ball {
  std::vector<double> center;
  double radius = 0.0;
};

// sup u / inf u over the nodes of `inner`; u must be positive on `outer`.
double harnack_ratio(const ScalarField& u, const Ball& inner, const Ball& outer);

struct PohozaevOptions {
  int radial_nodes = 24;  // Gauss nodes in the radius
  int sphere_nodes = 16;  // Gauss nodes per polar angle on the sphere
  std::optional<std::vector<double>> direction;  // translation identity along Y
};

struct PohozaevReport {
  // Dilation identity: interior = int (x.grad v + (n-2)/2 v) Delta v,
  // boundary = int_{dB} (r/2 |grad v|^2 - (n-2)/2 v d_nu v - r (d_nu v)^2).
  double interior = 0.0;
  double boundary = 0.0;
  double defect = 0.0;
  // Split of the interior integral by the terms of Delta v = -h v + f v^{2*-1} + a v^{-2*-1}.
  double K1 = 0.0;
  double K2 = 0.0;
  double K3 = 0.0;
  // Translation identity along the requested direction.
  double translation_interior = 0.0;
  double translation_boundary = 0.0;
  double translation_defect = 0.0;
};

// v lives on a chart; the coefficients (and W, if given) on the same chart.
// Delta v in the interior integrand is replaced by the right-hand side of the
// scalar equation. Field values off the grid come from tensor-product cubic
// interpolation, derivatives from the fourth-order chart differences.
PohozaevReport pohozaev_defect(const ScalarField& v, const SystemCoefficients& C, const Ball& ball,
                               const OneFormField* W = nullptr, const PohozaevOptions& opts = {});

struct StabilityMargin {
  bool satisfied = false;
  double margin = 0.0;
};

// margin = (n-2)/(4(n-1)) Rg - C(n) lap_f0 / f0 - h0, satisfied iff margin > 0.
StabilityMargin stability_condition(double h0, double f0, double lap_f0, double Rg, int n);

// L-infinity defects of the three conformal covariance identities for
// g = phi^{4/(n-2)} xi on a chart:
//   scalar:  Delta_xi(phi v) = phi^{2*-1} (Delta_g v + (n-2)/(4(n-1)) R(g) v)
//   killing: phi^{4/(n-2)} L_xi(phi^{-4/(n-2)} X) = L_g X
//   lame:    Lame_xi(Z) - 2* d_k(ln phi) (L_xi Z)_{k.} = Lame_g X, Z = phi^{-4/(n-2)} X
// The left sides use the flat chart operators; the right sides are built from
// the Christoffel symbols and curvature of g computed by differencing g.
struct CovarianceResiduals {
  double scalar = 0.0;
  double killing = 0.0;
  double lame = 0.0;
};

CovarianceResiduals conformal_covariance_residuals(const ScalarField& v, const OneFormField& X, const ScalarField& phi);

}  // namespace elc
