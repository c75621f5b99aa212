#pragma once

#include <functional>
#include <vector>

#include "elc/geometry.hpp"

namespace elc {

struct PotentialValue {
  double value = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
};

using Potential = std::function<PotentialValue(double)>;

Potential constant_potential(double c);
// V(s) = sum_k coeffs[k] s^k
Potential polynomial_potential(std::vector<double> coeffs);

struct PhysicsData {
  ScalarField psi;
  ScalarField pi;
  ScalarField tau;
  SymTensorField sigma;
  Potential V;

  // Throws on mismatched geometries or non-finite samples.
  void validate() const;
  // Max |tr_g sigma|; a nonzero value is tolerated and only reported.
  double sigma_trace_defect() const;
};

// Convenience constructor: all fields zero, V = 0.
PhysicsData zero_data(const GeometryPtr& g);

struct SystemCoefficients {
  ScalarField h;
  ScalarField f;
  ScalarField b;
  SymTensorField U;
  OneFormField X;
  OneFormField Y;
  double gamma = 1.0;

  const Geometry& geometry() const { return h.geometry(); }
  const GeometryPtr& geometry_ptr() const { return h.geometry_ptr(); }
  void validate() const;
};

SystemCoefficients zero_coefficients(const GeometryPtr& g);

// a(W) = b + gamma |U + L_g W|^2
ScalarField quadratic_source(const SystemCoefficients& C, const OneFormField& W);

struct CoefficientFields {
  ScalarField R_psi;
  ScalarField B;
};

CoefficientFields coefficients(const PhysicsData& D);

enum class Regime { Focusing, Defocusing, Mixed };
const char* to_string(Regime r);
Regime classify(const ScalarField& B);

SystemCoefficients normalize(const PhysicsData& D);

// (g~, K~, psi~, pi~) with g~ = phi^{4/(n-2)} g. K~ is stored in the
// background coordinate frame.
struct InitialDataSet {
  ScalarField phi;
  SymTensorField K;
  ScalarField psi;
  ScalarField pi;
};

InitialDataSet reconstruct(const ScalarField& u, const OneFormField& W, const PhysicsData& D);

struct ConstraintResiduals {
  double ham = 0.0;
  double mom = 0.0;
};

// L2 norms (background volume) of the Hamiltonian and momentum defects.
// Flat backgrounds only (torus, chart).
ConstraintResiduals constraint_residuals(const InitialDataSet& ids, const Potential& V);

}  // namespace elc
