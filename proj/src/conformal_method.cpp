#include "elc/conformal_method.hpp"

#include <cmath>
#include <string>

#include "elc/errors.hpp"

namespace elc {

namespace {

void check_finite(std::span<const double> v, const char* what) {
  for (double x : v)
    if (!std::isfinite(x)) throw InvalidArgument(std::string(what) + ": non-finite sample");
}

}  // namespace

Potential constant_potential(double c) {
  return [c](double) { return PotentialValue{c, 0.0, 0.0}; };
}

Potential polynomial_potential(std::vector<double> coeffs) {
  return [coeffs = std::move(coeffs)](double s) {
    PotentialValue r;
    // Horner for value and both derivatives
    for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) {
      r.d2 = r.d2 * s + 2.0 * r.d1;
      r.d1 = r.d1 * s + r.value;
      r.value = r.value * s + *it;
    }
    return r;
  };
}

void PhysicsData::validate() const {
  const Geometry& g = psi.geometry();
  require_same(g, pi.geometry(), "PhysicsData");
  require_same(g, tau.geometry(), "PhysicsData");
  require_same(g, sigma.geometry(), "PhysicsData");
  if (!V) throw InvalidArgument("PhysicsData: missing potential");
  check_finite(psi.values(), "psi");
  check_finite(pi.values(), "pi");
  check_finite(tau.values(), "tau");
  check_finite(sigma.raw(), "sigma");
}

double PhysicsData::sigma_trace_defect() const { return max_abs(trace(sigma)); }

PhysicsData zero_data(const GeometryPtr& g) {
  return PhysicsData{ScalarField(g), ScalarField(g), ScalarField(g), SymTensorField(g), constant_potential(0.0)};
}

void SystemCoefficients::validate() const {
  const Geometry& g = h.geometry();
  require_same(g, f.geometry(), "SystemCoefficients");
  require_same(g, b.geometry(), "SystemCoefficients");
  require_same(g, U.geometry(), "SystemCoefficients");
  require_same(g, X.geometry(), "SystemCoefficients");
  require_same(g, Y.geometry(), "SystemCoefficients");
  if (!(gamma > 0.0)) throw InvalidArgument("SystemCoefficients: gamma must be positive");
  for (double v : b.values())
    if (v < 0.0) throw InvalidArgument("SystemCoefficients: b must be nonnegative");
  check_finite(h.values(), "h");
  check_finite(f.values(), "f");
  check_finite(b.values(), "b");
  check_finite(U.raw(), "U");
  check_finite(X.raw(), "X");
  check_finite(Y.raw(), "Y");
}

SystemCoefficients zero_coefficients(const GeometryPtr& g) {
  return SystemCoefficients{ScalarField(g), ScalarField(g), ScalarField(g), SymTensorField(g),
                            OneFormField(g), OneFormField(g), 1.0};
}

ScalarField quadratic_source(const SystemCoefficients& C, const OneFormField& W) {
  const Geometry& g = C.geometry();
  SymTensorField S = conformal_killing_deriv(W, g);
  auto s = S.raw();
  auto u = C.U.raw();
  for (std::size_t i = 0; i < s.size(); ++i) s[i] += u[i];
  ScalarField a = pointwise_norm2(S);
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = C.b[i] + C.gamma * a[i];
  return a;
}

CoefficientFields coefficients(const PhysicsData& D) {
  D.validate();
  const Geometry& g = D.psi.geometry();
  const int n = g.dimension();
  ScalarField grad2 = pointwise_norm2(gradient(D.psi, g));
  CoefficientFields out{ScalarField(D.psi.geometry_ptr()), ScalarField(D.psi.geometry_ptr())};
  const double R = g.scalar_curvature();
  for (std::size_t i = 0; i < grad2.size(); ++i) {
    out.R_psi[i] = R - grad2[i];
    out.B[i] = 2.0 * D.V(D.psi[i]).value - (n - 1.0) / n * D.tau[i] * D.tau[i];
  }
  return out;
}

const char* to_string(Regime r) {
  switch (r) {
    case Regime::Focusing:
      return "focusing";
    case Regime::Defocusing:
      return "defocusing";
    case Regime::Mixed:
      return "mixed";
  }
  return "?";
}

Regime classify(const ScalarField& B) {
  double lo = B[0], hi = B[0];
  for (double v : B.values()) {
    if (!std::isfinite(v)) throw InvalidArgument("classify: non-finite B");
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (lo > 0.0) return Regime::Focusing;
  if (hi <= 0.0) return Regime::Defocusing;
  return Regime::Mixed;
}

SystemCoefficients normalize(const PhysicsData& D) {
  auto cf = coefficients(D);
  const GeometryPtr& gp = D.psi.geometry_ptr();
  const Geometry& g = *gp;
  const int n = g.dimension();
  const double c = (n - 2.0) / (4.0 * (n - 1.0));
  SystemCoefficients C = zero_coefficients(gp);
  for (std::size_t i = 0; i < C.h.size(); ++i) {
    C.h[i] = c * cf.R_psi[i];
    C.f[i] = c * cf.B[i];
    C.b[i] = c * D.pi[i] * D.pi[i];
  }
  C.U = D.sigma;
  C.gamma = c;
  OneFormField dtau = gradient(D.tau, g);
  OneFormField dpsi = gradient(D.psi, g);
  for (int a = 0; a < C.X.components(); ++a) {
    auto x = C.X.component(a);
    auto y = C.Y.component(a);
    auto t = dtau.component(a);
    auto p = dpsi.component(a);
    for (std::size_t i = 0; i < C.X.nodes(); ++i) {
      x[i] = -(n - 1.0) / n * t[i];
      y[i] = -D.pi[i] * p[i];
    }
  }
  return C;
}

InitialDataSet reconstruct(const ScalarField& u, const OneFormField& W, const PhysicsData& D) {
  D.validate();
  const Geometry& g = D.psi.geometry();
  require_same(g, u.geometry(), "reconstruct");
  require_same(g, W.geometry(), "reconstruct");
  for (double v : u.values())
    if (!(v > 0.0)) throw InvalidArgument("reconstruct: conformal factor must be positive");
  if (g.kind() == GeometryKind::SphereRadial)
    throw UnsupportedGeometry("reconstruct: radial reductions are not supported");
  const int n = g.dimension();
  SymTensorField K = conformal_killing_deriv(W, g);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      auto k = K.component(i, j);
      auto s = D.sigma.component(i, j);
      for (std::size_t p = 0; p < K.nodes(); ++p) {
        double phi = u[p];
        double v = (k[p] + s[p]) / (phi * phi);
        if (i == j) v += D.tau[p] / n * std::pow(phi, 4.0 / (n - 2.0));
        k[p] = v;
      }
    }
  ScalarField pit(D.pi.geometry_ptr());
  for (std::size_t p = 0; p < pit.size(); ++p) pit[p] = std::pow(u[p], -2.0 * n / (n - 2.0)) * D.pi[p];
  return InitialDataSet{u, K, D.psi, pit};
}

ConstraintResiduals constraint_residuals(const InitialDataSet& ids, const Potential& V) {
  const Geometry& g = ids.phi.geometry();
  if (g.kind() == GeometryKind::SphereRadial)
    throw UnsupportedGeometry("constraint_residuals: curvature evaluation needs a flat background");
  require_same(g, ids.K.geometry(), "constraint_residuals");
  const int n = g.dimension();
  const std::size_t N = g.node_count();
  const GeometryPtr& gp = ids.phi.geometry_ptr();
  const double p2 = 2.0 * n / (n - 2.0);

  // g~ = e^{2w} g with w = 2/(n-2) ln phi
  ScalarField w(gp);
  for (std::size_t i = 0; i < N; ++i) {
    if (!(ids.phi[i] > 0.0)) throw InvalidArgument("constraint_residuals: phi must be positive");
    w[i] = 2.0 / (n - 2.0) * std::log(ids.phi[i]);
  }
  ScalarField lap_phi = laplace_beltrami(ids.phi, g);
  OneFormField dw = gradient(w, g);
  OneFormField dpsi = gradient(ids.psi, g);
  ScalarField dpsi2 = pointwise_norm2(dpsi);
  ScalarField trK = trace(ids.K);
  ScalarField K2 = pointwise_norm2(ids.K);
  const double R = g.scalar_curvature();
  const double c = 4.0 * (n - 1.0) / (n - 2.0);

  ScalarField ham(gp);
  ScalarField tr_tilde(gp);
  for (std::size_t i = 0; i < N; ++i) {
    double phi = ids.phi[i];
    double e2 = std::exp(-2.0 * w[i]);
    double Rt = std::pow(phi, 1.0 - p2) * (c * lap_phi[i] + R * phi);
    double tr = e2 * trK[i];
    tr_tilde[i] = tr;
    double lhs = Rt + tr * tr - e2 * e2 * K2[i];
    double rhs = ids.pi[i] * ids.pi[i] + e2 * dpsi2[i] + 2.0 * V(ids.psi[i]).value;
    ham[i] = lhs - rhs;
  }

  OneFormField divK = divergence(ids.K, g);
  OneFormField dtr = gradient(tr_tilde, g);
  ScalarField flat_tr = trace(ids.K);
  OneFormField mom(gp);
  for (int a = 0; a < n; ++a) {
    auto out = mom.component(a);
    auto dv = divK.component(a);
    for (std::size_t i = 0; i < N; ++i) {
      double contr = 0.0;
      for (int m = 0; m < n; ++m) contr += dw.component(m)[i] * ids.K.component(m, a)[i];
      double div = std::exp(-2.0 * w[i]) * (dv[i] + (n - 2.0) * contr - flat_tr[i] * dw.component(a)[i]);
      out[i] = div - dtr.component(a)[i] - ids.pi[i] * dpsi.component(a)[i];
    }
  }
  return ConstraintResiduals{l2_norm(ham), l2_norm(mom)};
}

}  // namespace elc
