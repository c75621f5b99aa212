#include "elc/instability.hpp"

#include <algorithm>
#include <array>
#include <boost/numeric/odeint.hpp>
#include <cmath>
#include <numbers>
#include <string>

#include "elc/errors.hpp"

namespace elc {

namespace {

constexpr double kHalfPi = 0.5 * std::numbers::pi;

// S(t) = 1 / (1 + exp(1/t - 1/(1-t))) and its first two derivatives
std::array<double, 3> smooth_step(double t) {
  if (t <= 0.0) return {0.0, 0.0, 0.0};
  if (t >= 1.0) return {1.0, 0.0, 0.0};
  double e = 1.0 / t - 1.0 / (1.0 - t);
  if (e > 700.0) return {0.0, 0.0, 0.0};
  if (e < -700.0) return {1.0, 0.0, 0.0};
  double e1 = -1.0 / (t * t) - 1.0 / ((1.0 - t) * (1.0 - t));
  double e2 = 2.0 / (t * t * t) - 2.0 / ((1.0 - t) * (1.0 - t) * (1.0 - t));
  double g = std::exp(e);
  double g1 = g * e1, g2 = g * (e1 * e1 + e2);
  double d = 1.0 + g;
  return {1.0 / d, -g1 / (d * d), -g2 / (d * d) + 2.0 * g1 * g1 / (d * d * d)};
}

using State = std::array<double, 2>;

struct ZSystem {
  double lambda, scale;
  void operator()(const State& y, State& dy, double r) const {
    double c = std::cos(r) / std::sin(r);
    double phi = phi_bubble_sphere(3, lambda, r);
    double src = -0.75 * scale * std::pow(phi, 6);
    dy[0] = y[1];
    dy[1] = src - 2.0 * c * y[1] - (1.0 - 2.0 * c * c) * y[0];
  }
};

void check_nodes(const std::vector<double>& nodes) {
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (!(nodes[i] > 0.0 && nodes[i] < std::numbers::pi)) throw InvalidArgument("solve_Z: nodes must lie in (0, pi)");
    if (i > 0 && !(nodes[i] > nodes[i - 1])) throw InvalidArgument("solve_Z: nodes must be increasing");
  }
}

void fill_second(ZProfile& z, double lambda, double scale) {
  ZSystem sys{lambda, scale};
  z.d2Z.resize(z.r.size());
  for (std::size_t i = 0; i < z.r.size(); ++i) {
    State y{z.Z[i], z.dZ[i]}, dy;
    sys(y, dy, z.r[i]);
    z.d2Z[i] = dy[1];
  }
}

}  // namespace

double phi_bubble_sphere(int n, double lambda, double d) {
  if (n < 3) throw InvalidArgument("phi_bubble_sphere: dimension must be >= 3");
  if (!(lambda > 1.0)) throw InvalidArgument("phi_bubble_sphere: lambda must exceed 1");
  return std::pow(lambda * lambda - 1.0, 0.25 * (n - 2)) * std::pow(lambda - std::cos(d), 1.0 - 0.5 * n);
}

void EtaParams::validate() const {
  if (!(delta_left > 0.0) || !(delta_right > 0.0)) throw InvalidArgument("eta: support margins must be positive");
  if (!(width_left > 0.0) || !(width_right > 0.0)) throw InvalidArgument("eta: transition widths must be positive");
  if (delta_left + width_left > std::numbers::pi - delta_right - width_right + 1e-15)
    throw InvalidArgument("eta: transitions overlap, the support constraints cannot be met");
  if (amplitude == 0.0 || !std::isfinite(amplitude)) throw InvalidArgument("eta: the cutoff must not vanish identically");
}

EtaValue eta(const EtaParams& p, double r) {
  auto up = smooth_step((r - p.delta_left) / p.width_left);
  auto down = smooth_step((std::numbers::pi - p.delta_right - r) / p.width_right);
  double a1 = up[1] / p.width_left, a2 = up[2] / (p.width_left * p.width_left);
  double b1 = -down[1] / p.width_right, b2 = down[2] / (p.width_right * p.width_right);
  EtaValue v;
  v.value = p.amplitude * up[0] * down[0];
  v.d1 = p.amplitude * (a1 * down[0] + up[0] * b1);
  v.d2 = p.amplitude * (a2 * down[0] + 2.0 * a1 * b1 + up[0] * b2);
  return v;
}

ZProfile solve_Z(double lambda, const std::vector<double>& nodes, double rhs_scale, const OdeOptions& opts) {
  if (!(lambda > 1.0)) throw InvalidArgument("solve_Z: lambda must exceed 1");
  check_nodes(nodes);
  namespace odeint = boost::numeric::odeint;
  ZSystem sys{lambda, rhs_scale};
  ZProfile out;
  out.r = nodes;
  out.Z.assign(nodes.size(), 0.0);
  out.dZ.assign(nodes.size(), 0.0);

  auto sweep = [&](std::vector<std::size_t> idx, double direction) {
    if (idx.empty()) return;
    std::vector<double> times{kHalfPi};
    for (auto i : idx) times.push_back(nodes[i]);
    State y{1.0, 0.0};
    std::size_t k = 0;
    auto observe = [&](const State& s, double) {
      if (k > 0) {
        out.Z[idx[k - 1]] = s[0];
        out.dZ[idx[k - 1]] = s[1];
      }
      ++k;
    };
    auto stepper = odeint::make_controlled(opts.abs_tol, opts.rel_tol, odeint::runge_kutta_dopri5<State>());
    double dt = direction * 1e-3;
    double t = times.front();
    std::size_t obs = 0;
    observe(y, t);
    ++obs;
    // integrate node by node so that a collapsing step size is caught
    while (obs < times.size()) {
      double target = times[obs];
      while (direction * (target - t) > 0.0) {
        if (direction * (t + dt - target) > 0.0) dt = target - t;
        auto res = stepper.try_step(sys, y, t, dt);
        if (res == odeint::fail && std::abs(dt) < opts.min_step)
          throw StepSizeUnderflow("solve_Z: step size underflow near r = " + std::to_string(t));
      }
      observe(y, t);
      ++obs;
      dt = direction * std::max(std::abs(dt), 1e-6);
    }
  };

  std::vector<std::size_t> right, left;
  for (std::size_t i = 0; i < nodes.size(); ++i) (nodes[i] >= kHalfPi ? right : left).push_back(i);
  std::reverse(left.begin(), left.end());
  sweep(right, 1.0);
  sweep(left, -1.0);
  fill_second(out, lambda, rhs_scale);
  return out;
}

ZProfile solve_Z_rk4(double lambda, const std::vector<double>& nodes, double rhs_scale, int substeps) {
  if (!(lambda > 1.0)) throw InvalidArgument("solve_Z_rk4: lambda must exceed 1");
  if (substeps < 1) throw InvalidArgument("solve_Z_rk4: substeps must be positive");
  check_nodes(nodes);
  ZSystem sys{lambda, rhs_scale};
  ZProfile out;
  out.r = nodes;
  out.Z.assign(nodes.size(), 0.0);
  out.dZ.assign(nodes.size(), 0.0);
  auto rk4 = [&](State& y, double t0, double t1) {
    double h = (t1 - t0) / substeps;
    double t = t0;
    for (int s = 0; s < substeps; ++s) {
      State k1, k2, k3, k4, tmp;
      sys(y, k1, t);
      for (int c = 0; c < 2; ++c) tmp[c] = y[c] + 0.5 * h * k1[c];
      sys(tmp, k2, t + 0.5 * h);
      for (int c = 0; c < 2; ++c) tmp[c] = y[c] + 0.5 * h * k2[c];
      sys(tmp, k3, t + 0.5 * h);
      for (int c = 0; c < 2; ++c) tmp[c] = y[c] + h * k3[c];
      sys(tmp, k4, t + h);
      for (int c = 0; c < 2; ++c) y[c] += h / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
      t += h;
    }
  };
  State y{1.0, 0.0};
  double t = kHalfPi;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i] < kHalfPi) continue;
    rk4(y, t, nodes[i]);
    t = nodes[i];
    out.Z[i] = y[0];
    out.dZ[i] = y[1];
  }
  y = {1.0, 0.0};
  t = kHalfPi;
  for (std::size_t i = nodes.size(); i-- > 0;) {
    if (nodes[i] >= kHalfPi) continue;
    rk4(y, t, nodes[i]);
    t = nodes[i];
    out.Z[i] = y[0];
    out.dZ[i] = y[1];
  }
  fill_second(out, lambda, rhs_scale);
  return out;
}

InstabilityAssembly assemble(double lambda, const EtaParams& ep, int resolution, double eps) {
  if (!(lambda > 1.0)) throw InvalidArgument("assemble: lambda must exceed 1");
  ep.validate();
  InstabilityAssembly a;
  a.lambda = lambda;
  a.eta = ep;
  a.grid = Geometry::sphere_radial(3, resolution, eps);
  const auto& g = *a.grid;
  const std::size_t N = g.node_count();
  std::vector<double> r(N);
  for (std::size_t i = 0; i < N; ++i) r[i] = g.coordinate(i, 0);
  a.phi = ScalarField(a.grid);
  a.eta_values = ScalarField(a.grid);
  a.W = OneFormField(a.grid);
  a.X0 = OneFormField(a.grid);
  a.Y = OneFormField(a.grid);
  a.Z = solve_Z(lambda, r);
  auto w = a.W.component(0);
  auto x0 = a.X0.component(0);
  auto y = a.Y.component(0);
  for (std::size_t i = 0; i < N; ++i) {
    auto e = eta(ep, r[i]);
    a.phi[i] = phi_bubble_sphere(3, lambda, r[i]);
    a.eta_values[i] = e.value;
    w[i] = e.value * a.Z.Z[i];
    x0[i] = e.value;
    double cot = std::cos(r[i]) / std::sin(r[i]);
    y[i] = -4.0 / 3.0 * (2.0 * e.d1 * a.Z.dZ[i] + e.d2 * a.Z.Z[i] + 2.0 * cot * e.d1 * a.Z.Z[i]);
  }
  a.U = conformal_killing_deriv(a.W, g);
  for (double& v : a.U.raw()) v = -v;
  return a;
}

InstabilityReport verify(const InstabilityAssembly& a) {
  const auto& g = *a.grid;
  const std::size_t N = g.node_count();
  InstabilityReport rep;
  rep.lambda = a.lambda;

  auto LW = conformal_killing_deriv(a.W, g);
  SymTensorField S(a.grid);
  for (std::size_t i = 0; i < S.raw().size(); ++i) S.raw()[i] = a.U.raw()[i] + LW.raw()[i];
  rep.cancellation = max_abs(S.raw());
  auto q = pointwise_norm2(S);

  auto lap = laplace_beltrami(a.phi, g);
  double res = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    double p = a.phi[i];
    double rhs = 0.75 * std::pow(p, 5) + q[i] / std::pow(p, 7);
    res = std::max(res, std::abs(lap[i] + 0.75 * p - rhs));
    scale = std::max({scale, std::abs(lap[i]), 0.75 * std::abs(p), std::abs(rhs)});
  }
  rep.scalar_residual = res / scale;

  auto LL = lame(a.W, g);
  auto lw = LL.component(0);
  auto x0 = a.X0.component(0);
  auto y = a.Y.component(0);
  double vres = 0.0, vscale = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    double rhs = std::pow(a.phi[i], 6) * x0[i] + y[i];
    vres = std::max(vres, std::abs(lw[i] - rhs));
    vscale = std::max(vscale, std::abs(rhs));
  }
  rep.vector_residual = vscale > 0.0 ? vres / vscale : vres;

  // phi is smooth in r^2 at the pole: quadratic extrapolation to r = 0
  double r0 = g.coordinate(0, 0), r1 = g.coordinate(1, 0), r2 = g.coordinate(2, 0);
  double s0 = r0 * r0, s1 = r1 * r1, s2 = r2 * r2;
  double l0 = s1 * s2 / ((s0 - s1) * (s0 - s2));
  double l1 = s0 * s2 / ((s1 - s0) * (s1 - s2));
  double l2 = s0 * s1 / ((s2 - s0) * (s2 - s1));
  double pole = l0 * a.phi[0] + l1 * a.phi[1] + l2 * a.phi[2];
  rep.sup_phi = std::max(pole, max_abs(a.phi));
  rep.sup_phi_exact = std::pow(a.lambda + 1.0, 0.25) * std::pow(a.lambda - 1.0, -0.25);

  auto un = pointwise_norm2(a.U);
  rep.U_sup = std::sqrt(max_abs(un));
  rep.Y_sup = max_abs(y);
  return rep;
}

}  // namespace elc
