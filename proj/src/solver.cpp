#include "elc/solver.hpp"

#include <algorithm>
#include <boost/math/tools/roots.hpp>
#include <cmath>
#include <limits>
#include <string>

#include "elc/errors.hpp"
#include "krylov.hpp"

namespace elc {

using detail::Vec;

namespace {

double crit_exponent(int n) { return 2.0 * n / (n - 2.0); }

bool is_zero(const OneFormField& W) {
  for (double v : W.raw())
    if (v != 0.0) return false;
  return true;
}

// R(u) = Delta u + h u - f u^{p-1} - a u^{-p-1}
Vec scalar_equation(const Vec& u, const ScalarField& a, const SystemCoefficients& C) {
  const double p = crit_exponent(C.geometry().dimension());
  ScalarField uf(C.geometry_ptr(), u);
  ScalarField lap = laplace_beltrami(uf, C.geometry());
  Vec r(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    double ui = u[i];
    r[i] = lap[i] + C.h[i] * ui - C.f[i] * std::pow(ui, p - 1.0) - a[i] * std::pow(ui, -p - 1.0);
  }
  return r;
}

double norm2(const Vec& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double norm_inf(const Vec& v) {
  double s = 0.0;
  for (double x : v) s = std::max(s, std::abs(x));
  return s;
}

// u^{2*} X + Y
void momentum_rhs(const ScalarField& u, const SystemCoefficients& C, OneFormField& rhs) {
  const double p = crit_exponent(C.geometry().dimension());
  for (int a = 0; a < rhs.components(); ++a) {
    auto out = rhs.component(a);
    auto x = C.X.component(a);
    auto y = C.Y.component(a);
    for (std::size_t i = 0; i < rhs.nodes(); ++i) out[i] = std::pow(u[i], p) * x[i] + y[i];
  }
}

double mean_of(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

void SolveOptions::validate() const {
  if (max_outer < 1 || max_newton < 1) throw InvalidArgument("SolveOptions: iteration limits must be positive");
  if (!(tol_residual > 0.0)) throw InvalidArgument("SolveOptions: tolerance must be positive");
  if (!(damping > 0.0 && damping <= 1.0)) throw InvalidArgument("SolveOptions: damping must lie in (0, 1]");
  if (!(u_floor > 0.0)) throw InvalidArgument("SolveOptions: u_floor must be positive");
}

double constant_balance_root(double h, double f, double a, int n) {
  const double p = crit_exponent(n);
  auto phi = [&](double t) { return h * t - f * std::pow(t, p - 1.0) - a * std::pow(t, -p - 1.0); };
  const int samples = 800;
  const double lo = -8.0, hi = 8.0;
  double t_prev = std::pow(10.0, lo);
  double v_prev = phi(t_prev);
  double best_t = 1.0, best_q = std::numeric_limits<double>::infinity();
  for (int i = 1; i <= samples; ++i) {
    double t = std::pow(10.0, lo + (hi - lo) * i / samples);
    double v = phi(t);
    if (v_prev == 0.0) return t_prev;
    if ((v_prev < 0.0) != (v < 0.0)) {
      boost::uintmax_t iters = 200;
      auto r = boost::math::tools::toms748_solve(phi, t_prev, t, v_prev, v,
                                                 boost::math::tools::eps_tolerance<double>(52), iters);
      return 0.5 * (r.first + r.second);
    }
    double scale = std::abs(h) * t + std::abs(f) * std::pow(t, p - 1.0) + a * std::pow(t, -p - 1.0);
    double q = scale > 0.0 ? std::abs(v) / scale : 0.0;
    if (q < best_q) {
      best_q = q;
      best_t = t;
    }
    t_prev = t;
    v_prev = v;
  }
  return best_t;
}

double coercivity_margin(const ScalarField& h, int steps) {
  const Geometry& g = h.geometry();
  const GeometryPtr& gp = h.geometry_ptr();
  detail::LinOp A = [&](const Vec& x, Vec& y) {
    ScalarField xf(gp, x);
    ScalarField l = laplace_beltrami(xf, g);
    y.resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = l[i] + h[i] * x[i];
  };
  // Starting from the constant mode puts mean(h), the Rayleigh quotient of
  // the constants, inside the Krylov space: h <= 0 on average is caught at once.
  Vec start(h.size(), 1.0);
  return detail::lanczos_min_ritz(A, start, steps);
}

MomentumSolve solve_momentum(const ScalarField& u, const SystemCoefficients& C) {
  require_same(u.geometry(), C.geometry(), "solve_momentum");
  OneFormField rhs(C.geometry_ptr());
  momentum_rhs(u, C, rhs);
  auto inv = lame_invert(rhs, C.geometry());
  return MomentumSolve{std::move(inv.W), inv.defect};
}

double scalar_residual(const ScalarField& u, const OneFormField& W, const SystemCoefficients& C) {
  require_same(u.geometry(), C.geometry(), "scalar_residual");
  ScalarField a = quadratic_source(C, W);
  Vec uv(u.values().begin(), u.values().end());
  return norm_inf(scalar_equation(uv, a, C));
}

double momentum_residual(const ScalarField& u, const OneFormField& W, const SystemCoefficients& C) {
  require_same(u.geometry(), C.geometry(), "momentum_residual");
  OneFormField rhs(C.geometry_ptr());
  momentum_rhs(u, C, rhs);
  OneFormField lw = lame(W, C.geometry());
  double r = 0.0;
  for (int a = 0; a < rhs.components(); ++a) {
    auto f = rhs.component(a);
    double m = mean_of(f);
    auto l = lw.component(a);
    for (std::size_t i = 0; i < rhs.nodes(); ++i) r = std::max(r, std::abs(l[i] - (f[i] - m)));
  }
  return r;
}

ScalarField solve_scalar(const OneFormField& W, const SystemCoefficients& C, const SolveOptions& opts,
                         ScalarSolveInfo* info) {
  opts.validate();
  C.validate();
  const Geometry& g = C.geometry();
  const GeometryPtr& gp = C.geometry_ptr();
  require_same(W.geometry(), g, "solve_scalar");
  if (g.kind() != GeometryKind::Torus) throw UnsupportedGeometry("solve_scalar: torus geometry required");
  const int n = g.dimension();
  const double p = crit_exponent(n);

  if (opts.check_coercivity) {
    double m = coercivity_margin(C.h, opts.lanczos_steps);
    if (!(m > 1e-12))
      throw NonCoercive("solve_scalar: Delta + h is not coercive (smallest Ritz value " + std::to_string(m) + ")");
  }

  ScalarField a = quadratic_source(C, W);
  Vec u;
  if (opts.initial_guess) {
    require_same(opts.initial_guess->geometry(), g, "solve_scalar initial guess");
    u.assign(opts.initial_guess->values().begin(), opts.initial_guess->values().end());
  } else {
    double t = opts.initial_constant ? *opts.initial_constant
                                     : constant_balance_root(mean(C.h), mean(C.f), mean(a), n);
    u.assign(g.node_count(), t);
  }
  for (double& v : u) v = std::max(v, 2.0 * opts.u_floor);

  const std::size_t N = u.size();
  Vec R = scalar_equation(u, a, C);
  double rinf = norm_inf(R);
  int step = 0;
  auto degenerate = [&]() {
    return *std::max_element(u.begin(), u.end()) < 10.0 * opts.u_floor;
  };

  while (rinf >= opts.tol_residual) {
    if (step >= opts.max_newton) {
      if (degenerate())
        throw DegenerateData("solve_scalar: iterate collapsed onto u_floor; data admit no positive solution");
      throw NewtonDiverged("solve_scalar: no convergence in " + std::to_string(opts.max_newton) +
                           " Newton steps (residual " + std::to_string(rinf) + ")");
    }
    ++step;
    Vec q(N);
    double qmean = 0.0, qmax = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      q[i] = C.h[i] - (p - 1.0) * C.f[i] * std::pow(u[i], p - 2.0) + (p + 1.0) * a[i] * std::pow(u[i], -p - 2.0);
      qmean += q[i];
      qmax = std::max(qmax, std::abs(q[i]));
    }
    qmean /= static_cast<double>(N);
    double shift = qmean > 1e-3 * (1.0 + qmax) ? qmean : std::max(std::abs(qmean), 1e-3 * (1.0 + qmax));

    detail::LinOp J = [&](const Vec& x, Vec& y) {
      ScalarField xf(gp, x);
      ScalarField l = laplace_beltrami(xf, g);
      y.resize(N);
      for (std::size_t i = 0; i < N; ++i) y[i] = l[i] + q[i] * x[i];
    };
    detail::LinOp P = [&](const Vec& x, Vec& y) {
      ScalarField xf(gp, x);
      ScalarField s = shifted_poisson_invert(xf, shift, g);
      y.assign(s.values().begin(), s.values().end());
    };
    Vec rhs(N), delta(N, 0.0);
    for (std::size_t i = 0; i < N; ++i) rhs[i] = -R[i];
    double rtol = std::clamp(1e-2 * opts.tol_residual / rinf, 1e-13, 1e-4);
    detail::gmres(J, P, rhs, delta, rtol, opts.gmres_restart, opts.gmres_max_iter);

    const double r0 = norm2(R);
    double t = 1.0;
    bool accepted = false, any_positive = false;
    Vec cand(N), Rc;
    for (int half = 0; half < 50; ++half, t *= 0.5) {
      bool ok = true;
      for (std::size_t i = 0; i < N; ++i) {
        cand[i] = u[i] + t * delta[i];
        if (!(cand[i] > opts.u_floor)) ok = false;
      }
      if (!ok) continue;
      any_positive = true;
      Rc = scalar_equation(cand, a, C);
      if (norm2(Rc) <= (1.0 - 1e-4 * t) * r0) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      if (degenerate())
        throw DegenerateData("solve_scalar: iterate collapsed onto u_floor; data admit no positive solution");
      if (!any_positive) throw PositivityLost("solve_scalar: line search could not keep u above u_floor");
      throw NewtonDiverged("solve_scalar: line search stalled at residual " + std::to_string(rinf));
    }
    u.swap(cand);
    R.swap(Rc);
    rinf = norm_inf(R);
    if (degenerate())
      throw DegenerateData("solve_scalar: iterate collapsed onto u_floor; data admit no positive solution");
  }
  if (info) {
    info->newton_steps = step;
    info->residual = rinf;
  }
  return ScalarField(gp, std::move(u));
}

Solution solve_system(const SystemCoefficients& C, const SolveOptions& opts) {
  opts.validate();
  C.validate();
  const Geometry& g = C.geometry();
  const GeometryPtr& gp = C.geometry_ptr();
  if (g.kind() != GeometryKind::Torus) throw UnsupportedGeometry("solve_system: torus geometry required");

  Solution sol;
  if (is_zero(C.X) && is_zero(C.Y)) {
    ScalarSolveInfo info;
    sol.W = OneFormField(gp);
    sol.u = solve_scalar(sol.W, C, opts, &info);
    sol.scalar_residual = scalar_residual(sol.u, sol.W, C);
    sol.momentum_residual = momentum_residual(sol.u, sol.W, C);
    sol.iterations = 1;
    sol.newton_steps = info.newton_steps;
    sol.converged = sol.scalar_residual < opts.tol_residual;
    return sol;
  }

  if (opts.check_coercivity) {
    double m = coercivity_margin(C.h, opts.lanczos_steps);
    if (!(m > 1e-12))
      throw NonCoercive("solve_system: Delta + h is not coercive (smallest Ritz value " + std::to_string(m) + ")");
  }
  SolveOptions inner = opts;
  inner.check_coercivity = false;

  ScalarField u(gp);
  if (opts.initial_guess) {
    require_same(opts.initial_guess->geometry(), g, "solve_system initial guess");
    u = *opts.initial_guess;
  } else {
    double t = opts.initial_constant
                   ? *opts.initial_constant
                   : constant_balance_root(mean(C.h), mean(C.f), mean(quadratic_source(C, OneFormField(gp))),
                                           g.dimension());
    u = ScalarField(gp, t);
  }

  MomentumSolve ms = solve_momentum(u, C);
  double first = -1.0;
  for (int k = 1; k <= opts.max_outer; ++k) {
    inner.initial_guess = u;
    ScalarSolveInfo info;
    ScalarField us = solve_scalar(ms.W, C, inner, &info);
    sol.newton_steps += info.newton_steps;
    const double d = opts.damping;
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = (1.0 - d) * u[i] + d * us[i];
    ms = solve_momentum(u, C);
    sol.iterations = k;
    sol.scalar_residual = scalar_residual(u, ms.W, C);
    sol.momentum_residual = momentum_residual(u, ms.W, C);
    if (!std::isfinite(sol.scalar_residual) || !std::isfinite(sol.momentum_residual))
      throw OuterDiverged("solve_system: non-finite residual in outer iteration " + std::to_string(k));
    if (first < 0.0) first = sol.scalar_residual;
    if (sol.scalar_residual > 1e8 * std::max(first, 1.0))
      throw OuterDiverged("solve_system: outer residual grew without bound");
    if (sol.scalar_residual < opts.tol_residual && sol.momentum_residual < opts.tol_residual) {
      sol.converged = true;
      break;
    }
  }
  sol.u = std::move(u);
  sol.W = std::move(ms.W);
  sol.kernel_defect = ms.kernel_defect;
  return sol;
}

SystemCoefficients manufactured_forcing(const ScalarField& u_star, const OneFormField& W_star,
                                        const SystemCoefficients& C, double u_floor) {
  const Geometry& g = C.geometry();
  require_same(u_star.geometry(), g, "manufactured_forcing");
  require_same(W_star.geometry(), g, "manufactured_forcing");
  for (double v : u_star.values())
    if (!(v > u_floor)) throw InvalidArgument("manufactured_forcing: u* must exceed u_floor");
  const double p = crit_exponent(g.dimension());
  SystemCoefficients out = C;
  ScalarField a = quadratic_source(C, W_star);
  ScalarField lap = laplace_beltrami(u_star, g);
  for (std::size_t i = 0; i < out.h.size(); ++i) {
    double u = u_star[i];
    out.h[i] = (C.f[i] * std::pow(u, p - 1.0) + a[i] * std::pow(u, -p - 1.0) - lap[i]) / u;
  }
  OneFormField lw = lame(W_star, g);
  for (int c = 0; c < lw.components(); ++c) {
    auto y = out.Y.component(c);
    auto l = lw.component(c);
    auto x = C.X.component(c);
    for (std::size_t i = 0; i < lw.nodes(); ++i) y[i] = l[i] - std::pow(u_star[i], p) * x[i];
  }
  return out;
}

}  // namespace elc
