#include <cmath>
#include <numbers>

#include "doctest.h"
#include "elc/errors.hpp"
#include "elc/instability.hpp"

using namespace elc;

TEST_CASE("phi_bubble_sphere examples") {
  CHECK(phi_bubble_sphere(3, 1.25, 0.0) == doctest::Approx(std::sqrt(3.0)).epsilon(1e-14));
  CHECK(phi_bubble_sphere(3, 1e8, 1.0) == doctest::Approx(1.0).epsilon(1e-7));
  CHECK_THROWS_AS(phi_bubble_sphere(3, 1.0, 0.0), InvalidArgument);
}

TEST_CASE("phi_bubble_sphere solves the Yamabe-type equation") {
  for (int n : {3, 4, 5}) {
    auto g = Geometry::sphere_radial(n, 4096);
    for (double lam : {1.5, 1.01}) {
      auto phi = ScalarField::from_function(g, [&](auto x) { return phi_bubble_sphere(n, lam, x[0]); });
      auto lap = laplace_beltrami(phi, *g);
      const double c = n * (n - 2.0) / 4.0, p = (n + 2.0) / (n - 2.0);
      double res = 0.0, scale = 0.0;
      for (std::size_t i = 0; i < phi.size(); ++i) {
        double rhs = c * std::pow(phi[i], p);
        res = std::max(res, std::abs(lap[i] + c * phi[i] - rhs));
        scale = std::max(scale, rhs);
      }
      CHECK(res / scale < 1e-6);
    }
  }
  // the distance convention r = d (instead of cos d) does not solve it
  auto g = Geometry::sphere_radial(3, 4096);
  auto bad = ScalarField::from_function(g, [](auto x) { return std::pow(1.25 * 1.25 - 1.0, 0.25) / std::sqrt(1.25 - x[0] / 3.0); });
  auto lap = laplace_beltrami(bad, *g);
  double res = 0.0;
  for (std::size_t i = 0; i < bad.size(); ++i) res = std::max(res, std::abs(lap[i] + 0.75 * bad[i] - 0.75 * std::pow(bad[i], 5)));
  CHECK(res > 1e-2);
}

TEST_CASE("eta cutoff") {
  EtaParams e;
  CHECK(eta(e, 0.5).value == 0.0);
  CHECK(eta(e, std::numbers::pi - 0.5).value == 0.0);
  CHECK(eta(e, 0.5 * std::numbers::pi).value == doctest::Approx(1.0));
  // derivatives against finite differences
  EtaParams a;
  a.delta_left = 0.3;
  a.width_left = 1.5;
  for (double r : {0.5, 1.0, 1.4, 2.0}) {
    const double h = 1e-5;
    CHECK(eta(a, r).d1 == doctest::Approx((eta(a, r + h).value - eta(a, r - h).value) / (2 * h)).epsilon(1e-7).scale(1e-3));
    CHECK(eta(a, r).d2 == doctest::Approx((eta(a, r + h).d1 - eta(a, r - h).d1) / (2 * h)).epsilon(1e-6).scale(1e-3));
  }
  EtaParams zero;
  zero.amplitude = 0.0;
  CHECK_THROWS_AS(zero.validate(), InvalidArgument);
  EtaParams overlap;
  overlap.delta_left = 1.4;
  overlap.width_left = 0.5;
  CHECK_THROWS_AS(overlap.validate(), InvalidArgument);
}

TEST_CASE("solve_Z initial data and second derivative") {
  const double lam = 1.25;
  std::vector<double> nodes{0.5, 1.0, 0.5 * std::numbers::pi, 2.0, 2.5};
  auto z = solve_Z(lam, nodes);
  CHECK(z.Z[2] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(std::abs(z.dZ[2]) < 1e-14);
  double phi = std::pow(lam * lam - 1.0, 0.25) / std::sqrt(lam);
  CHECK(z.d2Z[2] == doctest::Approx(-1.0 - 0.75 * std::pow(phi, 6)).epsilon(1e-12));
  CHECK(z.d2Z[2] == doctest::Approx(-1.1622).epsilon(1e-4));
}

TEST_CASE("solve_Z agrees with an independent integrator") {
  std::vector<double> nodes;
  for (int i = 0; i <= 40; ++i) nodes.push_back(0.2 + i * (std::numbers::pi - 0.4) / 40.0);
  for (double scale : {0.0, 1.0}) {
    auto a = solve_Z(1.1, nodes, scale);
    auto b = solve_Z_rk4(1.1, nodes, scale, 400);
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      CHECK(a.Z[i] == doctest::Approx(b.Z[i]).epsilon(1e-9).scale(1.0));
      CHECK(a.dZ[i] == doctest::Approx(b.dZ[i]).epsilon(1e-9).scale(1.0));
    }
  }
  // the reported second derivative closes the homogeneous equation
  auto h = solve_Z(1.1, nodes, 0.0);
  for (std::size_t i = 1; i + 1 < nodes.size(); ++i) {
    double r = nodes[i], c = std::cos(r) / std::sin(r);
    CHECK(std::abs(h.d2Z[i] + 2.0 * c * h.dZ[i] + (1.0 - 2.0 * c * c) * h.Z[i]) < 1e-12);
  }
}

TEST_CASE("solve_Z reports step-size collapse") {
  OdeOptions o;
  o.abs_tol = 1e-300;
  o.rel_tol = 1e-300;
  o.min_step = 1.0;
  CHECK_THROWS_AS(solve_Z(1.1, {0.5, 1.0}, 1.0, o), StepSizeUnderflow);
  CHECK_THROWS_AS(solve_Z(1.1, {1.0, 0.5}), InvalidArgument);
  CHECK_THROWS_AS(solve_Z(1.1, {0.0, 0.5}), InvalidArgument);
}

TEST_CASE("assembly structure") {
  auto a = assemble(1.1);
  auto w = a.W.component(0);
  for (std::size_t i = 0; i < a.grid->node_count(); ++i) {
    double r = a.grid->coordinate(i, 0);
    if (r <= a.eta.delta_left || r >= std::numbers::pi - a.eta.delta_right) CHECK(w[i] == 0.0);
  }
  auto tr = trace(a.U);
  CHECK(max_abs(tr) < 1e-12);
  auto rep = verify(a);
  CHECK(rep.cancellation < 1e-14);

  // with pi/2 on the grid and eta rising through pi/2, (L W)_rr(pi/2) = (4/3) eta'(pi/2)
  EtaParams e;
  e.delta_left = 0.3;
  e.width_left = 1.5;
  e.delta_right = 0.5;
  auto b = assemble(1.1, e, 4097);
  const std::size_t mid = 2048;
  CHECK(b.grid->coordinate(mid, 0) == doctest::Approx(0.5 * std::numbers::pi).epsilon(1e-15));
  double lw = -b.U.slot(0)[mid];
  CHECK(lw == doctest::Approx(4.0 / 3.0 * eta(e, 0.5 * std::numbers::pi).d1).epsilon(1e-8));
  CHECK(std::abs(lw) > 0.1);

  CHECK_THROWS_AS(assemble(1.0), InvalidArgument);
  EtaParams zero;
  zero.amplitude = 0.0;
  CHECK_THROWS_AS(assemble(1.1, zero), InvalidArgument);
}

TEST_CASE("instability family") {
  double prev_sup = 0.0;
  std::vector<double> sums;
  std::vector<std::vector<double>> Ys;
  for (double lam : {1.5, 1.25, 1.1, 1.05, 1.01}) {
    auto a = assemble(lam);
    auto r = verify(a);
    CHECK(r.scalar_residual < 1e-6);
    CHECK(r.vector_residual < 1e-6);
    CHECK(std::abs(r.sup_phi - r.sup_phi_exact) < 1e-6);
    CHECK(r.sup_phi > prev_sup);
    prev_sup = r.sup_phi;
    sums.push_back(r.U_sup + r.Y_sup);
    auto y = a.Y.component(0);
    Ys.emplace_back(y.begin(), y.end());
  }
  CHECK(prev_sup == doctest::Approx(std::pow(2.01, 0.25) * std::pow(0.01, -0.25)).epsilon(1e-12));
  CHECK(prev_sup == doctest::Approx(3.7667).epsilon(1e-3));
  double lo = *std::min_element(sums.begin(), sums.end()), hi = *std::max_element(sums.begin(), sums.end());
  CHECK((hi - lo) / lo < 0.05);
  // Cauchy differences of Y along the sequence shrink
  auto diff = [](const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
  };
  for (std::size_t k = 2; k < Ys.size(); ++k) CHECK(diff(Ys[k], Ys[k - 1]) < diff(Ys[k - 1], Ys[k - 2]));
}
