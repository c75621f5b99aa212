#include <cmath>

#include "doctest.h"
#include "elc/conformal_method.hpp"
#include "elc/errors.hpp"

using namespace elc;

TEST_CASE("potential evaluators") {
  auto V = polynomial_potential({1.0, -2.0, 3.0});
  auto v = V(2.0);
  CHECK(v.value == doctest::Approx(1.0 - 4.0 + 12.0));
  CHECK(v.d1 == doctest::Approx(-2.0 + 12.0));
  CHECK(v.d2 == doctest::Approx(6.0));
  CHECK(constant_potential(4.0)(7.0).value == 4.0);
}

TEST_CASE("coefficients examples") {
  auto g = Geometry::torus(3, 8);
  auto D = zero_data(g);
  D.V = constant_potential(1.0);
  auto cf = coefficients(D);
  for (double b : cf.B.values()) CHECK(b == doctest::Approx(2.0));
  for (double r : cf.R_psi.values()) CHECK(std::abs(r) < 1e-14);

  auto g4 = Geometry::torus(4, 8);
  auto D4 = zero_data(g4);
  D4.V = polynomial_potential({0.0, 0.0, 1.0});
  D4.psi = ScalarField(g4, 2.0);
  D4.tau = ScalarField(g4, 1.0);
  auto cf4 = coefficients(D4);
  for (double b : cf4.B.values()) CHECK(b == doctest::Approx(7.25));

  auto s3 = Geometry::sphere_radial(3, 64);
  auto Ds = zero_data(s3);
  auto cfs = coefficients(Ds);
  for (double r : cfs.R_psi.values()) CHECK(r == doctest::Approx(6.0));
}

TEST_CASE("classification") {
  auto g = Geometry::torus(3, 8);
  CHECK(classify(ScalarField(g, 2.0)) == Regime::Focusing);
  CHECK(classify(ScalarField(g, 0.0)) == Regime::Defocusing);
  CHECK(classify(ScalarField::from_function(g, [](auto x) { return std::sin(x[0]); })) == Regime::Mixed);
}

TEST_CASE("classification ignores constant shifts of psi under constant V") {
  auto g = Geometry::torus(3, 8);
  auto D = zero_data(g);
  D.V = constant_potential(0.5);
  D.psi = ScalarField::from_function(g, [](auto x) { return std::cos(x[1]); });
  D.tau = ScalarField::from_function(g, [](auto x) { return 0.4 * std::cos(x[0]); });
  auto r1 = classify(coefficients(D).B);
  for (double& v : D.psi.values()) v += 3.0;
  CHECK(classify(coefficients(D).B) == r1);
}

TEST_CASE("normalize examples") {
  auto g = Geometry::torus(3, 8);
  auto D = zero_data(g);
  D.pi = ScalarField(g, 2.0);
  D.tau = ScalarField(g, 5.0);
  auto C = normalize(D);
  for (double b : C.b.values()) CHECK(b == doctest::Approx(0.5));
  CHECK(max_abs(C.X.raw()) < 1e-14);
  CHECK(max_abs(C.Y.raw()) < 1e-14);
  CHECK(C.gamma == doctest::Approx(0.125));

  D.pi = ScalarField(g, 6.0);
  auto C3 = normalize(D);
  for (std::size_t i = 0; i < C.b.size(); ++i) CHECK(C3.b[i] == doctest::Approx(9.0 * C.b[i]));

  D.tau = ScalarField::from_function(g, [](auto x) { return std::sin(x[0]); });
  auto C2 = normalize(D);
  for (std::size_t i = 0; i < g->node_count(); ++i)
    CHECK(C2.X.component(0)[i] == doctest::Approx(-2.0 / 3.0 * std::cos(g->coordinate(i, 0))).epsilon(1e-12));
}

TEST_CASE("reconstruct examples") {
  auto g = Geometry::torus(3, 8);
  auto D = zero_data(g);
  OneFormField W(g);
  auto ids = reconstruct(ScalarField(g, 1.0), W, D);
  CHECK(max_abs(ids.K.raw()) == 0.0);

  D.tau = ScalarField(g, 3.0);
  auto ids2 = reconstruct(ScalarField(g, 1.0), W, D);
  auto tr = trace(ids2.K);
  for (double t : tr.values()) CHECK(t == doctest::Approx(3.0));
  CHECK(ids2.K.component(0, 0)[0] == doctest::Approx(1.0));

  D.pi = ScalarField(g, 3.0);
  auto ids3 = reconstruct(ScalarField(g, 2.0), W, D);
  CHECK(ids3.pi[5] == doctest::Approx(0.046875));

  ScalarField bad(g, 1.0);
  bad[3] = 0.0;
  CHECK_THROWS_AS(reconstruct(bad, W, D), InvalidArgument);
}

TEST_CASE("constraint residuals of flat vacuum vanish") {
  auto g = Geometry::torus(3, 8);
  auto D = zero_data(g);
  auto ids = reconstruct(ScalarField(g, 1.0), OneFormField(g), D);
  auto r = constraint_residuals(ids, D.V);
  CHECK(r.ham < 1e-14);
  CHECK(r.mom < 1e-14);
}

TEST_CASE("scalar curvature law matches an explicit conformally flat metric") {
  // phi = 1 + 0.2 cos x: Hamiltonian defect with all matter zero equals R(g~)
  auto g = Geometry::torus(3, 32);
  auto D = zero_data(g);
  ScalarField phi = ScalarField::from_function(g, [](auto x) { return 1.0 + 0.2 * std::cos(x[0]); });
  auto ids = reconstruct(phi, OneFormField(g), D);
  auto r = constraint_residuals(ids, D.V);
  // independent formula for g~ = e^{2w} xi: R = e^{-2w}(-2(n-1) w'' - (n-2)(n-1) |w'|^2), w = 2 ln phi
  ScalarField R(g);
  for (std::size_t i = 0; i < R.size(); ++i) {
    double x = g->coordinate(i, 0);
    double p = phi[i], p1 = -0.2 * std::sin(x), p2 = -0.2 * std::cos(x);
    double w = 2.0 * std::log(p), w1 = 2.0 * p1 / p, w2 = 2.0 * (p2 * p - p1 * p1) / (p * p);
    R[i] = std::exp(-2.0 * w) * (-4.0 * w2 - 2.0 * w1 * w1);
  }
  CHECK(r.ham == doctest::Approx(l2_norm(R)).epsilon(1e-10));
  CHECK(r.mom < 1e-12);
}
