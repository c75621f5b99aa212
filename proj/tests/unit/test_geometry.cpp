#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "elc/errors.hpp"
#include "elc/geometry.hpp"

using namespace elc;

namespace {

OneFormField random_bandlimited_form(const GeometryPtr& g, std::mt19937& rng, int kmax) {
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  const int n = g->dimension();
  OneFormField W(g);
  for (int c = 0; c < n; ++c) {
    auto w = W.component(c);
    for (int t = 0; t < 6; ++t) {
      std::vector<int> k(n);
      for (int a = 0; a < n; ++a) k[a] = static_cast<int>(std::lround(U(rng) * kmax));
      double amp = U(rng), ph = U(rng) * 3.0;
      for (std::size_t i = 0; i < W.nodes(); ++i) {
        double arg = ph;
        for (int a = 0; a < n; ++a) arg += k[a] * g->coordinate(i, a);
        w[i] += amp * std::cos(arg);
      }
    }
  }
  return W;
}

}  // namespace

TEST_CASE("torus laplacian: constants and eigenfunctions") {
  auto g = Geometry::torus(3, 16);
  ScalarField c(g, 3.5);
  CHECK(max_abs(laplace_beltrami(c, *g)) < 1e-12);

  auto s = ScalarField::from_function(g, [](auto x) { return std::sin(x[0]); });
  auto ls = laplace_beltrami(s, *g);
  for (std::size_t i = 0; i < s.size(); ++i) CHECK(ls[i] == doctest::Approx(s[i]).epsilon(1e-12));

  auto m = ScalarField::from_function(g, [](auto x) { return std::cos(2 * x[0] - 3 * x[1] + x[2]); });
  auto lm = laplace_beltrami(m, *g);
  for (std::size_t i = 0; i < m.size(); i += 7) CHECK(std::abs(lm[i] - 14.0 * m[i]) < 1e-11);
}

TEST_CASE("sphere laplacian of cos r") {
  auto g = Geometry::sphere_radial(3, 2048);
  auto f = ScalarField::from_function(g, [](auto r) { return std::cos(r[0]); });
  auto lf = laplace_beltrami(f, *g);
  double err = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) err = std::max(err, std::abs(lf[i] - 3.0 * f[i]));
  CHECK(err < 1e-6);
}

TEST_CASE("conformal killing derivative on the torus") {
  auto g = Geometry::torus(3, 16);
  OneFormField W(g);
  for (std::size_t i = 0; i < W.nodes(); ++i) {
    W.component(0)[i] = 1.0;
    W.component(1)[i] = -2.0;
  }
  CHECK(max_abs(conformal_killing_deriv(W, *g).raw()) < 1e-12);

  OneFormField S(g);
  for (std::size_t i = 0; i < S.nodes(); ++i) S.component(0)[i] = std::sin(g->coordinate(i, 0));
  auto L = conformal_killing_deriv(S, *g);
  for (std::size_t i = 0; i < S.nodes(); i += 5) {
    double c = std::cos(g->coordinate(i, 0));
    CHECK(L.component(0, 0)[i] == doctest::Approx((2.0 - 2.0 / 3.0) * c).epsilon(1e-12));
    CHECK(L.component(1, 1)[i] == doctest::Approx(-2.0 / 3.0 * c).epsilon(1e-12));
    CHECK(std::abs(L.component(0, 1)[i]) < 1e-12);
  }

  std::mt19937 rng(7);
  auto R = random_bandlimited_form(g, rng, 5);
  CHECK(max_abs(trace(conformal_killing_deriv(R, *g))) < 1e-12);
}

TEST_CASE("lame operator and energy identity") {
  auto g = Geometry::torus(3, 16);
  OneFormField W(g);
  for (std::size_t i = 0; i < W.nodes(); ++i) W.component(0)[i] = std::cos(g->coordinate(i, 0));
  auto LW = lame(W, *g);
  for (std::size_t i = 0; i < W.nodes(); i += 3) {
    CHECK(LW.component(0)[i] == doctest::Approx((2.0 - 2.0 / 3.0) * W.component(0)[i]).epsilon(1e-12));
    CHECK(std::abs(LW.component(1)[i]) < 1e-12);
  }

  std::mt19937 rng(11);
  for (int t = 0; t < 5; ++t) {
    auto R = random_bandlimited_form(g, rng, 6);
    double lhs = inner(lame(R, *g), R);
    auto K = conformal_killing_deriv(R, *g);
    double rhs = 0.5 * inner(K, K);
    CHECK(std::abs(lhs - rhs) < 1e-10 * h1_norm2(R));
  }
}

TEST_CASE("lame agrees with minus divergence of L on band-limited forms") {
  auto g = Geometry::torus(4, 8);
  std::mt19937 rng(3);
  auto R = random_bandlimited_form(g, rng, 3);
  auto a = lame(R, *g);
  auto b = divergence(conformal_killing_deriv(R, *g), *g);
  double err = 0.0;
  for (std::size_t i = 0; i < a.raw().size(); ++i) err = std::max(err, std::abs(a.raw()[i] + b.raw()[i]));
  CHECK(err < 1e-10);
}

TEST_CASE("lame_invert") {
  auto g = Geometry::torus(3, 16);
  OneFormField Z(g);
  auto z = lame_invert(Z, *g);
  CHECK(max_abs(z.W.raw()) == 0.0);
  CHECK(z.defect == 0.0);

  OneFormField F(g);
  for (std::size_t i = 0; i < F.nodes(); ++i) F.component(0)[i] = std::cos(g->coordinate(i, 0));
  auto inv = lame_invert(F, *g);
  for (std::size_t i = 0; i < F.nodes(); i += 3)
    CHECK(inv.W.component(0)[i] == doctest::Approx(F.component(0)[i] / (2.0 - 2.0 / 3.0)).epsilon(1e-12));
  auto back = lame(inv.W, *g);
  double err = 0.0;
  for (std::size_t i = 0; i < F.raw().size(); ++i) err = std::max(err, std::abs(back.raw()[i] - F.raw()[i]));
  CHECK(err < 1e-10);

  OneFormField C(g);
  for (std::size_t i = 0; i < C.nodes(); ++i) {
    C.component(0)[i] = 3.0;
    C.component(2)[i] = 4.0;
  }
  auto ic = lame_invert(C, *g);
  CHECK(max_abs(ic.W.raw()) < 1e-12);
  CHECK(ic.defect == doctest::Approx(5.0 * std::sqrt(g->volume())).epsilon(1e-12));

  auto sg = Geometry::sphere_radial(3, 64);
  CHECK_THROWS_AS(lame_invert(OneFormField(sg), *sg), UnsupportedGeometry);
}

TEST_CASE("kernel characterization on the constant forms") {
  auto g = Geometry::torus(3, 8);
  for (int c = 0; c < 3; ++c) {
    OneFormField K(g);
    for (std::size_t i = 0; i < K.nodes(); ++i) K.component(c)[i] = 1.0;
    CHECK(max_abs(lame(K, *g).raw()) < 1e-13);
    CHECK(max_abs(conformal_killing_deriv(K, *g).raw()) < 1e-13);
  }
  std::mt19937 rng(5);
  auto R = random_bandlimited_form(g, rng, 2);
  CHECK(max_abs(lame(R, *g).raw()) > 1e-3);
}

TEST_CASE("geometry mismatch") {
  auto a = Geometry::torus(3, 8);
  auto b = Geometry::torus(3, 16);
  ScalarField f(a, 1.0);
  CHECK_THROWS_AS(laplace_beltrami(f, *b), GeometryMismatch);
  CHECK_THROWS_AS(Geometry::torus(3, 6), InvalidArgument);
}

TEST_CASE("spectral resampling reproduces band-limited fields") {
  auto a = Geometry::torus(3, 8);
  auto b = Geometry::torus(3, 16);
  auto fn = [](auto x) { return 1.0 + std::cos(x[0]) * std::sin(2 * x[1]) + 0.3 * std::cos(3 * x[2] - x[0]); };
  auto fa = ScalarField::from_function(a, fn);
  auto fb = spectral_resample(fa, b);
  auto exact = ScalarField::from_function(b, fn);
  double err = 0.0;
  for (std::size_t i = 0; i < fb.size(); ++i) err = std::max(err, std::abs(fb[i] - exact[i]));
  CHECK(err < 1e-12);
  // a Nyquist cosine is split symmetrically
  auto nq = ScalarField::from_function(a, [](auto x) { return std::cos(4 * x[1]); });
  auto up = spectral_resample(nq, b);
  auto ex = ScalarField::from_function(b, [](auto x) { return std::cos(4 * x[1]); });
  err = 0.0;
  for (std::size_t i = 0; i < up.size(); ++i) err = std::max(err, std::abs(up[i] - ex[i]));
  CHECK(err < 1e-12);
}

TEST_CASE("chart operators are fourth-order exact on quartics") {
  auto g = Geometry::chart(3, 12, 1.0);
  auto f = ScalarField::from_function(g, [](auto x) { return x[0] * x[0] * x[1] * x[1] + x[2] * x[2] * x[2]; });
  auto lf = laplace_beltrami(f, *g);
  double err = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    auto x = g->point(i);
    double ex = -(2 * x[1] * x[1] + 2 * x[0] * x[0] + 6 * x[2]);
    err = std::max(err, std::abs(lf[i] - ex));
  }
  CHECK(err < 1e-10);
  double vol = inner(ScalarField(g, 1.0), ScalarField(g, 1.0));
  CHECK(vol == doctest::Approx(8.0).epsilon(1e-12));
}

TEST_CASE("sphere lame of a radial form matches the ODE operator") {
  // radial W = w dr on S^3: lame W = -(4/3)(w'' + 2 cot w' + (1 - 2cot^2) w)
  auto g = Geometry::sphere_radial(3, 4096);
  OneFormField W(g);
  auto w = W.component(0);
  for (std::size_t i = 0; i < W.nodes(); ++i) {
    double r = g->coordinate(i, 0);
    w[i] = std::sin(r) * std::sin(r) * std::cos(r);
  }
  auto L = lame(W, *g);
  double err = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < W.nodes(); ++i) {
    double r = g->coordinate(i, 0);
    double s = std::sin(r), c = std::cos(r), ct = c / s;
    double wv = s * s * c;
    double w1 = 2 * s * c * c - s * s * s;
    double w2 = 2 * c * c * c - 4 * s * s * c - 3 * s * s * c;
    double ex = -(4.0 / 3.0) * (w2 + 2 * ct * w1 + (1 - 2 * ct * ct) * wv);
    err = std::max(err, std::abs(L.component(0)[i] - ex));
    scale = std::max(scale, std::abs(ex));
  }
  CHECK(err / scale < 1e-7);
}
