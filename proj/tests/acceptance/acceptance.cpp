#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "elc/bubbles.hpp"
#include "elc/diagnostics.hpp"
#include "elc/green.hpp"
#include "elc/harness.hpp"
#include "elc/solver.hpp"

using namespace elc;

namespace {

struct Outcome {
  bool ok = false;
  std::string detail;
};

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

OneFormField random_bandlimited_form(const GeometryPtr& g, std::mt19937& rng, int kmax) {
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  const int n = g->dimension();
  OneFormField W(g);
  for (int c = 0; c < n; ++c) {
    auto w = W.component(c);
    for (int t = 0; t < 6; ++t) {
      std::vector<int> k(n);
      for (int a = 0; a < n; ++a) k[a] = static_cast<int>(std::lround(U(rng) * kmax));
      double amp = U(rng), ph = 3.0 * U(rng);
      for (std::size_t i = 0; i < W.nodes(); ++i) {
        double arg = ph;
        for (int a = 0; a < n; ++a) arg += k[a] * g->coordinate(i, a);
        w[i] += amp * std::cos(arg);
      }
    }
  }
  return W;
}

Outcome lame_energy() {
  auto g = Geometry::torus(3, 32);
  std::mt19937 rng(2024);
  double worst = 0.0;
  for (int t = 0; t < 50; ++t) {
    auto W = random_bandlimited_form(g, rng, 10);
    auto K = conformal_killing_deriv(W, *g);
    worst = std::max(worst, std::abs(inner(lame(W, *g), W) - 0.5 * inner(K, K)) / h1_norm2(W));
  }
  return {worst < 1e-10, "max defect / ||W||_H1^2 = " + fmt(worst) + " (limit 1e-10)"};
}

Outcome bubble_residual() {
  std::mt19937 rng(99);
  std::uniform_real_distribution<double> U(-3.0, 3.0);
  double worst = 0.0;
  for (int n : {3, 4, 5, 6}) {
    BubbleParams p;
    p.n = n;
    p.mu = 0.6;
    p.f_center = 2.5;
    const double crit = 2.0 * n / (n - 2.0);
    for (int t = 0; t < 100; ++t) {
      std::vector<double> x(n);
      for (double& v : x) v = U(rng);
      double rhs = p.f_center * std::pow(bubble(p, x), crit - 1.0);
      worst = std::max(worst, std::abs(bubble_laplacian(p, x) - rhs) / rhs);
    }
  }
  return {worst < 1e-8, "max relative residual = " + fmt(worst) + " (limit 1e-8)"};
}

Outcome constants() {
  double c6 = std::abs(blowup_constants(6).Cn - 0.2);
  double worst = 0.0;
  for (int n : {5, 6, 7}) worst = std::max(worst, std::abs(cn_by_quadrature(n) - blowup_constants(n).Cn));
  const double k3 = std::pow(2.0, -3) * std::pow(3.0, 1.5) * 2.0 * std::numbers::pi * std::numbers::pi;
  double dk = std::abs(blowup_constants(3).Kn_inv_n - k3);
  return {c6 < 1e-15 && worst < 1e-6 && dk < 1e-9,
          "|C(6) - 0.2| = " + fmt(c6) + ", max |C(n) quadrature - closed form| = " + fmt(worst) +
              ", K3^-3 = " + std::to_string(blowup_constants(3).Kn_inv_n) + " (closed form defect " + fmt(dk) + ")"};
}

Outcome asymptotics() {
  const int n = 3;
  BubbleParams p;
  p.n = n;
  p.mu = 0.01;
  p.f_center = 2.0;
  DirectionData d;
  d.eps = 0.5;
  d.zeta0 = {0.6, 0.8, 0.0};
  d.beta = {1.0, 1.25, 1.5};
  d.zeta = {{0.0, 1.0, 0.0}, {0.0, 0.0, 1.0}, {1.0, 0.0, 0.0}};
  std::vector<double> X0(n);
  for (int i = 0; i < n; ++i) X0[i] = d.eps * d.zeta0[i];
  double lv = 0.0, lp = 0.0;
  for (double ratio : {50.0, 100.0, 200.0}) {
    std::vector<double> x{0.3, -0.5, 0.81};
    double s = std::sqrt(0.3 * 0.3 + 0.5 * 0.5 + 0.81 * 0.81);
    for (double& v : x) v *= ratio * p.mu / s;
    auto a = asympt_LV(d, p, x);
    lv = std::max(lv, (quad_LV(X0, p, x).value - a).norm() / a.norm());
    for (int k = 0; k < n; ++k) {
      std::vector<double> dX(n);
      for (int i = 0; i < n; ++i) dX[i] = d.beta[k] * d.zeta[k][i];
      auto ap = asympt_LP(d, p, x, k);
      lp = std::max(lp, (quad_LP(dX, k, p, x).value - ap).norm() / ap.norm());
    }
  }
  return {lv < 0.05 && lp < 0.10, "max relative deviation LV = " + fmt(lv) + " (limit 0.05), LP = " + fmt(lp) + " (limit 0.10)"};
}

Outcome representation() {
  auto X = bump_form(3, 1.0, 4, {1.0, 0.0, 0.0});
  std::vector<double> x{0.0, 0.0, 0.0};
  double prev = representation_residual(X, x, 21);
  bool ok = true;
  std::string factors;
  for (int cells : {29, 41}) {
    double r = representation_residual(X, x, cells);
    double f = prev / r;
    ok = ok && f > 1.6 && f < 2.4;
    factors += (factors.empty() ? "" : ", ") + fmt(f);
    prev = r;
  }
  ok = ok && prev < 1e-2;
  return {ok, "reduction factors per level " + factors + " (expected 2 +-20%), final residual " + fmt(prev) + " (limit 1e-2)"};
}

Outcome killing() {
  auto kb = killing_basis(3, 1.0);
  const auto& q = kb.quadrature();
  std::vector<SampledForm> s;
  for (std::size_t e = 0; e < kb.size(); ++e)
    s.push_back(sample_form(q, [&](std::span<const double> y) { return kb.evaluate(e, y); }));
  double gram = 0.0, ck = 0.0;
  for (std::size_t a = 0; a < kb.size(); ++a) {
    for (std::size_t b = 0; b < kb.size(); ++b) gram = std::max(gram, std::abs(l2_inner(s[a], s[b]) - (a == b ? 1.0 : 0.0)));
    for (std::size_t i = 0; i < q.size(); ++i)
      ck = std::max(ck, kb.conformal_killing(a, std::span<const double>(q.point(i), 3)).cwiseAbs().maxCoeff());
  }
  return {kb.size() == 10 && gram < 1e-10 && ck < 1e-10,
          std::to_string(kb.size()) + " elements, orthonormality defect " + fmt(gram) + ", max |L K| " + fmt(ck) + " (limit 1e-10)"};
}

Outcome instability() {
  auto r = run_instability_demo({1.5, 1.1, 1.01}, 4096);
  double res = 0.0, sup_err = 0.0;
  for (const auto& row : r.rows) {
    res = std::max({res, row.scalar_residual, row.vector_residual});
    sup_err = std::max(sup_err, std::abs(row.sup_phi - std::pow(row.lambda + 1.0, 0.25) * std::pow(row.lambda - 1.0, -0.25)));
  }
  return {r.passed(), "max residual " + fmt(res) + " (limit 1e-6), sup error " + fmt(sup_err) + " (limit 1e-6), monotone " +
                          (r.monotone ? "yes" : "no") + ", family spread " + fmt(r.family_spread) + " (limit 0.05)"};
}

Outcome manufactured() {
  auto g = Geometry::torus(3, 32);
  auto C = zero_coefficients(g);
  C.f = ScalarField(g, 0.2);
  C.b = ScalarField(g, 0.3);
  C.gamma = 0.125;
  for (std::size_t i = 0; i < g->node_count(); ++i) {
    auto x = g->point(i);
    C.X.component(0)[i] = 0.1 * std::sin(x[0]);
    C.X.component(2)[i] = 0.05 * std::sin(x[2]) * std::cos(x[1]);
  }
  auto ustar = ScalarField::from_function(g, [](auto x) { return 1.2 + 0.1 * std::cos(x[0]) * std::cos(x[1]); });
  OneFormField Wstar(g);
  for (std::size_t i = 0; i < g->node_count(); ++i) {
    auto x = g->point(i);
    Wstar.component(0)[i] = 0.2 * std::sin(x[0]);
    Wstar.component(1)[i] = 0.1 * std::sin(x[1]) * std::cos(x[2]);
  }
  auto Cm = manufactured_forcing(ustar, Wstar, C);
  SolveOptions o;
  o.damping = 1.0;
  o.initial_constant = 1.2;
  auto s = solve_system(Cm, o);
  double eu = 0.0, ew = 0.0;
  for (std::size_t i = 0; i < ustar.size(); ++i) eu = std::max(eu, std::abs(s.u[i] - ustar[i]));
  for (std::size_t i = 0; i < Wstar.raw().size(); ++i) ew = std::max(ew, std::abs(s.W.raw()[i] - Wstar.raw()[i]));
  return {s.converged && eu < 1e-6 && ew < 1e-6 && s.iterations <= 15,
          "|u - u*| = " + fmt(eu) + ", |W - W*| = " + fmt(ew) + " (limit 1e-6), " + std::to_string(s.iterations) +
              " outer iterations (limit 15)"};
}

PhysicsData round_trip_data(const GeometryPtr& g) {
  PhysicsData D = zero_data(g);
  auto tau = [](auto x) { return 0.3 / (1.5 + std::cos(x[0])) + 0.1 * std::sin(x[1]); };
  D.tau = ScalarField::from_function(g, tau);
  D.psi = ScalarField::from_function(g, [&](auto x) { return tau(x) / std::sqrt(3.0); });
  D.pi = ScalarField::from_function(g, [](auto x) { return 1.0 + 0.2 / (1.6 + std::cos(x[2])); });
  D.V = polynomial_potential({1.0, 0.0, 1.0});
  return D;
}

Outcome round_trip() {
  std::vector<ConstraintResiduals> r;
  for (int N : {16, 32, 64}) {
    auto g = Geometry::torus(3, N, 2.0 * std::numbers::pi, 6.0);
    auto D = round_trip_data(g);
    auto s = solve_system(normalize(D), SolveOptions{});
    if (!s.converged) return {false, "solve did not converge at N = " + std::to_string(N)};
    // residuals are measured on the doubled grid against the exact data
    auto fine = Geometry::torus(3, 2 * N, 2.0 * std::numbers::pi, 6.0);
    auto Df = round_trip_data(fine);
    r.push_back(constraint_residuals(reconstruct(spectral_resample(s.u, fine), spectral_resample(s.W, fine), Df), Df.V));
  }
  bool ok = true;
  std::string detail = "hamiltonian";
  for (auto pick : {0, 1}) {
    if (pick == 1) detail += "; momentum";
    for (std::size_t k = 0; k < r.size(); ++k) detail += " " + fmt(pick ? r[k].mom : r[k].ham);
    for (std::size_t k = 1; k < r.size(); ++k) {
      double f = pick ? r[k - 1].mom / r[k].mom : r[k - 1].ham / r[k].ham;
      ok = ok && f >= 3.0;
    }
  }
  return {ok, detail + " at N = 16, 32, 64 (factor >= 3 per doubling)"};
}

Outcome sweep() {
  std::stringstream cfg;
  cfg << "[geometry]\nkind = torus\ndimension = 3\nresolution = 16\nmodel_curvature = 6\n"
      << "[data]\ntau = cosine(amp=0.5,k1=1)\npsi = cosine(amp=0.28867513459481287,k1=1)\n"
      << "pi = constant(value=1) + cosine(amp=0.2,k3=1)\nV = polynomial(c0=1,c2=1)\n"
      << "[schedule]\nbase = 2\nalpha_min = 1\nalpha_max = 8\ntau_shape = cosine(amp=1,k2=1)\n"
      << "psi_shape = cosine(amp=1,k1=1,k2=1)\npi_shape = cosine(amp=1,k1=2)\nV_shape = polynomial(c2=1)\n";
  auto rep = run_sweep(parse_sweep_config(cfg.str()), 1);
  bool all = std::all_of(rep.rows.begin(), rep.rows.end(), [](const SweepRow& r) { return r.converged; });
  return {rep.verdict == Verdict::StableBand && all && rep.sup_spread < 0.10,
          std::string("verdict ") + to_string(rep.verdict) + ", " + std::to_string(rep.rows.size()) + " rows, all converged " +
              (all ? "yes" : "no") + ", sup spread " + fmt(rep.sup_spread) + " (limit 0.10)"};
}

Outcome pohozaev() {
  std::vector<double> defects;
  double scale = 1.0;
  for (int N : {17, 33, 65, 129}) {
    auto g = Geometry::chart(3, N, 2.0);
    BubbleParams bp;
    auto v = ScalarField::from_function(g, [&](auto x) { return bubble(bp, x); });
    auto C = zero_coefficients(g);
    for (double& f : C.f.values()) f = bp.f_center;
    auto r = pohozaev_defect(v, C, Ball{{0.0, 0.0, 0.0}, 1.5});
    defects.push_back(r.defect);
    scale = std::abs(r.boundary);
  }
  // fourth-order differences and interpolation: halving h divides the defect by 16
  bool ok = true;
  std::string factors;
  for (std::size_t k = 1; k < defects.size(); ++k) {
    double f = defects[k - 1] / defects[k];
    ok = ok && f > 0.8 * 16.0 && f < 1.2 * 16.0;
    factors += (factors.empty() ? "" : ", ") + fmt(f);
  }
  double rel = defects.back() / scale;
  ok = ok && rel < 1e-5;
  return {ok, "reduction factors " + factors + " (expected 16 +-20%), final relative defect " + fmt(rel) + " (limit 1e-5)"};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double limit_s;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "Lame energy identity", 10.0, lame_energy},
      {2, "bubble PDE residual", 1.0, bubble_residual},
      {3, "constants consistency", 1.0, constants},
      {4, "asymptotics vs quadrature", 300.0, asymptotics},
      {5, "Green representation", 120.0, representation},
      {6, "Killing dimension and kernel", 10.0, killing},
      {7, "instability demo", 30.0, instability},
      {8, "manufactured coupled solve", 120.0, manufactured},
      {9, "constraint round trip", 600.0, round_trip},
      {10, "stability sweep", 600.0, sweep},
      {11, "Pohozaev exactness", 60.0, pohozaev},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    bool ok = o.ok && dt < c.limit_s;
    if (!ok) ++failed;
    std::printf("[%s] %2d %s: %s; %.2f s (limit %.0f s)\n", ok ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), dt, c.limit_s);
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
