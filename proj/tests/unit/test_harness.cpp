#include <algorithm>
#include <cmath>
#include <sstream>

#include "doctest.h"
#include "elc/errors.hpp"
#include "elc/harness.hpp"

using namespace elc;

namespace {

const char* focusing_config =
    "# focusing data, B = 2\n"
    "[geometry]\nkind = torus\ndimension = 3\nresolution = 8\nmodel_curvature = 6\n"
    "[data]\ntau = cosine(amp=0.5,k1=1)\npsi = cosine(amp=0.28867513459481287,k1=1)\n"
    "pi = 1 + cosine(amp=0.2,k3=1)\nV = polynomial(c0=1,c2=1)\n"
    "[schedule]\nbase = 2\nalpha_min = 1\nalpha_max = 8\ntau_shape = cosine(amp=1,k2=1)\n"
    "pi_shape = cosine(amp=1,k1=2)\n";

std::string csv_of(const SweepReport& r) {
  std::stringstream ss;
  write_sweep_csv(r, ss);
  return ss.str();
}

}  // namespace

TEST_CASE("recipes parse and evaluate") {
  auto r = FieldRecipe::parse("constant(value=1) + cosine(amp=0.2, k3=1) + 0.5");
  REQUIRE(r.terms.size() == 3);
  CHECK(r.terms[2].params.at("value") == 0.5);
  auto g = Geometry::torus(3, 8);
  auto f = r.evaluate(g);
  for (std::size_t i = 0; i < f.size(); ++i) CHECK(f[i] == doctest::Approx(1.5 + 0.2 * std::cos(g->coordinate(i, 2))));
  CHECK(FieldRecipe::parse("zero").empty());
  CHECK(FieldRecipe::parse("zero()").empty());
  CHECK(FieldRecipe::parse("constant(value=1e+3)").terms[0].params.at("value") == 1000.0);
  CHECK(FieldRecipe::parse(r.str()).str() == r.str());

  auto b = FieldRecipe::parse("bump(amp=2,width=0.5,c1=1)");
  auto bf = b.evaluate(g);
  CHECK(bf[g->flat_index(std::vector<int>{0, 0, 0})] == doctest::Approx(2.0 * std::exp(-4.0)));

  auto V = FieldRecipe::parse("polynomial(c0=1,c2=1)").potential();
  CHECK(V(2.0).value == 5.0);
  CHECK(V(2.0).d1 == 4.0);
  CHECK(V(2.0).d2 == 2.0);

  CHECK(FieldRecipe::parse("cosine(amp=0.5,k1=3,k2=4)").cm_bound(2, 3) == doctest::Approx(12.5));
  CHECK(FieldRecipe::parse("cosine(amp=0.5,k1=0.5)").cm_bound(3, 3) == 0.5);

  CHECK_THROWS_AS(FieldRecipe::parse("sine(amp=1)"), ConfigError);
  CHECK_THROWS_AS(FieldRecipe::parse("cosine(amplitude=1)"), ConfigError);
  CHECK_THROWS_AS(FieldRecipe::parse("cosine(amp=1"), ConfigError);
  CHECK_THROWS_AS(FieldRecipe::parse("cosine(amp=x)"), ConfigError);
  CHECK_THROWS_AS(FieldRecipe::parse("polynomial(c0=1)").evaluate(g), ConfigError);
  CHECK_THROWS_AS(FieldRecipe::parse("cosine(k4=1)").evaluate(g), ConfigError);
  CHECK_THROWS_AS(FieldRecipe::parse("bump(amp=1)").cm_bound(1, 3), ConfigError);
  CHECK_THROWS_AS(FieldRecipe::parse("cosine(amp=1)").potential(), ConfigError);
}

TEST_CASE("config parsing") {
  auto c = parse_sweep_config(focusing_config);
  CHECK(c.geometry.resolution == 8);
  CHECK(c.geometry.model_curvature == 6.0);
  REQUIRE(c.schedule.size() == 8);
  CHECK(c.schedule.front() == 0.5);
  CHECK(c.schedule.back() == std::pow(2.0, -8));
  CHECK(c.solver.damping == 0.7);

  auto e = parse_sweep_config("[schedule]\neps = 0.3, 0.2, 0.1\n[solver]\ndamping = 1\ncheck_coercivity = false\n");
  CHECK(e.schedule == std::vector<double>{0.3, 0.2, 0.1});
  CHECK(e.solver.damping == 1.0);
  CHECK_FALSE(e.solver.check_coercivity);

  CHECK_THROWS_AS(parse_sweep_config("[schedule]\neps = 0.1, 0.2\n"), ConfigError);
  CHECK_THROWS_AS(parse_sweep_config("[schedule]\neps = 0.1, 0.1\n"), ConfigError);
  CHECK_THROWS_AS(parse_sweep_config("[plots]\nx = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_sweep_config("[geometry]\nshape = round\n"), ConfigError);
  CHECK_THROWS_AS(parse_sweep_config("[geometry]\nkind = sphere\n"), ConfigError);
  CHECK_THROWS_AS(parse_sweep_config("[solver]\ndamping = 1.5\n"), ConfigError);
  CHECK_THROWS_AS(parse_sweep_config("[geometry]\nresolution = 8.5\n"), ConfigError);
  CHECK_THROWS_AS(load_sweep_config("/nonexistent/config.ini"), ConfigError);
}

TEST_CASE("perturbations are scaled by the derivative order of each field") {
  auto c = parse_sweep_config("[geometry]\nresolution = 8\n[schedule]\neps = 0.5\ntau_shape = cosine(amp=3,k2=2)\n"
                              "pi_shape = cosine(amp=4,k1=2)\n");
  auto g = c.geometry.build();
  auto D0 = perturbed_data(c, g, 0.0);
  auto D = perturbed_data(c, g, 0.5);
  // tau: C^3 bound of 3 cos(2 x2) is 3 * 8, so the sup of the change is 0.5 / 8
  CHECK(max_abs(D.tau) == doctest::Approx(0.5 / 8.0));
  CHECK(max_abs(D.pi) == doctest::Approx(0.5));
  CHECK(max_abs(D0.tau) == 0.0);
}

TEST_CASE("focusing sweep is classified as a stable band") {
  auto cfg = parse_sweep_config(focusing_config);
  auto r = run_sweep(cfg, 1);
  CHECK(r.regime == "focusing");
  CHECK_FALSE(r.b_vanishes);
  REQUIRE(r.rows.size() == 8);
  for (std::size_t k = 0; k < r.rows.size(); ++k) {
    CHECK(r.rows[k].converged);
    CHECK(r.rows[k].dichotomy == "positive");
    CHECK(r.rows[k].index == static_cast<int>(k));
  }
  CHECK(r.verdict == Verdict::StableBand);
  CHECK(r.sup_spread < 0.1);

  // byte-identical output for identical input, with one and with two workers
  CHECK(csv_of(run_sweep(cfg, 1)) == csv_of(r));
  auto p1 = run_sweep(cfg, 2), p2 = run_sweep(cfg, 2);
  CHECK(csv_of(p1) == csv_of(p2));
  CHECK(p1.verdict == Verdict::StableBand);

  // halving the schedule keeps the verdict
  auto half = cfg;
  half.schedule = {cfg.schedule[1], cfg.schedule[3], cfg.schedule[5], cfg.schedule[7]};
  CHECK(run_sweep(half, 1).verdict == Verdict::StableBand);

  auto json = sweep_summary_json(r, focusing_config);
  CHECK(json.find("\"verdict\": \"Stable-band\"") != std::string::npos);
  CHECK(json.find("fnv1a64:") != std::string::npos);
}

TEST_CASE("zero perturbations reproduce the base solve") {
  auto cfg = parse_sweep_config(
      "[geometry]\nresolution = 8\nmodel_curvature = 6\n[data]\ntau = cosine(amp=0.5,k1=1)\n"
      "psi = cosine(amp=0.28867513459481287,k1=1)\npi = 1\nV = polynomial(c0=1,c2=1)\n[schedule]\neps = 0.5, 0.25, 0.125\n");
  auto r = run_sweep(cfg, 1);
  auto cold = run_sweep(cfg, 3);
  for (std::size_t k = 0; k < r.rows.size(); ++k) {
    CHECK(r.rows[k].sup_u == doctest::Approx(r.rows[0].sup_u).epsilon(1e-10));
    CHECK(r.rows[k].difference < 1e-8);
    CHECK(cold.rows[k].sup_u == doctest::Approx(r.rows[k].sup_u).epsilon(1e-10));
  }
}

TEST_CASE("vanishing and non-convergent sweeps") {
  // defocusing data with pi_a = eps: sup u_a ~ eps^{1/4} -> 0 and b_0 = 0
  const std::string base =
      "[geometry]\nresolution = 8\nmodel_curvature = 6\n[data]\ntau = 1\n"
      "[schedule]\neps = 1e-2, 1e-4, 1e-6, 1e-8, 1e-10\npi_shape = 1\nvanishing_threshold = 0.05\n";
  auto r = run_sweep(parse_sweep_config(base), 1);
  CHECK(r.regime == "defocusing");
  CHECK(r.b_vanishes);
  CHECK(r.verdict == Verdict::VanishingLimit);
  REQUIRE(r.momentum_limit_residual.has_value());
  CHECK(*r.momentum_limit_residual < 1e-10);
  CHECK(r.rows.back().dichotomy == "vanishing");
  for (std::size_t k = 1; k < r.rows.size(); ++k) CHECK(r.rows[k].sup_u < r.rows[k - 1].sup_u);

  auto stuck = parse_sweep_config(std::string(focusing_config) + "[solver]\nmax_outer = 1\n");
  CHECK_THROWS_AS(run_sweep(stuck, 1), OuterDiverged);
  auto short_cfg = parse_sweep_config(focusing_config);
  short_cfg.schedule = {0.5, 0.25};
  CHECK_THROWS_AS(run_sweep(short_cfg, 1), InvalidArgument);
}

TEST_CASE("instability demo") {
  auto r = run_instability_demo({1.5, 1.1, 1.01}, 4096);
  REQUIRE(r.rows.size() == 3);
  CHECK(r.rows[0].sup_phi == doctest::Approx(1.4953).epsilon(1e-4));
  CHECK(r.residuals_ok);
  CHECK(r.sup_matches);
  CHECK(r.monotone);
  CHECK(r.passed());
  std::stringstream ss;
  write_instability_csv(r, ss);
  CHECK(ss.str().rfind("lambda,sup_phi,", 0) == 0);
  CHECK_THROWS_AS(run_instability_demo({0.9}), InvalidArgument);
}

TEST_CASE("verification suite") {
  auto green = run_verification_suite("green");
  REQUIRE_FALSE(green.empty());
  for (const auto& r : green) {
    CHECK(r.group == "green");
    CHECK(r.passed);
  }
  auto good = run_verification_suite("constants");
  CHECK(std::all_of(good.begin(), good.end(), [](const VerificationRow& r) { return r.passed; }));
  VerificationOptions bad;
  bad.inject_cn_sign_error = true;
  auto mutated = run_verification_suite("constants", bad);
  CHECK(std::any_of(mutated.begin(), mutated.end(), [](const VerificationRow& r) { return !r.passed; }));
  CHECK_THROWS_AS(run_verification_suite("nonsense"), ConfigError);
}

TEST_CASE("number formatting round-trips") {
  for (double x : {0.1, 1.0 / 3.0, 1e-300, 6.02214076e23, -2.5}) CHECK(std::stod(format_double(x)) == x);
  CHECK(format_double(0.5) == "0.5");
  CHECK(fnv1a("") == 14695981039346656037ull);
  CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cull);
}
