#pragma once

#include <cstdint>
#include <map>
#include <numbers>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "elc/conformal_method.hpp"
#include "elc/geometry.hpp"
#include "elc/solver.hpp"

namespace elc {

// Symbolic field recipe: a sum of primitives written `name(key=value,...)`
// joined by `+`. Primitives:
//   constant(value)
//   cosine(amp, k1..kn, phase)      amp cos(k.x + phase)
//   bump(amp, width, c1..cn)        amp exp(-|x - c|^2 / width^2), periodic images on the torus
//   polynomial(c0, c1, ...)         potentials only: sum c_k s^k
//   zero
struct RecipeTerm {
  std::string name;
  std::map<std::string, double> params;
};

struct FieldRecipe {
  std::vector<RecipeTerm> terms;

  static FieldRecipe parse(const std::string& text);
  std::string str() const;
  bool empty() const { return terms.empty(); }
  ScalarField evaluate(const GeometryPtr& g) const;
  Potential potential() const;
  // Upper bound of max_{j <= m} sup |grad^j f| (constant and cosine terms only).
  double cm_bound(int m, int n) const;
};

struct GeometrySpec {
  std::string kind = "torus";
  int dimension = 3;
  int resolution = 16;
  double period = 2.0 * std::numbers::pi;
  double model_curvature = 0.0;

  GeometryPtr build() const;
  GeometryPtr build(int resolution) const;
};

struct DataSpec {
  FieldRecipe psi, pi, tau, V;
  PhysicsData build(const GeometryPtr& g) const;
};

// Perturbation shapes, normalised so that eps controls the C^3 norm of the tau
// shape, the C^2 norms of the psi and V shapes and the sup norm of the pi shape.
struct PerturbationSpec {
  FieldRecipe tau, psi, V, pi;
};

struct SweepConfig {
  GeometrySpec geometry;
  DataSpec data;
  PerturbationSpec perturbation;
  std::vector<double> schedule;
  SolveOptions solver;
  double vanishing_threshold = 1e-3;
  std::string csv_path;
  std::string json_path;

  void validate() const;
};

// Flat key/value document with sections [geometry], [data], [schedule],
// [solver], [output]. Throws ConfigError.
SweepConfig parse_sweep_config(const std::string& text);
SweepConfig load_sweep_config(const std::string& path);

// Data of the perturbed problem at amplitude eps.
PhysicsData perturbed_data(const SweepConfig& cfg, const GeometryPtr& g, double eps);

enum class Verdict { StableBand, VanishingLimit, NonConvergent };
const char* to_string(Verdict v);

struct SweepRow {
  int index = 0;
  double eps = 0.0;
  double sup_u = 0.0;
  double inf_u = 0.0;
  double LgW_sup = 0.0;
  double scalar_residual = 0.0;
  double momentum_residual = 0.0;
  double difference = 0.0;  // C^0 + C^1 distance to the previous row (u and mean-free W)
  int iterations = 0;
  bool converged = false;
  std::string dichotomy;  // "positive" or "vanishing"
};

struct SweepReport {
  std::string regime;
  bool b_vanishes = false;
  std::vector<SweepRow> rows;
  Verdict verdict = Verdict::NonConvergent;
  double sup_spread = 0.0;
  std::optional<double> momentum_limit_residual;
  std::string note;
};

// workers == 1: each point is warm-started from the previous one.
// workers > 1: points run in a pool, each warm-started from the base solve.
SweepReport run_sweep(const SweepConfig& cfg, int workers = 1);

// Worker count from ELC_WORKERS (default 1).
int workers_from_env();

void write_sweep_csv(const SweepReport& r, std::ostream& os);
// JSON summary: verdict, spread, config hash and library versions.
std::string sweep_summary_json(const SweepReport& r, const std::string& config_text);

struct InstabilityRow {
  double lambda = 0.0;
  double sup_phi = 0.0;
  double sup_phi_exact = 0.0;
  double scalar_residual = 0.0;
  double vector_residual = 0.0;
  double U_sup = 0.0;
  double Y_sup = 0.0;
};

struct InstabilityDemoReport {
  std::vector<InstabilityRow> rows;
  bool residuals_ok = false;
  bool sup_matches = false;
  bool monotone = false;
  double family_spread = 0.0;
  bool passed() const { return residuals_ok && sup_matches && monotone && family_spread < 0.05; }
};

InstabilityDemoReport run_instability_demo(const std::vector<double>& lambdas, int resolution = 4096);
void write_instability_csv(const InstabilityDemoReport& r, std::ostream& os);

struct VerificationRow {
  std::string group;
  std::string name;
  double measured = 0.0;
  double threshold = 0.0;
  bool lower_bound = false;  // pass when measured >= threshold instead of <=
  bool passed = false;
};

struct VerificationOptions {
  // Test fixture: flips the sign of C(n) before the constants check.
  bool inject_cn_sign_error = false;
};

// Groups: geometry, bubbles, constants, green, diagnostics. Selector "all"
// (or empty) runs everything.
std::vector<VerificationRow> run_verification_suite(const std::string& selector, const VerificationOptions& opts = {});
void write_verification_csv(const std::vector<VerificationRow>& rows, std::ostream& os);

// Shortest decimal string that round-trips the double.
std::string format_double(double x);
std::uint64_t fnv1a(const std::string& text);

}  // namespace elc
