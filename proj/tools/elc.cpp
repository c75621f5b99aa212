#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "elc/bubbles.hpp"
#include "elc/errors.hpp"
#include "elc/harness.hpp"

using namespace elc;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

template <class Fn>
void emit(const std::string& path, Fn&& fn) {
  if (path.empty() || path == "-") {
    fn(std::cout);
    return;
  }
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  fn(out);
}

int cmd_solve(const std::string& config, const std::string& csv) {
  auto text = read_file(config);
  auto cfg = parse_sweep_config(text);
  auto g = cfg.geometry.build();
  auto D = perturbed_data(cfg, g, 0.0);
  auto s = solve_system(normalize(D), cfg.solver);
  auto ids = reconstruct(s.u, s.W, D);
  auto cr = constraint_residuals(ids, D.V);
  double lo = s.u[0], hi = s.u[0];
  for (double v : s.u.values()) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  emit(csv, [&](std::ostream& os) {
    os << "converged,iterations,sup_u,inf_u,scalar_residual,momentum_residual,kernel_defect,hamiltonian_l2,momentum_l2\n";
    os << (s.converged ? 1 : 0) << ',' << s.iterations << ',' << format_double(hi) << ',' << format_double(lo) << ','
       << format_double(s.scalar_residual) << ',' << format_double(s.momentum_residual) << ','
       << format_double(s.kernel_defect) << ',' << format_double(cr.ham) << ',' << format_double(cr.mom) << '\n';
  });
  return s.converged ? 0 : 1;
}

int cmd_sweep(const std::string& config, std::string csv, std::string json) {
  auto text = read_file(config);
  auto cfg = parse_sweep_config(text);
  if (csv.empty()) csv = cfg.csv_path;
  if (json.empty()) json = cfg.json_path;
  auto rep = run_sweep(cfg, workers_from_env());
  emit(csv, [&](std::ostream& os) { write_sweep_csv(rep, os); });
  if (!json.empty()) emit(json, [&](std::ostream& os) { os << sweep_summary_json(rep, text) << '\n'; });
  std::cerr << "verdict: " << to_string(rep.verdict) << '\n';
  bool converged = std::all_of(rep.rows.begin(), rep.rows.end(), [](const SweepRow& r) { return r.converged; });
  return converged && rep.verdict != Verdict::NonConvergent ? 0 : 1;
}

int cmd_instability(const std::vector<double>& lambdas, int resolution, const std::string& csv) {
  auto rep = run_instability_demo(lambdas, resolution);
  emit(csv, [&](std::ostream& os) { write_instability_csv(rep, os); });
  std::cerr << "residuals " << (rep.residuals_ok ? "ok" : "FAIL") << ", closed-form sup "
            << (rep.sup_matches ? "ok" : "FAIL") << ", monotone " << (rep.monotone ? "ok" : "FAIL")
            << ", family spread " << format_double(rep.family_spread) << '\n';
  return rep.passed() ? 0 : 1;
}

int cmd_verify(const std::string& selector, bool inject, const std::string& csv) {
  VerificationOptions o;
  o.inject_cn_sign_error = inject;
  auto rows = run_verification_suite(selector, o);
  emit(csv, [&](std::ostream& os) { write_verification_csv(rows, os); });
  return std::all_of(rows.begin(), rows.end(), [](const VerificationRow& r) { return r.passed; }) ? 0 : 1;
}

int cmd_constants(const std::vector<int>& dims) {
  std::cout << "n,C1,C2,Kn_inv_n,Cn\n";
  for (int n : dims) {
    auto c = blowup_constants(n);
    std::cout << n << ',' << format_double(c.C1) << ',' << format_double(c.C2) << ',' << format_double(c.Kn_inv_n) << ','
              << format_double(c.Cn) << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Solvers and checks for the Einstein-Lichnerowicz conformal constraint system"};
  app.require_subcommand(1);

  std::string config, csv, json, selector = "all";
  std::vector<double> lambdas{1.5, 1.25, 1.1, 1.05, 1.01};
  std::vector<int> dims{3, 4, 5, 6};
  int resolution = 4096;
  bool inject = false;

  auto* solve = app.add_subcommand("solve", "Solve the system once for the base data of a config file");
  solve->add_option("config", config, "Config file")->required()->check(CLI::ExistingFile);
  solve->add_option("--csv", csv, "CSV output path (default stdout)");

  auto* sweep = app.add_subcommand("sweep", "Stability sweep over a perturbation schedule");
  sweep->add_option("config", config, "Config file")->required()->check(CLI::ExistingFile);
  sweep->add_option("--csv", csv, "CSV output path (overrides [output] csv)");
  sweep->add_option("--json", json, "JSON summary path (overrides [output] json)");

  auto* inst = app.add_subcommand("instability3", "Blow-up family on the round 3-sphere");
  inst->add_option("--lambda", lambdas, "Concentration parameters (> 1)")->delimiter(',');
  inst->add_option("--resolution", resolution, "Radial grid points")->check(CLI::Range(64, 1 << 20));
  inst->add_option("--csv", csv, "CSV output path (default stdout)");

  auto* verify = app.add_subcommand("verify", "Run invariant suites");
  verify->add_option("--select", selector, "all, geometry, bubbles, constants, green or diagnostics");
  verify->add_flag("--inject-cn-sign-error", inject, "Flip the sign of C(n) (mutation check)");
  verify->add_option("--csv", csv, "CSV output path (default stdout)");

  auto* consts = app.add_subcommand("constants", "Print the blow-up constants");
  consts->add_option("-n,--dimension", dims, "Dimensions")->delimiter(',');

  CLI11_PARSE(app, argc, argv);
  try {
    if (*solve) return cmd_solve(config, csv);
    if (*sweep) return cmd_sweep(config, csv, json);
    if (*inst) return cmd_instability(lambdas, resolution, csv);
    if (*verify) return cmd_verify(selector, inject, csv);
    if (*consts) return cmd_constants(dims);
  } catch (const std::exception& e) {
    std::cerr << "elc: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
