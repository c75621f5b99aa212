#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

namespace elc {

// Concentration profile B(x) = mu^{(n-2)/2} (mu^2 + f |x - c|^2 / (n(n-2)))^{1 - n/2}
// centred at c, solving Delta B = f B^{2*-1} with Delta = -div grad.
struct BubbleParams {
  int n = 3;
  double mu = 1.0;
  double f_center = 3.0;
  std::vector<double> center;  // empty means the origin

  void validate() const;
};

// Directions of the 1-form X~ at the concentration point: X~(0) = eps zeta0
// and d_k X~(0) = beta_k zeta_k.
struct DirectionData {
  double eps = 0.0;
  std::vector<double> beta;
  std::vector<double> zeta0;
  std::vector<std::vector<double>> zeta;

  void validate(int n) const;
};

double bubble(const BubbleParams& p, std::span<const double> x);
std::vector<double> bubble_gradient(const BubbleParams& p, std::span<const double> x);
Eigen::MatrixXd bubble_hessian(const BubbleParams& p, std::span<const double> x);
// Delta B = -trace of the Hessian
double bubble_laplacian(const BubbleParams& p, std::span<const double> x);

double standard_profile(int n, double f0, std::span<const double> x);
double theta(double mu, std::span<const double> z);

struct QuadratureSpec {
  int nodes_per_panel = 16;
  int sphere_nodes = 4;          // Gauss nodes per angle on the transverse sphere
  double radial_ratio = 1.5;     // geometric growth of radial panels
  double truncation = 1e3;       // initial truncation radius in units of mu (at least 4 max(mu, |z|))
  double tail_tolerance = 1e-8;  // relative bound on the neglected far field
  double max_truncation = 1e9;   // budget on the truncation radius in units of mu
  bool estimate_error = true;    // repeat with half the nodes and report the difference
};

struct QuadratureResult {
  Eigen::MatrixXd value;
  double tail_bound = 0.0;      // Frobenius bound on the neglected far field
  double error_estimate = 0.0;  // Frobenius difference against the coarser rule
  double truncation_radius = 0.0;
  std::size_t evaluations = 0;
};

// L_xi V(x) where V(x)_i = X0^j int B^{2*}(y) G_i(x - y)_j dy.
QuadratureResult quad_LV(std::span<const double> X0, const BubbleParams& p, std::span<const double> x,
                         const QuadratureSpec& spec = {});

// L_xi P_k(x) where P_k(x)_i = dX_k^j int (y - c)_k B^{2*}(y) G_i(x - y)_j dy
// and dX_k = d_k X~(0).
QuadratureResult quad_LP(std::span<const double> dXk, int k, const BubbleParams& p, std::span<const double> x,
                         const QuadratureSpec& spec = {});

// Leading-order expansions at z = x - c for |z| >> mu.
Eigen::MatrixXd asympt_LV(const DirectionData& d, const BubbleParams& p, std::span<const double> x);
Eigen::MatrixXd asympt_LP(const DirectionData& d, const BubbleParams& p, std::span<const double> x, int k);

struct BlowupConstants {
  double C1 = 0.0;
  double C2 = 0.0;
  double Kn_inv_n = 0.0;
  double Cn = 0.0;
};

BlowupConstants blowup_constants(int n);

// (n-2)/2 K_n^{-n} / int (1 + |x|^2/(n(n-2)))^{2-n} dx by numerical quadrature
// (the integral converges for n > 4).
double cn_by_quadrature(int n);

}  // namespace elc
