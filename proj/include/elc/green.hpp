#pragma once

#include <Eigen/Dense>
#include <functional>
#include <span>
#include <vector>

#include "elc/quadrature.hpp"

namespace elc {

// Fundamental solution of the Euclidean Lame operator -div L in R^n:
//   G(y) = |y|^{2-n} ((3n-2) I + (n-2)^2 y y^T / |y|^2) / (4 (n-1)(n-2) w_{n-1})
// The dimension is taken from y.size().
Eigen::MatrixXd fundamental(std::span<const double> y);

// dG[(i*n + j)*n + k] = d/dy_k G_ij(y)
std::vector<double> fundamental_gradient(std::span<const double> y);
// d2G[((i*n + j)*n + k)*n + l] = d2/dy_k dy_l G_ij(y)
std::vector<double> fundamental_hessian(std::span<const double> y);

// Lame operator applied column by column to G away from the origin:
// column p of the result is -div L(G e_p) at y.
Eigen::MatrixXd lame_of_fundamental(std::span<const double> y);

// H[(i*n + j)*n + p] = d_i G_j(x-y)_p + d_j G_i(x-y)_p - (2/n) delta_ij sum_k d_k G_k(x-y)_p,
// derivatives taken in x.
std::vector<double> stress_kernel(std::span<const double> x, std::span<const double> y);

// L_xi (G zeta) evaluated at v: the kernel of L_xi applied to a convolution
// with G.
Eigen::MatrixXd conformal_killing_of_fundamental(std::span<const double> v, std::span<const double> zeta);

// Quadrature on the ball B(0, R): Gauss-Legendre in the radius times the
// sphere product rule. Exact for polynomials of moderate degree.
struct BallQuadrature {
  int n = 0;
  double R = 0.0;
  std::vector<double> points;  // n coordinates per node
  std::vector<double> w;
  std::size_t size() const { return w.size(); }
  const double* point(std::size_t i) const { return points.data() + i * n; }
};

BallQuadrature ball_quadrature(int n, double R, int radial_nodes = 8, int angular_nodes = 8);

// The (n+1)(n+2)/2 analytic conformal Killing generators of flat R^n:
// translations, rotations, the dilation and the special conformal fields
// K^(i)_j = |x|^2 delta_ij - 2 x_i x_j, orthonormalized in L2(B(0,R)).
class KillingBasis {
 public:
  int dimension() const { return n_; }
  double radius() const { return R_; }
  std::size_t size() const { return static_cast<std::size_t>(coeffs_.cols()); }

  std::vector<double> evaluate(std::size_t e, std::span<const double> x) const;
  // Jacobian J(i, k) = d_k K_i at x (closed form)
  Eigen::MatrixXd jacobian(std::size_t e, std::span<const double> x) const;
  Eigen::MatrixXd conformal_killing(std::size_t e, std::span<const double> x) const;
  const BallQuadrature& quadrature() const { return quad_; }

  static std::size_t generator_count(int n) { return static_cast<std::size_t>((n + 1) * (n + 2) / 2); }
  static std::vector<double> generator(int n, std::size_t g, std::span<const double> x);
  static Eigen::MatrixXd generator_jacobian(int n, std::size_t g, std::span<const double> x);

 private:
  friend KillingBasis killing_basis(int n, double R);
  int n_ = 0;
  double R_ = 0.0;
  Eigen::MatrixXd coeffs_;  // generators x elements
  BallQuadrature quad_;
};

KillingBasis killing_basis(int n, double R);

// A 1-form sampled on the nodes of a ball quadrature.
struct SampledForm {
  const BallQuadrature* grid = nullptr;
  std::vector<double> values;  // n per node
};

SampledForm sample_form(const BallQuadrature& grid,
                        const std::function<std::vector<double>(std::span<const double>)>& fn);
double l2_inner(const SampledForm& a, const SampledForm& b);
SampledForm project_killing(const SampledForm& X, const KillingBasis& basis);

// Smooth compactly supported test form on B(0, R) with a closed-form Lame image.
struct TestForm {
  int n = 0;
  double R = 0.0;
  std::function<std::vector<double>(std::span<const double>)> value;
  std::function<std::vector<double>(std::span<const double>)> lame;
};

// X(y) = (1 - |y|^2/R^2)^k e inside the ball, 0 outside.
TestForm bump_form(int n, double R, int k, std::vector<double> e);

// max_i |X_i(x) - int G(x-y) (lame X)(y) dy| / |X(x)| (absolute if X(x) = 0)
// computed with the midpoint rule on `cells` cubes per axis of [-R, R]^n.
// The cube containing x is replaced by the closed-form integral of G over the
// ball of equal volume.
double representation_residual(const TestForm& X, std::span<const double> x, int cells);

}  // namespace elc
