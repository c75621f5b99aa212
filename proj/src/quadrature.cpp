#include "elc/quadrature.hpp"

#include <boost/math/special_functions/legendre.hpp>
#include <Eigen/Dense>
#include <cmath>
#include <numbers>

#include "elc/errors.hpp"

namespace elc {

Rule1D gauss_legendre(int m, double a, double b) {
  if (m < 1) throw InvalidArgument("gauss_legendre: need at least one node");
  Rule1D r;
  r.x.resize(m);
  r.w.resize(m);
  for (int i = 0; i < m; ++i) {
    double t = std::cos(std::numbers::pi * (i + 0.75) / (m + 0.5));
    for (int it = 0; it < 100; ++it) {
      double p = boost::math::legendre_p(m, t);
      double dp = boost::math::legendre_p_prime(m, t);
      double dt = p / dp;
      t -= dt;
      if (std::abs(dt) < 1e-16) break;
    }
    double dp = boost::math::legendre_p_prime(m, t);
    double w = 2.0 / ((1.0 - t * t) * dp * dp);
    r.x[i] = 0.5 * (b - a) * t + 0.5 * (b + a);
    r.w[i] = 0.5 * (b - a) * w;
  }
  return r;
}

Rule1D composite_gauss(const std::vector<double>& breaks, int m) {
  Rule1D out;
  Rule1D ref = gauss_legendre(m);
  for (std::size_t p = 0; p + 1 < breaks.size(); ++p) {
    double a = breaks[p], b = breaks[p + 1];
    for (int i = 0; i < m; ++i) {
      out.x.push_back(0.5 * (b - a) * ref.x[i] + 0.5 * (b + a));
      out.w.push_back(0.5 * (b - a) * ref.w[i]);
    }
  }
  return out;
}

Rule1D gauss_gegenbauer(int m, double alpha) {
  if (m < 1) throw InvalidArgument("gauss_gegenbauer: need at least one node");
  if (!(alpha > -1.0)) throw InvalidArgument("gauss_gegenbauer: exponent must exceed -1");
  // Golub-Welsch on the symmetric Jacobi matrix of the weight (1 - x^2)^alpha
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(m, m);
  for (int k = 1; k < m; ++k) {
    double b = k * (k + 2.0 * alpha) / ((2.0 * k + 2.0 * alpha + 1.0) * (2.0 * k + 2.0 * alpha - 1.0));
    J(k, k - 1) = J(k - 1, k) = std::sqrt(b);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  const double mu0 = std::sqrt(std::numbers::pi) * std::tgamma(alpha + 1.0) / std::tgamma(alpha + 1.5);
  Rule1D r;
  for (int i = 0; i < m; ++i) {
    r.x.push_back(es.eigenvalues()(i));
    double v = es.eigenvectors()(0, i);
    r.w.push_back(mu0 * v * v);
  }
  return r;
}

double sphere_area(int d) {
  return 2.0 * std::pow(std::numbers::pi, 0.5 * (d + 1)) / std::tgamma(0.5 * (d + 1));
}

SphereRule sphere_rule(int n, int m) {
  if (n < 2) throw InvalidArgument("sphere_rule: ambient dimension must be >= 2");
  SphereRule s;
  s.n = n;
  // start with the circle S^1
  const int az = 2 * m;
  std::vector<std::vector<double>> pts;
  std::vector<double> ws;
  for (int j = 0; j < az; ++j) {
    double phi = 2.0 * std::numbers::pi * (j + 0.5) / az;
    pts.push_back({std::cos(phi), std::sin(phi)});
    ws.push_back(2.0 * std::numbers::pi / az);
  }
  // lift S^{d-1} to S^d: x = (c, sqrt(1 - c^2) y), measure (1 - c^2)^{(d-2)/2} dc dy,
  // integrated with the matching Gauss-Gegenbauer rule (exact for polynomials)
  for (int d = 2; d < n; ++d) {
    Rule1D gg = gauss_gegenbauer(m, 0.5 * (d - 2));
    std::vector<std::vector<double>> np;
    std::vector<double> nw;
    for (int i = 0; i < m; ++i) {
      double c = gg.x[i];
      double st = std::sqrt(1.0 - c * c);
      double wt = gg.w[i];
      for (std::size_t k = 0; k < pts.size(); ++k) {
        std::vector<double> p(d + 1);
        p[0] = c;
        for (int q = 0; q < d; ++q) p[q + 1] = st * pts[k][q];
        np.push_back(std::move(p));
        nw.push_back(wt * ws[k]);
      }
    }
    pts.swap(np);
    ws.swap(nw);
  }
  s.w = ws;
  s.points.reserve(ws.size() * n);
  for (const auto& p : pts) s.points.insert(s.points.end(), p.begin(), p.end());
  return s;
}

}  // namespace elc
