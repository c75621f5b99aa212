#pragma once

#include <vector>

namespace elc {

struct Rule1D {
  std::vector<double> x;
  std::vector<double> w;
};

// Gauss-Legendre rule with m nodes on [a, b].
Rule1D gauss_legendre(int m, double a = -1.0, double b = 1.0);

// Composite Gauss-Legendre over consecutive breakpoints.
Rule1D composite_gauss(const std::vector<double>& breaks, int m);

// Gauss rule with m nodes for the weight (1 - x^2)^alpha on [-1, 1].
Rule1D gauss_gegenbauer(int m, double alpha);

// Area of the unit d-sphere in R^{d+1}.
double sphere_area(int d);

// Product rule on the unit sphere S^{n-1} in R^n built from hyperspherical
// angles: Gauss-Gegenbauer in the cosine of each polar angle (m nodes) and
// the trapezoid rule with 2m nodes in the azimuth. Exact for polynomials of
// degree < 2m.
// Points are stored flat, n coordinates per node. Weights sum to the area.
struct SphereRule {
  int n = 0;
  std::vector<double> points;
  std::vector<double> w;
  std::size_t size() const { return w.size(); }
  const double* point(std::size_t i) const { return points.data() + i * n; }
};

SphereRule sphere_rule(int n, int m);

}  // namespace elc
