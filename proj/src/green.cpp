#include "elc/green.hpp"

#include <cmath>
#include <string>

#include "elc/errors.hpp"

namespace elc {

namespace {

struct KernelConst {
  double A, a, b;
};

KernelConst kernel_const(int n) {
  if (n < 3) throw InvalidArgument("fundamental: dimension must be >= 3");
  return {1.0 / (4.0 * (n - 1.0) * (n - 2.0) * sphere_area(n - 1)), 3.0 * n - 2.0, (n - 2.0) * (n - 2.0)};
}

double norm_of(std::span<const double> y) {
  double s = 0.0;
  for (double v : y) s += v * v;
  return std::sqrt(s);
}

double delta(int i, int j) { return i == j ? 1.0 : 0.0; }

}  // namespace

Eigen::MatrixXd fundamental(std::span<const double> y) {
  const int n = static_cast<int>(y.size());
  auto k = kernel_const(n);
  double r = norm_of(y);
  if (r == 0.0) throw InvalidArgument("fundamental: singular at y = 0");
  double s = k.A * std::pow(r, 2.0 - n);
  Eigen::MatrixXd G(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) G(i, j) = s * (k.a * delta(i, j) + k.b * y[i] * y[j] / (r * r));
  return G;
}

std::vector<double> fundamental_gradient(std::span<const double> y) {
  const int n = static_cast<int>(y.size());
  auto k = kernel_const(n);
  double r = norm_of(y);
  if (r == 0.0) throw InvalidArgument("fundamental_gradient: singular at y = 0");
  std::vector<double> u(y.begin(), y.end());
  for (double& v : u) v /= r;
  double s = k.A * std::pow(r, 1.0 - n);
  std::vector<double> d(n * n * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int q = 0; q < n; ++q)
        d[(i * n + j) * n + q] = s * ((2.0 - n) * u[q] * (k.a * delta(i, j) + k.b * u[i] * u[j]) +
                                      k.b * (delta(q, i) * u[j] + delta(q, j) * u[i]) - 2.0 * k.b * u[i] * u[j] * u[q]);
  return d;
}

std::vector<double> fundamental_hessian(std::span<const double> y) {
  const int n = static_cast<int>(y.size());
  auto k = kernel_const(n);
  double r = norm_of(y);
  if (r == 0.0) throw InvalidArgument("fundamental_hessian: singular at y = 0");
  const double r2 = r * r;
  // q = r^{-n}: first and second derivatives
  const double q = std::pow(r, -n);
  auto dq = [&](int l) { return -n * std::pow(r, -n - 2.0) * y[l]; };
  auto ddq = [&](int a, int c) {
    return -n * (std::pow(r, -n - 2.0) * delta(a, c) - (n + 2.0) * std::pow(r, -n - 4.0) * y[a] * y[c]);
  };
  // d2 r^{2-n}
  auto ddp = [&](int a, int c) { return (2.0 - n) * (std::pow(r, -n) * delta(a, c) - n * std::pow(r, -n - 2.0) * y[a] * y[c]); };
  (void)r2;
  std::vector<double> h(n * n * n * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int a = 0; a < n; ++a)
        for (int c = 0; c < n; ++c) {
          double t = ddq(a, c) * y[i] * y[j] + dq(c) * (delta(a, i) * y[j] + y[i] * delta(a, j)) +
                     dq(a) * (delta(c, i) * y[j] + y[i] * delta(c, j)) +
                     q * (delta(a, i) * delta(c, j) + delta(c, i) * delta(a, j));
          h[((i * n + j) * n + a) * n + c] = k.A * (k.a * delta(i, j) * ddp(a, c) + k.b * t);
        }
  return h;
}

Eigen::MatrixXd lame_of_fundamental(std::span<const double> y) {
  const int n = static_cast<int>(y.size());
  auto H = fundamental_hessian(y);
  auto at = [&](int i, int j, int a, int c) { return H[((i * n + j) * n + a) * n + c]; };
  Eigen::MatrixXd out(n, n);
  for (int i = 0; i < n; ++i)
    for (int p = 0; p < n; ++p) {
      double lap = 0.0, graddiv = 0.0;
      for (int a = 0; a < n; ++a) {
        lap += at(i, p, a, a);
        graddiv += at(a, p, i, a);
      }
      out(i, p) = -lap - (1.0 - 2.0 / n) * graddiv;
    }
  return out;
}

std::vector<double> stress_kernel(std::span<const double> x, std::span<const double> y) {
  const int n = static_cast<int>(x.size());
  if (static_cast<int>(y.size()) != n) throw InvalidArgument("stress_kernel: dimension mismatch");
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = x[i] - y[i];
  if (norm_of(v) == 0.0) throw InvalidArgument("stress_kernel: x = y");
  auto d = fundamental_gradient(v);
  auto dG = [&](int i, int j, int k) { return d[(i * n + j) * n + k]; };  // d_k G_ij
  std::vector<double> H(n * n * n);
  for (int p = 0; p < n; ++p) {
    double div = 0.0;
    for (int k = 0; k < n; ++k) div += dG(k, p, k);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        H[(i * n + j) * n + p] = dG(j, p, i) + dG(i, p, j) - (i == j ? 2.0 / n * div : 0.0);
  }
  return H;
}

Eigen::MatrixXd conformal_killing_of_fundamental(std::span<const double> v, std::span<const double> zeta) {
  const int n = static_cast<int>(v.size());
  auto d = fundamental_gradient(v);
  // D(i, k) = d_k (G zeta)_i
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k)
      for (int p = 0; p < n; ++p) D(i, k) += d[(i * n + p) * n + k] * zeta[p];
  Eigen::MatrixXd L = D + D.transpose();
  L.diagonal().array() -= 2.0 / n * D.trace();
  return L;
}

BallQuadrature ball_quadrature(int n, double R, int radial_nodes, int angular_nodes) {
  if (!(R > 0.0)) throw InvalidArgument("ball_quadrature: radius must be positive");
  BallQuadrature q;
  q.n = n;
  q.R = R;
  Rule1D rad = gauss_legendre(radial_nodes, 0.0, R);
  SphereRule sph = sphere_rule(n, angular_nodes);
  for (int i = 0; i < radial_nodes; ++i) {
    double r = rad.x[i];
    double wr = rad.w[i] * std::pow(r, n - 1);
    for (std::size_t s = 0; s < sph.size(); ++s) {
      const double* p = sph.point(s);
      for (int c = 0; c < n; ++c) q.points.push_back(r * p[c]);
      q.w.push_back(wr * sph.w[s]);
    }
  }
  return q;
}

std::vector<double> KillingBasis::generator(int n, std::size_t g, std::span<const double> x) {
  std::vector<double> v(n, 0.0);
  const std::size_t nn = static_cast<std::size_t>(n);
  const std::size_t rot = nn * (nn - 1) / 2;
  if (g < nn) {
    v[g] = 1.0;
  } else if (g < nn + rot) {
    std::size_t idx = g - nn;
    for (int a = 0; a < n; ++a)
      for (int b = a + 1; b < n; ++b) {
        if (idx-- == 0) {
          v[b] = x[a];
          v[a] = -x[b];
          return v;
        }
      }
  } else if (g == nn + rot) {
    for (int a = 0; a < n; ++a) v[a] = x[a];
  } else if (g < generator_count(n)) {
    int i = static_cast<int>(g - nn - rot - 1);
    double r2 = 0.0;
    for (int a = 0; a < n; ++a) r2 += x[a] * x[a];
    for (int j = 0; j < n; ++j) v[j] = r2 * delta(i, j) - 2.0 * x[i] * x[j];
  } else {
    throw InvalidArgument("KillingBasis: generator index out of range");
  }
  return v;
}

Eigen::MatrixXd KillingBasis::generator_jacobian(int n, std::size_t g, std::span<const double> x) {
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  const std::size_t nn = static_cast<std::size_t>(n);
  const std::size_t rot = nn * (nn - 1) / 2;
  if (g < nn) return J;
  if (g < nn + rot) {
    std::size_t idx = g - nn;
    for (int a = 0; a < n; ++a)
      for (int b = a + 1; b < n; ++b) {
        if (idx-- == 0) {
          J(b, a) = 1.0;
          J(a, b) = -1.0;
          return J;
        }
      }
  }
  if (g == nn + rot) return Eigen::MatrixXd::Identity(n, n);
  if (g >= generator_count(n)) throw InvalidArgument("KillingBasis: generator index out of range");
  int i = static_cast<int>(g - nn - rot - 1);
  // d_k (|x|^2 delta_ij - 2 x_i x_j) = 2 x_k delta_ij - 2 delta_ik x_j - 2 x_i delta_jk
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k) J(j, k) = 2.0 * x[k] * delta(i, j) - 2.0 * delta(i, k) * x[j] - 2.0 * x[i] * delta(j, k);
  return J;
}

std::vector<double> KillingBasis::evaluate(std::size_t e, std::span<const double> x) const {
  std::vector<double> v(n_, 0.0);
  for (std::size_t g = 0; g < generator_count(n_); ++g) {
    double c = coeffs_(static_cast<Eigen::Index>(g), static_cast<Eigen::Index>(e));
    if (c == 0.0) continue;
    auto gv = generator(n_, g, x);
    for (int a = 0; a < n_; ++a) v[a] += c * gv[a];
  }
  return v;
}

Eigen::MatrixXd KillingBasis::jacobian(std::size_t e, std::span<const double> x) const {
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n_, n_);
  for (std::size_t g = 0; g < generator_count(n_); ++g) {
    double c = coeffs_(static_cast<Eigen::Index>(g), static_cast<Eigen::Index>(e));
    if (c != 0.0) J += c * generator_jacobian(n_, g, x);
  }
  return J;
}

Eigen::MatrixXd KillingBasis::conformal_killing(std::size_t e, std::span<const double> x) const {
  Eigen::MatrixXd J = jacobian(e, x);
  Eigen::MatrixXd L = J + J.transpose();
  L.diagonal().array() -= 2.0 / n_ * J.trace();
  return L;
}

KillingBasis killing_basis(int n, double R) {
  if (n < 3) throw InvalidArgument("killing_basis: dimension must be >= 3");
  if (!(R > 0.0)) throw InvalidArgument("killing_basis: radius must be positive");
  KillingBasis kb;
  kb.n_ = n;
  kb.R_ = R;
  kb.quad_ = ball_quadrature(n, R, 8, 8);
  const std::size_t m = KillingBasis::generator_count(n);
  // Gram matrix of the generators
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(m, m);
  std::vector<std::vector<double>> vals(m);
  for (std::size_t q = 0; q < kb.quad_.size(); ++q) {
    std::span<const double> x(kb.quad_.point(q), n);
    for (std::size_t g = 0; g < m; ++g) vals[g] = KillingBasis::generator(n, g, x);
    for (std::size_t a = 0; a < m; ++a)
      for (std::size_t b = a; b < m; ++b) {
        double s = 0.0;
        for (int c = 0; c < n; ++c) s += vals[a][c] * vals[b][c];
        G(a, b) += kb.quad_.w[q] * s;
      }
  }
  G.triangularView<Eigen::StrictlyLower>() = G.transpose();
  // modified Gram-Schmidt in the G inner product, applied twice
  Eigen::MatrixXd C = Eigen::MatrixXd::Identity(m, m);
  for (int pass = 0; pass < 2; ++pass)
    for (std::size_t e = 0; e < m; ++e) {
      for (std::size_t f = 0; f < e; ++f) {
        double proj = C.col(f).dot(G * C.col(e));
        C.col(e) -= proj * C.col(f);
      }
      double nrm2 = C.col(e).dot(G * C.col(e));
      if (!(nrm2 > 1e-14)) throw Error("killing_basis: degenerate quadrature (generator " + std::to_string(e) + ")");
      C.col(e) /= std::sqrt(nrm2);
    }
  kb.coeffs_ = C;
  return kb;
}

SampledForm sample_form(const BallQuadrature& grid,
                        const std::function<std::vector<double>(std::span<const double>)>& fn) {
  SampledForm s{&grid, {}};
  s.values.reserve(grid.size() * grid.n);
  for (std::size_t q = 0; q < grid.size(); ++q) {
    auto v = fn(std::span<const double>(grid.point(q), grid.n));
    if (static_cast<int>(v.size()) != grid.n) throw InvalidArgument("sample_form: wrong component count");
    s.values.insert(s.values.end(), v.begin(), v.end());
  }
  return s;
}

double l2_inner(const SampledForm& a, const SampledForm& b) {
  if (a.grid != b.grid) throw GeometryMismatch("l2_inner: forms sampled on different grids");
  const int n = a.grid->n;
  double s = 0.0;
  for (std::size_t q = 0; q < a.grid->size(); ++q) {
    double d = 0.0;
    for (int c = 0; c < n; ++c) d += a.values[q * n + c] * b.values[q * n + c];
    s += a.grid->w[q] * d;
  }
  return s;
}

SampledForm project_killing(const SampledForm& X, const KillingBasis& basis) {
  if (!X.grid) throw InvalidArgument("project_killing: form has no grid");
  const BallQuadrature& grid = *X.grid;
  if (grid.n != basis.dimension() || std::abs(grid.R - basis.radius()) > 1e-14 * basis.radius())
    throw GeometryMismatch("project_killing: grid and basis live on different balls");
  SampledForm out{X.grid, std::vector<double>(X.values.size(), 0.0)};
  for (std::size_t e = 0; e < basis.size(); ++e) {
    SampledForm K = sample_form(grid, [&](std::span<const double> x) { return basis.evaluate(e, x); });
    double c = l2_inner(K, X);
    for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] += c * K.values[i];
  }
  return out;
}

TestForm bump_form(int n, double R, int k, std::vector<double> e) {
  if (static_cast<int>(e.size()) != n) throw InvalidArgument("bump_form: direction has wrong size");
  if (k < 3) throw InvalidArgument("bump_form: exponent must be >= 3 for a C^2 bump");
  TestForm t;
  t.n = n;
  t.R = R;
  // psi(s) = (1 - s/R^2)^k as a function of s = |y|^2
  auto psi = [=](double s, int order) {
    double base = 1.0 - s / (R * R);
    if (base <= 0.0) return 0.0;
    double c = 1.0;
    for (int i = 0; i < order; ++i) c *= -(k - i) / (R * R);
    return c * std::pow(base, k - order);
  };
  t.value = [=](std::span<const double> y) {
    double s = 0.0;
    for (double v : y) s += v * v;
    double p = psi(s, 0);
    std::vector<double> out(n);
    for (int i = 0; i < n; ++i) out[i] = p * e[i];
    return out;
  };
  // lame(phi e)_i = -(lap phi) e_i - (1 - 2/n) d_i (e . grad phi), phi = psi(|y|^2)
  t.lame = [=](std::span<const double> y) {
    double s = 0.0, ey = 0.0;
    for (int i = 0; i < n; ++i) {
      s += y[i] * y[i];
      ey += e[i] * y[i];
    }
    double p1 = psi(s, 1), p2 = psi(s, 2);
    double lap = 2.0 * n * p1 + 4.0 * s * p2;
    std::vector<double> out(n);
    for (int i = 0; i < n; ++i) {
      double hess_e = 2.0 * e[i] * p1 + 4.0 * y[i] * ey * p2;
      out[i] = -lap * e[i] - (1.0 - 2.0 / n) * hess_e;
    }
    return out;
  };
  return t;
}

double representation_residual(const TestForm& X, std::span<const double> x, int cells) {
  const int n = X.n;
  if (static_cast<int>(x.size()) != n) throw InvalidArgument("representation_residual: point has wrong size");
  if (cells < 3) throw InvalidArgument("representation_residual: need at least 3 cells per axis");
  double rx = norm_of(x);
  if (rx >= X.R) throw InvalidArgument("representation_residual: point must lie inside the ball");
  // compact support check on the bounding sphere
  {
    SphereRule s = sphere_rule(n, 6);
    for (std::size_t i = 0; i < s.size(); ++i) {
      std::vector<double> p(n);
      for (int c = 0; c < n; ++c) p[c] = X.R * s.point(i)[c];
      auto v = X.value(p);
      auto l = X.lame(p);
      for (int c = 0; c < n; ++c)
        if (std::abs(v[c]) > 1e-12 || std::abs(l[c]) > 1e-12)
          throw InvalidArgument("representation_residual: form is not compactly supported in the ball");
    }
  }
  const double h = 2.0 * X.R / cells;
  const double cell_vol = std::pow(h, n);
  auto k = kernel_const(n);
  // radius of the ball with the volume of one cell
  const double unit_ball = sphere_area(n - 1) / n;
  const double rho = std::pow(cell_vol / unit_ball, 1.0 / n);
  const double ball_G = k.A * sphere_area(n - 1) * rho * rho / 2.0 * (k.a + k.b / n);

  std::vector<int> own(n);
  for (int a = 0; a < n; ++a) own[a] = std::min(cells - 1, static_cast<int>(std::floor((x[a] + X.R) / h)));

  std::vector<double> acc(n, 0.0), y(n), v(n);
  std::vector<int> idx(n, 0);
  std::size_t total = 1;
  for (int a = 0; a < n; ++a) total *= static_cast<std::size_t>(cells);
  for (std::size_t c = 0; c < total; ++c) {
    std::size_t rest = c;
    bool is_own = true;
    for (int a = n - 1; a >= 0; --a) {
      idx[a] = static_cast<int>(rest % cells);
      rest /= cells;
      y[a] = -X.R + (idx[a] + 0.5) * h;
      if (idx[a] != own[a]) is_own = false;
    }
    if (is_own) continue;
    double s = 0.0;
    for (int a = 0; a < n; ++a) s += y[a] * y[a];
    if (s >= X.R * X.R) continue;
    auto F = X.lame(y);
    for (int a = 0; a < n; ++a) v[a] = x[a] - y[a];
    Eigen::MatrixXd G = fundamental(v);
    for (int i = 0; i < n; ++i) {
      double t = 0.0;
      for (int j = 0; j < n; ++j) t += G(i, j) * F[j];
      acc[i] += cell_vol * t;
    }
  }
  auto Fx = X.lame(x);
  for (int i = 0; i < n; ++i) acc[i] += ball_G * Fx[i];

  auto Xx = X.value(x);
  double scale = 0.0, err = 0.0;
  for (int i = 0; i < n; ++i) {
    scale = std::max(scale, std::abs(Xx[i]));
    err = std::max(err, std::abs(Xx[i] - acc[i]));
  }
  return scale > 0.0 ? err / scale : err;
}

}  // namespace elc
