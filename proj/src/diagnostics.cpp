#include "elc/diagnostics.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "elc/bubbles.hpp"
#include "elc/errors.hpp"
#include "elc/quadrature.hpp"
#include "finite_diff.hpp"

namespace elc {

namespace {

double node_distance(const Geometry& g, std::size_t node, const Ball& b) {
  if (g.kind() == GeometryKind::SphereRadial) return std::abs(g.coordinate(node, 0) - b.center.at(0));
  double s = 0.0;
  for (int a = 0; a < g.dimension(); ++a) {
    double d = g.coordinate(node, a) - b.center[a];
    if (g.kind() == GeometryKind::Torus) {
      const double L = g.period();
      d -= L * std::round(d / L);
    }
    s += d * d;
  }
  return std::sqrt(s);
}

void check_ball(const Geometry& g, const Ball& b, const char* what) {
  const std::size_t dim = g.kind() == GeometryKind::SphereRadial ? 1 : static_cast<std::size_t>(g.dimension());
  if (b.center.size() != dim) throw InvalidArgument(std::string(what) + ": ball centre has the wrong dimension");
  if (!(b.radius > 0.0)) throw InvalidArgument(std::string(what) + ": ball radius must be positive");
}

bool inside(double dist, double radius) { return dist <= radius * (1.0 + 1e-12); }

// Tensor-product cubic Lagrange interpolation on a chart grid.
class ChartInterpolator {
 public:
  explicit ChartInterpolator(const Geometry& g) : g_(g), n_(g.dimension()), N_(g.resolution()) {}

  // Fills the stencil (node, weight) of the point x.
  void stencil(const double* x, std::vector<std::size_t>& nodes, std::vector<double>& weights) const {
    std::vector<int> base(n_);
    std::vector<std::array<double, 4>> w(n_);
    const double h = g_.spacing(), a = g_.half_width();
    for (int ax = 0; ax < n_; ++ax) {
      double t = (x[ax] + a) / h;
      int i0 = std::clamp(static_cast<int>(std::floor(t)) - 1, 0, N_ - 4);
      base[ax] = i0;
      for (int j = 0; j < 4; ++j) {
        double l = 1.0;
        for (int m = 0; m < 4; ++m)
          if (m != j) l *= (t - (i0 + m)) / static_cast<double>(j - m);
        w[ax][j] = l;
      }
    }
    std::size_t total = 1;
    for (int ax = 0; ax < n_; ++ax) total *= 4;
    nodes.resize(total);
    weights.resize(total);
    std::vector<int> idx(n_);
    for (std::size_t c = 0; c < total; ++c) {
      std::size_t rem = c;
      double wt = 1.0;
      for (int ax = n_ - 1; ax >= 0; --ax) {
        int j = static_cast<int>(rem % 4);
        rem /= 4;
        idx[ax] = base[ax] + j;
        wt *= w[ax][j];
      }
      nodes[c] = g_.flat_index(idx);
      weights[c] = wt;
    }
  }

 private:
  const Geometry& g_;
  int n_, N_;
};

double apply(std::span<const double> f, const std::vector<std::size_t>& nodes, const std::vector<double>& w) {
  double s = 0.0;
  for (std::size_t k = 0; k < nodes.size(); ++k) s += w[k] * f[nodes[k]];
  return s;
}

using Field = std::vector<double>;

}  // namespace

double harnack_ratio(const ScalarField& u, const Ball& inner, const Ball& outer) {
  const Geometry& g = u.geometry();
  check_ball(g, inner, "harnack_ratio");
  check_ball(g, outer, "harnack_ratio");
  double sup = -std::numeric_limits<double>::infinity(), inf = std::numeric_limits<double>::infinity();
  std::size_t count = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    bool in_outer = inside(node_distance(g, i, outer), outer.radius);
    bool in_inner = inside(node_distance(g, i, inner), inner.radius);
    if (!std::isfinite(u[i])) throw InvalidArgument("harnack_ratio: non-finite value");
    if ((in_outer || in_inner) && !(u[i] > 0.0)) throw InvalidArgument("harnack_ratio: u must be positive on the outer region");
    if (in_inner) {
      sup = std::max(sup, u[i]);
      inf = std::min(inf, u[i]);
      ++count;
    }
  }
  if (count == 0) throw InvalidArgument("harnack_ratio: the inner region contains no grid nodes");
  return sup / inf;
}

PohozaevReport pohozaev_defect(const ScalarField& v, const SystemCoefficients& C, const Ball& ball,
                               const OneFormField* W, const PohozaevOptions& opts) {
  const Geometry& g = v.geometry();
  if (g.kind() != GeometryKind::Chart) throw UnsupportedGeometry("pohozaev_defect: v must live on a chart");
  require_same(g, C.geometry(), "pohozaev_defect");
  check_ball(g, ball, "pohozaev_defect");
  const int n = g.dimension();
  for (int a = 0; a < n; ++a)
    if (std::abs(ball.center[a]) + ball.radius > g.half_width() * (1.0 + 1e-12))
      throw InvalidArgument("pohozaev_defect: ball exceeds the chart");
  if (opts.radial_nodes < 2 || opts.sphere_nodes < 2) throw InvalidArgument("pohozaev_defect: too few quadrature nodes");
  std::vector<double> Y;
  if (opts.direction) {
    Y = *opts.direction;
    if (static_cast<int>(Y.size()) != n) throw InvalidArgument("pohozaev_defect: direction has the wrong dimension");
  }
  for (double x : v.values())
    if (!(x > 0.0)) throw InvalidArgument("pohozaev_defect: v must be positive");

  OneFormField W0 = W ? *W : OneFormField(v.geometry_ptr());
  ScalarField a = quadratic_source(C, W0);
  OneFormField grad = gradient(v, g);
  const double p = 2.0 * n / (n - 2.0), half = 0.5 * (n - 2.0);

  ChartInterpolator interp(g);
  std::vector<std::size_t> nodes;
  std::vector<double> w;
  std::vector<double> x(n), dv(n);
  auto sample = [&](double& val) {
    interp.stencil(x.data(), nodes, w);
    val = apply(v.values(), nodes, w);
    for (int k = 0; k < n; ++k) dv[k] = apply(grad.component(k), nodes, w);
  };

  PohozaevReport rep;
  auto sph = sphere_rule(n, opts.sphere_nodes);
  auto rad = gauss_legendre(opts.radial_nodes, 0.0, ball.radius);
  for (std::size_t q = 0; q < rad.x.size(); ++q) {
    const double r = rad.x[q], wr = rad.w[q] * std::pow(r, n - 1);
    for (std::size_t s = 0; s < sph.size(); ++s) {
      const double* om = sph.point(s);
      for (int k = 0; k < n; ++k) x[k] = ball.center[k] + r * om[k];
      double val;
      sample(val);
      const double hv = apply(C.h.values(), nodes, w), fv = apply(C.f.values(), nodes, w);
      const double av = apply(a.values(), nodes, w);
      double xd = 0.0, yd = 0.0;
      for (int k = 0; k < n; ++k) xd += r * om[k] * dv[k];
      for (std::size_t k = 0; k < Y.size(); ++k) yd += Y[k] * dv[k];
      const double D = xd + half * val, wt = wr * sph.w[s];
      const double t1 = -hv * val, t2 = fv * std::pow(val, p - 1.0), t3 = av * std::pow(val, -p - 1.0);
      rep.K1 += wt * D * t1;
      rep.K2 += wt * D * t2;
      rep.K3 += wt * D * t3;
      rep.translation_interior += wt * yd * (t1 + t2 + t3);
    }
  }
  rep.interior = rep.K1 + rep.K2 + rep.K3;

  const double R = ball.radius, area = std::pow(R, n - 1);
  for (std::size_t s = 0; s < sph.size(); ++s) {
    const double* om = sph.point(s);
    for (int k = 0; k < n; ++k) x[k] = ball.center[k] + R * om[k];
    double val;
    sample(val);
    double g2 = 0.0, dn = 0.0, yd = 0.0, yn = 0.0;
    for (int k = 0; k < n; ++k) {
      g2 += dv[k] * dv[k];
      dn += om[k] * dv[k];
    }
    for (std::size_t k = 0; k < Y.size(); ++k) {
      yd += Y[k] * dv[k];
      yn += Y[k] * om[k];
    }
    const double wt = area * sph.w[s];
    rep.boundary += wt * (0.5 * R * g2 - half * val * dn - R * dn * dn);
    rep.translation_boundary += wt * (0.5 * yn * g2 - yd * dn);
  }
  rep.defect = std::abs(rep.interior - rep.boundary);
  rep.translation_defect = std::abs(rep.translation_interior - rep.translation_boundary);
  return rep;
}

StabilityMargin stability_condition(double h0, double f0, double lap_f0, double Rg, int n) {
  if (n < 3) throw InvalidArgument("stability_condition: dimension must be >= 3");
  if (!(f0 > 0.0)) throw InvalidArgument("stability_condition: f0 must be positive");
  StabilityMargin m;
  m.margin = (n - 2.0) / (4.0 * (n - 1.0)) * Rg - blowup_constants(n).Cn * lap_f0 / f0 - h0;
  m.satisfied = m.margin > 0.0;
  return m;
}

CovarianceResiduals conformal_covariance_residuals(const ScalarField& v, const OneFormField& X, const ScalarField& phi) {
  const Geometry& g = phi.geometry();
  if (g.kind() != GeometryKind::Chart) throw UnsupportedGeometry("conformal_covariance_residuals: a chart is required");
  require_same(g, v.geometry(), "conformal_covariance_residuals");
  require_same(g, X.geometry(), "conformal_covariance_residuals");
  const int n = g.dimension(), N = g.resolution();
  if (n < 3) throw InvalidArgument("conformal_covariance_residuals: dimension must be >= 3");
  for (double x : phi.values())
    if (!(x > 0.0)) throw InvalidArgument("conformal_covariance_residuals: phi must be positive");
  const std::size_t M = g.node_count();
  const double h = g.spacing(), p = 2.0 * n / (n - 2.0), e = 4.0 / (n - 2.0);
  auto D = [&](const Field& f, int axis) { return detail::box_derivative(f, n, N, axis, h, 1); };
  auto field = [](std::span<const double> s) { return Field(s.begin(), s.end()); };

  // metric g_ij = phi^{4/(n-2)} delta_ij, its inverse and first derivatives
  Field s(M);
  for (std::size_t m = 0; m < M; ++m) s[m] = std::pow(phi[m], e);
  std::vector<std::vector<Field>> gm(n, std::vector<Field>(n, Field(M, 0.0))), gi = gm;
  for (int i = 0; i < n; ++i) gm[i][i] = s;
  {
    Eigen::MatrixXd G(n, n);
    for (std::size_t m = 0; m < M; ++m) {
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) G(i, j) = gm[i][j][m];
      Eigen::MatrixXd Gi = G.inverse();
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) gi[i][j][m] = Gi(i, j);
    }
  }
  // dg[k][i][j] = d_k g_ij
  std::vector<std::vector<std::vector<Field>>> dg(n, std::vector<std::vector<Field>>(n, std::vector<Field>(n)));
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) dg[k][i][j] = D(gm[i][j], k);
  // Gamma[k][i][j] = Gamma^k_ij
  auto Gam = dg;
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (std::size_t m = 0; m < M; ++m) {
          double acc = 0.0;
          for (int l = 0; l < n; ++l) acc += gi[k][l][m] * (dg[i][l][j][m] + dg[j][l][i][m] - dg[l][i][j][m]);
          Gam[k][i][j][m] = 0.5 * acc;
        }

  // scalar curvature R = g^{ij} (d_k G^k_ij - d_j G^k_ik + G^k_kl G^l_ij - G^k_jl G^l_ik)
  Field Rs(M, 0.0);
  {
    std::vector<Field> trace_i(n, Field(M, 0.0));
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < n; ++k)
        for (std::size_t m = 0; m < M; ++m) trace_i[i][m] += Gam[k][i][k][m];
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        Field Ric(M, 0.0);
        for (int k = 0; k < n; ++k) {
          auto d = D(Gam[k][i][j], k);
          for (std::size_t m = 0; m < M; ++m) Ric[m] += d[m];
        }
        auto d = D(trace_i[i], j);
        for (std::size_t m = 0; m < M; ++m) {
          double q = -d[m];
          for (int k = 0; k < n; ++k)
            for (int l = 0; l < n; ++l) q += Gam[k][k][l][m] * Gam[l][i][j][m] - Gam[k][j][l][m] * Gam[l][i][k][m];
          Rs[m] += gi[i][j][m] * (Ric[m] + q);
        }
      }
  }

  CovarianceResiduals out;

  // scalar identity
  {
    Field vf = field(v.values());
    std::vector<Field> dv(n);
    for (int k = 0; k < n; ++k) dv[k] = D(vf, k);
    Field lapg(M, 0.0);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        auto dij = i == j ? detail::box_derivative(vf, n, N, i, h, 2) : D(dv[j], i);
        for (std::size_t m = 0; m < M; ++m) {
          double q = dij[m];
          for (int k = 0; k < n; ++k) q -= Gam[k][i][j][m] * dv[k][m];
          lapg[m] -= gi[i][j][m] * q;
        }
      }
    ScalarField pv(phi.geometry_ptr());
    for (std::size_t m = 0; m < M; ++m) pv[m] = phi[m] * v[m];
    auto lhs = laplace_beltrami(pv, g);
    const double cn = (n - 2.0) / (4.0 * (n - 1.0));
    for (std::size_t m = 0; m < M; ++m) {
      double rhs = std::pow(phi[m], p - 1.0) * (lapg[m] + cn * Rs[m] * v[m]);
      out.scalar = std::max(out.scalar, std::abs(lhs[m] - rhs));
    }
  }

  // L_g X from covariant derivatives
  std::vector<std::vector<Field>> LgX(n, std::vector<Field>(n, Field(M)));
  {
    std::vector<std::vector<Field>> nab(n, std::vector<Field>(n));
    for (int j = 0; j < n; ++j) {
      Field Xj = field(X.component(j));
      for (int i = 0; i < n; ++i) nab[i][j] = D(Xj, i);
    }
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (std::size_t m = 0; m < M; ++m)
          for (int k = 0; k < n; ++k) nab[i][j][m] -= Gam[k][i][j][m] * X.component(k)[m];
    Field div(M, 0.0);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (std::size_t m = 0; m < M; ++m) div[m] += gi[i][j][m] * nab[i][j][m];
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (std::size_t m = 0; m < M; ++m)
          LgX[i][j][m] = nab[i][j][m] + nab[j][i][m] - 2.0 / n * gm[i][j][m] * div[m];
  }

  OneFormField Z(X.geometry_ptr());
  for (int i = 0; i < n; ++i)
    for (std::size_t m = 0; m < M; ++m) Z.component(i)[m] = X.component(i)[m] / s[m];
  auto LZ = conformal_killing_deriv(Z, g);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      auto c = LZ.component(i, j);
      for (std::size_t m = 0; m < M; ++m) out.killing = std::max(out.killing, std::abs(s[m] * c[m] - LgX[i][j][m]));
    }

  // Lame identity: Lame_g X_i = -g^{jk} (d_k S_ji - G^l_kj S_li - G^l_ki S_jl), S = L_g X
  {
    auto lz = lame(Z, g);
    std::vector<Field> dlogphi(n);
    Field lp(M);
    for (std::size_t m = 0; m < M; ++m) lp[m] = std::log(phi[m]);
    for (int k = 0; k < n; ++k) dlogphi[k] = D(lp, k);
    for (int i = 0; i < n; ++i) {
      Field rhs(M, 0.0);
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
          auto d = D(LgX[j][i], k);
          for (std::size_t m = 0; m < M; ++m) {
            double q = d[m];
            for (int l = 0; l < n; ++l) q -= Gam[l][k][j][m] * LgX[l][i][m] + Gam[l][k][i][m] * LgX[j][l][m];
            rhs[m] -= gi[j][k][m] * q;
          }
        }
      for (std::size_t m = 0; m < M; ++m) {
        double lhs = lz.component(i)[m];
        for (int k = 0; k < n; ++k) lhs -= p * dlogphi[k][m] * LZ.component(k, i)[m];
        out.lame = std::max(out.lame, std::abs(lhs - rhs[m]));
      }
    }
  }
  return out;
}

}  // namespace elc
