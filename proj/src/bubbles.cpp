#include "elc/bubbles.hpp"

#include <algorithm>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <cmath>
#include <functional>
#include <numbers>
#include <string>

#include "elc/errors.hpp"
#include "elc/quadrature.hpp"

namespace elc {

namespace {

double norm_of(std::span<const double> v) {
  double s = 0.0;
  for (double c : v) s += c * c;
  return std::sqrt(s);
}

std::vector<double> offset(const BubbleParams& p, std::span<const double> x) {
  if (static_cast<int>(x.size()) != p.n) throw InvalidArgument("bubble: point has wrong dimension");
  std::vector<double> z(x.begin(), x.end());
  if (!p.center.empty())
    for (int i = 0; i < p.n; ++i) z[i] -= p.center[i];
  return z;
}

double profile_c(const BubbleParams& p) { return p.f_center / (p.n * (p.n - 2.0)); }

// B^{2*} as a function of the distance to the centre
double bubble_crit_power(const BubbleParams& p, double r) {
  return std::pow(p.mu, p.n) * std::pow(p.mu * p.mu + profile_c(p) * r * r, -p.n);
}

double smooth_step(double t) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  double a = std::exp(-1.0 / t), b = std::exp(-1.0 / (1.0 - t));
  return a / (a + b);
}

// Orthogonal map sending e_0 to the unit vector a.
Eigen::MatrixXd frame_for(const Eigen::VectorXd& a) {
  const int n = static_cast<int>(a.size());
  Eigen::VectorXd w = -a;
  w(0) += 1.0;
  double w2 = w.squaredNorm();
  if (w2 < 1e-28) return Eigen::MatrixXd::Identity(n, n);
  return Eigen::MatrixXd::Identity(n, n) - 2.0 * w * w.transpose() / w2;
}

struct PolarRegion {
  Eigen::VectorXd origin;
  Eigen::VectorXd axis;
  std::vector<double> s_breaks;
  std::vector<double> phi_breaks;
};

// Integrate weight(u) over a region in polar coordinates u = origin + s (cos phi axis + sin phi w),
// w on the transverse unit sphere. Returns the sum of weight * measure.
Eigen::MatrixXd integrate_polar(const PolarRegion& reg, int m, int sphere_m,
                                const std::function<void(const Eigen::VectorXd&, double, Eigen::MatrixXd&)>& add,
                                std::size_t& evals) {
  const int n = static_cast<int>(reg.origin.size());
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd H = frame_for(reg.axis);
  SphereRule tr = sphere_rule(n - 1, sphere_m);
  std::vector<Eigen::VectorXd> trans;
  for (std::size_t t = 0; t < tr.size(); ++t) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
    for (int c = 0; c < n - 1; ++c) e(c + 1) = tr.point(t)[c];
    trans.push_back(H * e);
  }
  Rule1D sr = composite_gauss(reg.s_breaks, m);
  Rule1D pr = composite_gauss(reg.phi_breaks, m);
  for (std::size_t a = 0; a < pr.x.size(); ++a) {
    double cp = std::cos(pr.x[a]), sp = std::sin(pr.x[a]);
    double wphi = pr.w[a] * std::pow(sp, n - 2);
    for (std::size_t t = 0; t < trans.size(); ++t) {
      Eigen::VectorXd dir = cp * reg.axis + sp * trans[t];
      double wdir = wphi * tr.w[t];
      for (std::size_t b = 0; b < sr.x.size(); ++b) {
        double s = sr.x[b];
        Eigen::VectorXd u = reg.origin + s * dir;
        add(u, wdir * sr.w[b] * std::pow(s, n - 1), acc);
        ++evals;
      }
    }
  }
  return acc;
}

std::vector<double> geometric_breaks(double start, double end, double ratio, std::vector<double> extra) {
  std::vector<double> b{0.0};
  for (double r = start; r < end; r *= ratio) b.push_back(r);
  b.push_back(end);
  for (double e : extra)
    if (e > 0.0 && e < end) b.push_back(e);
  std::sort(b.begin(), b.end());
  std::vector<double> out;
  for (double v : b)
    if (out.empty() || v - out.back() > 1e-12 * end) out.push_back(v);
  return out;
}

// Shared driver for the two integral 1-forms: kmom < 0 means no moment factor.
QuadratureResult quad_integral(std::span<const double> zeta_in, int kmom, const BubbleParams& p,
                               std::span<const double> x, const QuadratureSpec& spec) {
  p.validate();
  const int n = p.n;
  if (static_cast<int>(zeta_in.size()) != n) throw InvalidArgument("quadrature: direction has wrong dimension");
  if (spec.nodes_per_panel < 2 || spec.sphere_nodes < 1 || !(spec.radial_ratio > 1.0) || !(spec.truncation > 1.0))
    throw InvalidArgument("quadrature: invalid quadrature spec");
  auto zv = offset(p, x);
  Eigen::Map<const Eigen::VectorXd> zeta(zeta_in.data(), n);
  Eigen::Map<const Eigen::VectorXd> z(zv.data(), n);
  const double zn = z.norm();
  const double mu = p.mu;

  QuadratureResult res;
  res.value = Eigen::MatrixXd::Zero(n, n);
  if (zeta.norm() == 0.0) return res;

  // L_xi (G zeta)(v) = kc |v|^{1-n} (delta <zeta, v^> - zeta v^T - v zeta^T - (n-2) <zeta, v^> v v^T),
  // v^ = v / |v|; agrees with conformal_killing_of_fundamental and avoids allocations
  const double kc = n / (2.0 * (n - 1.0) * sphere_area(n - 1));
  auto kernel_add = [&](const Eigen::VectorXd& u, double w, double chi, Eigen::MatrixXd& acc) {
    if (chi == 0.0) return;
    double f = bubble_crit_power(p, u.norm()) * w * chi;
    if (kmom >= 0) f *= u(kmom);
    if (f == 0.0) return;
    Eigen::VectorXd v = z - u;
    double r = v.norm();
    v /= r;
    double q = zeta.dot(v);
    f *= kc * std::pow(r, 1.0 - n);
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i)
        acc(i, j) += f * ((i == j ? q : 0.0) - zeta(i) * v(j) - zeta(j) * v(i) - (n - 2.0) * q * v(i) * v(j));
  };

  const double Rs = 0.5 * zn;
  auto chi_near = [&](double s) { return 1.0 - smooth_step((s - 0.5 * Rs) / (0.5 * Rs)); };

  auto run = [&](double Rmax, int m) {
    std::size_t evals = 0;
    Eigen::MatrixXd total = Eigen::MatrixXd::Zero(n, n);
    if (zn < mu) {
      // the singular point sits inside the core: one polar chart about x
      PolarRegion reg{z, Eigen::VectorXd::Zero(n), geometric_breaks(0.25 * mu, Rmax, spec.radial_ratio, {}),
                      {}};
      reg.axis(0) = 1.0;
      if (zn > 0.0) reg.axis = -z / zn;
      for (int i = 0; i <= 12; ++i) reg.phi_breaks.push_back(std::numbers::pi * i / 12.0);
      total += integrate_polar(reg, m, spec.sphere_nodes,
                               [&](const Eigen::VectorXd& u, double w, Eigen::MatrixXd& acc) { kernel_add(u, w, 1.0, acc); },
                               evals);
    } else {
      Eigen::VectorXd zh = z / zn;
      PolarRegion nearr{z, -zh, {0.0, 0.25 * Rs, 0.5 * Rs, 0.75 * Rs, Rs}, {}};
      for (int i = 0; i <= 8; ++i) nearr.phi_breaks.push_back(std::numbers::pi * i / 8.0);
      total += integrate_polar(
          nearr, m, spec.sphere_nodes,
          [&](const Eigen::VectorXd& u, double w, Eigen::MatrixXd& acc) {
            kernel_add(u, w, chi_near((z - u).norm()), acc);
          },
          evals);
      PolarRegion farr{Eigen::VectorXd::Zero(n), zh,
                       geometric_breaks(0.25 * mu, Rmax, spec.radial_ratio,
                                        {0.5 * zn, 0.75 * zn, zn, 1.25 * zn, 1.5 * zn}),
                       {0.0, 0.05, 0.1, 0.2, 0.3, 0.45, 0.6, 0.8, 1.0, 1.3, 1.6, 2.0, 2.5, std::numbers::pi}};
      total += integrate_polar(
          farr, m, spec.sphere_nodes,
          [&](const Eigen::VectorXd& u, double w, Eigen::MatrixXd& acc) {
            kernel_add(u, w, 1.0 - chi_near((z - u).norm()), acc);
          },
          evals);
    }
    res.evaluations += evals;
    return total;
  };

  // far-field bound for |u| >= R >= 4 |z|: |z - u| >= 3|u|/4
  const double mom = kmom >= 0 ? 1.0 : 0.0;
  const double ck = n / (2.0 * (n - 1.0) * sphere_area(n - 1)) * (std::sqrt(double(n)) + n) * zeta.norm();
  auto tail = [&](double R) {
    double c = profile_c(p);
    return ck * sphere_area(n - 1) * std::pow(4.0 / 3.0, n - 1) * std::pow(mu, n) * std::pow(c, -n) *
           std::pow(R, mom - 2.0 * n + 1.0) / (2.0 * n - mom - 1.0);
  };

  double Rmax = std::max(spec.truncation * mu, 4.0 * std::max(mu, zn));
  for (;;) {
    if (Rmax > spec.max_truncation * mu)
      throw QuadratureBudgetExceeded("quadrature: far-field tail above tolerance within the truncation budget");
    res.value = run(Rmax, spec.nodes_per_panel);
    double t = tail(Rmax - zn);
    double scale = res.value.norm();
    if (t <= spec.tail_tolerance * scale || (scale == 0.0 && t == 0.0)) {
      res.tail_bound = t;
      break;
    }
    Rmax *= 4.0;
  }
  res.truncation_radius = Rmax;
  if (spec.estimate_error) {
    Eigen::MatrixXd coarse = run(Rmax, std::max(2, spec.nodes_per_panel / 2));
    res.error_estimate = (coarse - res.value).norm();
  }
  return res;
}

}  // namespace

void BubbleParams::validate() const {
  if (n < 3) throw InvalidArgument("BubbleParams: dimension must be >= 3");
  if (!(mu > 0.0) || !std::isfinite(mu)) throw InvalidArgument("BubbleParams: mu must be positive");
  if (!(f_center > 0.0) || !std::isfinite(f_center)) throw InvalidArgument("BubbleParams: f_center must be positive");
  if (!center.empty() && static_cast<int>(center.size()) != n) throw InvalidArgument("BubbleParams: centre has wrong dimension");
}

void DirectionData::validate(int n) const {
  auto unit = [&](const std::vector<double>& v, const char* what) {
    if (static_cast<int>(v.size()) != n) throw InvalidArgument(std::string("DirectionData: ") + what + " has wrong dimension");
    if (std::abs(norm_of(v) - 1.0) > 1e-12) throw InvalidArgument(std::string("DirectionData: ") + what + " is not a unit vector");
  };
  if (!zeta0.empty()) unit(zeta0, "zeta0");
  for (const auto& z : zeta)
    if (!z.empty()) unit(z, "zeta_k");
  if (!beta.empty() && static_cast<int>(beta.size()) != n) throw InvalidArgument("DirectionData: beta has wrong size");
  if (!zeta.empty() && static_cast<int>(zeta.size()) != n) throw InvalidArgument("DirectionData: need one zeta_k per axis");
}

double bubble(const BubbleParams& p, std::span<const double> x) {
  p.validate();
  auto z = offset(p, x);
  double r = norm_of(z);
  return std::pow(p.mu, 0.5 * (p.n - 2)) * std::pow(p.mu * p.mu + profile_c(p) * r * r, 1.0 - 0.5 * p.n);
}

std::vector<double> bubble_gradient(const BubbleParams& p, std::span<const double> x) {
  p.validate();
  auto z = offset(p, x);
  const int n = p.n;
  double c = profile_c(p), r = norm_of(z);
  double s = p.mu * p.mu + c * r * r;
  double k = -std::pow(p.mu, 0.5 * (n - 2)) * (n - 2.0) * c * std::pow(s, -0.5 * n);
  for (double& v : z) v *= k;
  return z;
}

Eigen::MatrixXd bubble_hessian(const BubbleParams& p, std::span<const double> x) {
  p.validate();
  auto z = offset(p, x);
  const int n = p.n;
  double c = profile_c(p), r = norm_of(z);
  double s = p.mu * p.mu + c * r * r;
  double A = std::pow(p.mu, 0.5 * (n - 2));
  Eigen::MatrixXd H(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      H(i, j) = -A * (n - 2.0) * c *
                ((i == j ? std::pow(s, -0.5 * n) : 0.0) - n * c * z[i] * z[j] * std::pow(s, -0.5 * n - 1.0));
  return H;
}

double bubble_laplacian(const BubbleParams& p, std::span<const double> x) { return -bubble_hessian(p, x).trace(); }

double standard_profile(int n, double f0, std::span<const double> x) {
  BubbleParams p;
  p.n = n;
  p.mu = 1.0;
  p.f_center = f0;
  return bubble(p, x);
}

double theta(double mu, std::span<const double> z) {
  if (!(mu > 0.0)) throw InvalidArgument("theta: mu must be positive");
  double r = norm_of(z);
  return std::sqrt(mu * mu + r * r);
}

QuadratureResult quad_LV(std::span<const double> X0, const BubbleParams& p, std::span<const double> x,
                         const QuadratureSpec& spec) {
  return quad_integral(X0, -1, p, x, spec);
}

QuadratureResult quad_LP(std::span<const double> dXk, int k, const BubbleParams& p, std::span<const double> x,
                         const QuadratureSpec& spec) {
  if (k < 0 || k >= p.n) throw InvalidArgument("quad_LP: axis index out of range");
  return quad_integral(dXk, k, p, x, spec);
}

Eigen::MatrixXd asympt_LV(const DirectionData& d, const BubbleParams& p, std::span<const double> x) {
  p.validate();
  const int n = p.n;
  d.validate(n);
  if (d.zeta0.empty()) throw InvalidArgument("asympt_LV: zeta0 is required");
  auto z = offset(p, x);
  double r = norm_of(z);
  if (r == 0.0) throw InvalidArgument("asympt_LV: z = 0");
  std::vector<double> zh(n);
  double q = 0.0;
  for (int i = 0; i < n; ++i) {
    zh[i] = z[i] / r;
    q += d.zeta0[i] * zh[i];
  }
  const auto C = blowup_constants(n);
  double pref = d.eps * C.C1 * std::pow(p.f_center, -0.5 * n) * std::pow(r, 1.0 - n);
  Eigen::MatrixXd M(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      M(i, j) = pref * ((i == j ? q : 0.0) - d.zeta0[i] * zh[j] - d.zeta0[j] * zh[i] - (n - 2.0) * q * zh[i] * zh[j]);
  return M;
}

Eigen::MatrixXd asympt_LP(const DirectionData& d, const BubbleParams& p, std::span<const double> x, int k) {
  p.validate();
  const int n = p.n;
  d.validate(n);
  if (k < 0 || k >= n) throw InvalidArgument("asympt_LP: axis index out of range");
  if (d.beta.empty() || d.zeta.empty()) throw InvalidArgument("asympt_LP: beta and zeta_k are required");
  auto z = offset(p, x);
  double r = norm_of(z);
  if (r == 0.0) throw InvalidArgument("asympt_LP: z = 0");
  const auto& zeta = d.zeta[k];
  std::vector<double> zh(n);
  double q = 0.0;
  for (int i = 0; i < n; ++i) {
    zh[i] = z[i] / r;
    q += zeta[i] * zh[i];
  }
  auto del = [](int a, int b) { return a == b ? 1.0 : 0.0; };
  const auto C = blowup_constants(n);
  double pref = d.beta[k] * p.mu * p.mu * std::pow(r, -n) * C.C2 * std::pow(p.f_center, -0.5 * (n + 2));
  Eigen::MatrixXd M(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double b = zeta[i] * (n * zh[j] * zh[k] - del(j, k)) + zeta[j] * (n * zh[i] * zh[k] - del(i, k)) +
                 q * (-n * del(i, j) * zh[k] - (n - 2.0) * del(i, k) * zh[j] - (n - 2.0) * del(j, k) * zh[i] +
                      (n + 2.0) * (n - 2.0) * zh[i] * zh[j] * zh[k]) -
                 zeta[k] * ((n - 2.0) * zh[i] * zh[j] - del(i, j));
      M(i, j) = pref * b;
    }
  return M;
}

BlowupConstants blowup_constants(int n) {
  if (n < 3) throw InvalidArgument("blowup_constants: dimension must be >= 3");
  BlowupConstants c;
  const double wn = sphere_area(n), wn1 = sphere_area(n - 1);
  c.Kn_inv_n = std::pow(2.0, -n) * std::pow(n * (n - 2.0), 0.5 * n) * wn;
  c.C1 = std::pow(n, 0.5 * (n + 2)) * std::pow(n - 2.0, 0.5 * n) * wn / (std::pow(2.0, n + 1) * (n - 1.0) * wn1);
  c.C2 = -std::pow(n, 0.5 * (n + 4)) * std::pow(n - 2.0, 0.5 * n) * wn / (std::pow(2.0, n + 1) * (n - 1.0) * wn1);
  c.Cn = (n - 2.0) * (n - 4.0) / (8.0 * (n - 1.0));
  return c;
}

double cn_by_quadrature(int n) {
  if (n <= 4) throw InvalidArgument("cn_by_quadrature: the integral diverges for n <= 4");
  const double a = 1.0 / (n * (n - 2.0));
  boost::math::quadrature::exp_sinh<double> integrator;
  double radial = integrator.integrate([&](double r) {
    if (r <= 0.0 || !std::isfinite(r)) return 0.0;
    return std::exp((n - 1.0) * std::log(r) + (2.0 - n) * std::log1p(a * r * r));
  });
  double integral = sphere_area(n - 1) * radial;
  return 0.5 * (n - 2.0) * blowup_constants(n).Kn_inv_n / integral;
}

}  // namespace elc
