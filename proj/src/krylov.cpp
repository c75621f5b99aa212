#include "krylov.hpp"

#include <Eigen/Dense>
#include <cmath>

namespace elc::detail {

namespace {

double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(const Vec& a) { return std::sqrt(dot(a, a)); }

}  // namespace

GmresResult gmres(const LinOp& A, const LinOp& Minv, const Vec& b, Vec& x, double rtol, int restart,
                  int max_iter) {
  const std::size_t n = b.size();
  GmresResult res;
  const double bnorm = norm(b);
  if (bnorm == 0.0) {
    x.assign(n, 0.0);
    res.converged = true;
    return res;
  }
  Vec r(n), w(n), z(n);
  std::vector<Vec> V(restart + 1, Vec(n));
  std::vector<Vec> Z(restart, Vec(n));
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(restart + 1, restart);
  std::vector<double> cs(restart), sn(restart), g(restart + 1);

  while (res.iterations < max_iter) {
    A(x, w);
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - w[i];
    double beta = norm(r);
    res.residual = beta / bnorm;
    if (res.residual < rtol) {
      res.converged = true;
      return res;
    }
    for (std::size_t i = 0; i < n; ++i) V[0][i] = r[i] / beta;
    std::fill(g.begin(), g.end(), 0.0);
    g[0] = beta;
    int k = 0;
    for (; k < restart && res.iterations < max_iter; ++k) {
      ++res.iterations;
      Minv(V[k], Z[k]);
      A(Z[k], w);
      for (int j = 0; j <= k; ++j) {
        H(j, k) = dot(w, V[j]);
        for (std::size_t i = 0; i < n; ++i) w[i] -= H(j, k) * V[j][i];
      }
      // one pass of reorthogonalization keeps the basis clean at tight tolerances
      for (int j = 0; j <= k; ++j) {
        double c = dot(w, V[j]);
        H(j, k) += c;
        for (std::size_t i = 0; i < n; ++i) w[i] -= c * V[j][i];
      }
      H(k + 1, k) = norm(w);
      if (H(k + 1, k) > 0.0)
        for (std::size_t i = 0; i < n; ++i) V[k + 1][i] = w[i] / H(k + 1, k);
      for (int j = 0; j < k; ++j) {
        double t = cs[j] * H(j, k) + sn[j] * H(j + 1, k);
        H(j + 1, k) = -sn[j] * H(j, k) + cs[j] * H(j + 1, k);
        H(j, k) = t;
      }
      double d = std::hypot(H(k, k), H(k + 1, k));
      cs[k] = H(k, k) / d;
      sn[k] = H(k + 1, k) / d;
      H(k, k) = d;
      H(k + 1, k) = 0.0;
      g[k + 1] = -sn[k] * g[k];
      g[k] = cs[k] * g[k];
      if (std::abs(g[k + 1]) / bnorm < rtol) {
        ++k;
        break;
      }
    }
    Eigen::VectorXd y(k);
    for (int i = k - 1; i >= 0; --i) {
      double s = g[i];
      for (int j = i + 1; j < k; ++j) s -= H(i, j) * y(j);
      y(i) = s / H(i, i);
    }
    for (int j = 0; j < k; ++j)
      for (std::size_t i = 0; i < n; ++i) x[i] += y(j) * Z[j][i];
  }
  A(x, w);
  for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - w[i];
  res.residual = norm(r) / bnorm;
  res.converged = res.residual < rtol;
  return res;
}

double lanczos_min_ritz(const LinOp& A, const Vec& start, int steps) {
  const std::size_t n = start.size();
  std::vector<Vec> Q;
  Vec q = start;
  double nq = norm(q);
  for (double& v : q) v /= nq;
  Q.push_back(q);
  std::vector<double> alpha, beta;
  Vec w(n);
  for (int k = 0; k < steps; ++k) {
    A(Q[k], w);
    double a = dot(w, Q[k]);
    alpha.push_back(a);
    for (const auto& qj : Q) {
      double c = dot(w, qj);
      for (std::size_t i = 0; i < n; ++i) w[i] -= c * qj[i];
    }
    double b = norm(w);
    if (b < 1e-14 * std::max(1.0, std::abs(a)) || k + 1 == steps) break;
    beta.push_back(b);
    for (double& v : w) v /= b;
    Q.push_back(w);
  }
  const int m = static_cast<int>(alpha.size());
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, m);
  for (int i = 0; i < m; ++i) {
    T(i, i) = alpha[i];
    if (i + 1 < m) T(i, i + 1) = T(i + 1, i) = beta[i];
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

}  // namespace elc::detail
