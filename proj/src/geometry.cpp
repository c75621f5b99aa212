#include "elc/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "elc/errors.hpp"
#include "finite_diff.hpp"
#include "spectral.hpp"

namespace elc {

using detail::cplx;
using detail::Spectral;

namespace {

std::shared_ptr<const Spectral> spectral_of(const Geometry& g) {
  return Spectral::get(g.dimension(), g.resolution(), g.period());
}

double sphere_area(int d) {
  // area of the unit d-sphere in R^{d+1}
  return 2.0 * std::pow(std::numbers::pi, 0.5 * (d + 1)) / std::tgamma(0.5 * (d + 1));
}

void require_kind(const Geometry& g, GeometryKind k, const char* what) {
  if (g.kind() != k) throw UnsupportedGeometry(std::string(what) + ": unsupported geometry kind");
}

std::vector<double> to_vec(std::span<const double> s) { return {s.begin(), s.end()}; }

void copy_into(std::span<double> dst, const std::vector<double>& src) {
  std::copy(src.begin(), src.end(), dst.begin());
}

// Spectral partial derivative along axis a (torus).
std::vector<double> spectral_d(const Spectral& sp, std::span<const double> f, int a) {
  std::vector<cplx> F(sp.modes());
  sp.forward(f.data(), F.data());
  for (std::size_t m = 0; m < sp.modes(); ++m) F[m] *= cplx(0.0, sp.k_odd(m, a));
  std::vector<double> out(sp.real_size());
  sp.backward(F.data(), out.data());
  return out;
}

std::vector<double> sphere_d1(const Geometry& g, std::span<const double> f) {
  std::vector<double> out(f.size());
  detail::fd_first(f.data(), 1, g.resolution(), g.spacing(), out.data());
  return out;
}

std::vector<double> sphere_d2(const Geometry& g, std::span<const double> f) {
  std::vector<double> out(f.size());
  detail::fd_second(f.data(), 1, g.resolution(), g.spacing(), out.data());
  return out;
}

std::vector<double> chart_d(const Geometry& g, std::span<const double> f, int a, int order) {
  return detail::box_derivative(to_vec(f), g.dimension(), g.resolution(), a, g.spacing(), order);
}

}  // namespace

GeometryPtr Geometry::torus(int n, int resolution, double period, double model_curvature) {
  if (n < 3) throw InvalidArgument("torus: dimension must be >= 3");
  if (resolution < 8 || resolution % 2 != 0)
    throw InvalidArgument("torus: resolution must be even and >= 8");
  if (!(period > 0.0)) throw InvalidArgument("torus: period must be positive");
  auto g = std::shared_ptr<Geometry>(new Geometry());
  g->kind_ = GeometryKind::Torus;
  g->n_ = n;
  g->N_ = resolution;
  g->period_ = period;
  g->h_ = period / resolution;
  g->model_curvature_ = model_curvature;
  g->nodes_ = 1;
  for (int a = 0; a < n; ++a) g->nodes_ *= static_cast<std::size_t>(resolution);
  return g;
}

GeometryPtr Geometry::sphere_radial(int n, int resolution, double eps) {
  if (n < 3) throw InvalidArgument("sphere: dimension must be >= 3");
  if (resolution < 8) throw InvalidArgument("sphere: resolution must be >= 8");
  if (!(eps > 0.0) || eps >= 0.5 * std::numbers::pi)
    throw InvalidArgument("sphere: eps must lie in (0, pi/2)");
  auto g = std::shared_ptr<Geometry>(new Geometry());
  g->kind_ = GeometryKind::SphereRadial;
  g->n_ = n;
  g->N_ = resolution;
  g->eps_ = eps;
  g->period_ = 0.0;
  g->h_ = (std::numbers::pi - 2.0 * eps) / (resolution - 1);
  g->nodes_ = static_cast<std::size_t>(resolution);
  g->sphere_weights_.resize(g->nodes_);
  const double area = sphere_area(n - 1);
  for (int i = 0; i < resolution; ++i) {
    double r = eps + i * g->h_;
    double w = (i == 0 || i == resolution - 1) ? 0.5 : 1.0;
    g->sphere_weights_[i] = w * g->h_ * area * std::pow(std::sin(r), n - 1);
  }
  return g;
}

GeometryPtr Geometry::chart(int n, int resolution, double half_width) {
  if (n < 2) throw InvalidArgument("chart: dimension must be >= 2");
  if (resolution < 8) throw InvalidArgument("chart: resolution must be >= 8");
  if (!(half_width > 0.0)) throw InvalidArgument("chart: half width must be positive");
  auto g = std::shared_ptr<Geometry>(new Geometry());
  g->kind_ = GeometryKind::Chart;
  g->n_ = n;
  g->N_ = resolution;
  g->half_width_ = half_width;
  g->period_ = 0.0;
  g->h_ = 2.0 * half_width / (resolution - 1);
  g->nodes_ = 1;
  for (int a = 0; a < n; ++a) g->nodes_ *= static_cast<std::size_t>(resolution);
  return g;
}

double Geometry::scalar_curvature() const {
  switch (kind_) {
    case GeometryKind::Torus:
      return model_curvature_;
    case GeometryKind::SphereRadial:
      return n_ * (n_ - 1.0);
    case GeometryKind::Chart:
      return 0.0;
  }
  return 0.0;
}

int Geometry::form_components() const { return kind_ == GeometryKind::SphereRadial ? 1 : n_; }

int Geometry::tensor_components() const {
  return kind_ == GeometryKind::SphereRadial ? 2 : n_ * (n_ + 1) / 2;
}

int Geometry::tensor_index(int i, int j) const {
  if (kind_ == GeometryKind::SphereRadial)
    throw UnsupportedGeometry("tensor_index: sphere tensors are stored as (rr, perp)");
  if (i > j) std::swap(i, j);
  // row-major upper triangle
  return i * n_ - i * (i - 1) / 2 + (j - i);
}

std::vector<int> Geometry::multi_index(std::size_t node) const {
  std::vector<int> idx(kind_ == GeometryKind::SphereRadial ? 1 : n_);
  for (int a = static_cast<int>(idx.size()) - 1; a >= 0; --a) {
    idx[a] = static_cast<int>(node % N_);
    node /= N_;
  }
  return idx;
}

std::size_t Geometry::flat_index(std::span<const int> idx) const {
  std::size_t f = 0;
  for (int i : idx) f = f * N_ + static_cast<std::size_t>(i);
  return f;
}

double Geometry::coordinate(std::size_t node, int axis) const {
  if (kind_ == GeometryKind::SphereRadial) return eps_ + static_cast<double>(node) * h_;
  std::size_t stride = 1;
  for (int a = n_ - 1; a > axis; --a) stride *= N_;
  int i = static_cast<int>((node / stride) % N_);
  if (kind_ == GeometryKind::Torus) return i * h_;
  return -half_width_ + i * h_;
}

std::vector<double> Geometry::point(std::size_t node) const {
  if (kind_ == GeometryKind::SphereRadial) return {coordinate(node, 0)};
  std::vector<double> p(n_);
  for (int a = 0; a < n_; ++a) p[a] = coordinate(node, a);
  return p;
}

double Geometry::weight(std::size_t node) const {
  switch (kind_) {
    case GeometryKind::Torus:
      return std::pow(h_, n_);
    case GeometryKind::SphereRadial:
      return sphere_weights_[node];
    case GeometryKind::Chart: {
      double w = std::pow(h_, n_);
      for (int i : multi_index(node))
        if (i == 0 || i == N_ - 1) w *= 0.5;
      return w;
    }
  }
  return 0.0;
}

double Geometry::volume() const {
  switch (kind_) {
    case GeometryKind::Torus:
      return std::pow(period_, n_);
    case GeometryKind::SphereRadial: {
      double v = 0.0;
      for (double w : sphere_weights_) v += w;
      return v;
    }
    case GeometryKind::Chart:
      return std::pow(2.0 * half_width_, n_);
  }
  return 0.0;
}

bool Geometry::same_as(const Geometry& o) const {
  return kind_ == o.kind_ && n_ == o.n_ && N_ == o.N_ && period_ == o.period_ && eps_ == o.eps_ &&
         half_width_ == o.half_width_ && model_curvature_ == o.model_curvature_;
}

void require_same(const Geometry& a, const Geometry& b, const char* what) {
  if (&a != &b && !a.same_as(b)) throw GeometryMismatch(std::string(what) + ": fields live on different geometries");
}

// ---- fields ----

ScalarField::ScalarField(GeometryPtr g, double value) : geom_(std::move(g)) {
  if (!geom_) throw InvalidArgument("ScalarField: null geometry");
  data_.assign(geom_->node_count(), value);
}

ScalarField::ScalarField(GeometryPtr g, std::vector<double> values)
    : geom_(std::move(g)), data_(std::move(values)) {
  if (!geom_) throw InvalidArgument("ScalarField: null geometry");
  if (data_.size() != geom_->node_count()) throw InvalidArgument("ScalarField: sample count does not match grid");
}

ScalarField ScalarField::from_function(GeometryPtr g,
                                       const std::function<double(std::span<const double>)>& fn) {
  ScalarField f(g);
  for (std::size_t i = 0; i < f.size(); ++i) {
    auto p = g->point(i);
    f[i] = fn(p);
  }
  return f;
}

OneFormField::OneFormField(GeometryPtr g) : geom_(std::move(g)) {
  if (!geom_) throw InvalidArgument("OneFormField: null geometry");
  comps_ = geom_->form_components();
  data_.assign(geom_->node_count() * comps_, 0.0);
}

OneFormField::OneFormField(GeometryPtr g, std::vector<double> data)
    : geom_(std::move(g)), data_(std::move(data)) {
  if (!geom_) throw InvalidArgument("OneFormField: null geometry");
  comps_ = geom_->form_components();
  if (data_.size() != geom_->node_count() * comps_)
    throw InvalidArgument("OneFormField: sample count does not match grid");
}

std::span<double> OneFormField::component(int c) {
  return std::span<double>(data_).subspan(c * nodes(), nodes());
}

std::span<const double> OneFormField::component(int c) const {
  return std::span<const double>(data_).subspan(c * nodes(), nodes());
}

SymTensorField::SymTensorField(GeometryPtr g) : geom_(std::move(g)) {
  if (!geom_) throw InvalidArgument("SymTensorField: null geometry");
  comps_ = geom_->tensor_components();
  data_.assign(geom_->node_count() * comps_, 0.0);
}

std::span<double> SymTensorField::slot(int s) {
  return std::span<double>(data_).subspan(s * nodes(), nodes());
}

std::span<const double> SymTensorField::slot(int s) const {
  return std::span<const double>(data_).subspan(s * nodes(), nodes());
}

std::span<double> SymTensorField::component(int i, int j) { return slot(geom_->tensor_index(i, j)); }

std::span<const double> SymTensorField::component(int i, int j) const {
  return slot(geom_->tensor_index(i, j));
}

// ---- pointwise helpers ----

ScalarField pointwise_norm2(const OneFormField& W) {
  ScalarField out(W.geometry_ptr());
  for (int c = 0; c < W.components(); ++c) {
    auto w = W.component(c);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += w[i] * w[i];
  }
  return out;
}

ScalarField pointwise_norm2(const SymTensorField& T) {
  const Geometry& g = T.geometry();
  ScalarField out(T.geometry_ptr());
  if (g.kind() == GeometryKind::SphereRadial) {
    auto a = T.slot(0);
    auto p = T.slot(1);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * a[i] + (g.dimension() - 1) * p[i] * p[i];
    return out;
  }
  const int n = g.dimension();
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      auto t = T.component(i, j);
      double mult = (i == j) ? 1.0 : 2.0;
      for (std::size_t k = 0; k < out.size(); ++k) out[k] += mult * t[k] * t[k];
    }
  return out;
}

ScalarField trace(const SymTensorField& T) {
  const Geometry& g = T.geometry();
  ScalarField out(T.geometry_ptr());
  if (g.kind() == GeometryKind::SphereRadial) {
    auto a = T.slot(0);
    auto p = T.slot(1);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] + (g.dimension() - 1) * p[i];
    return out;
  }
  for (int i = 0; i < g.dimension(); ++i) {
    auto t = T.component(i, i);
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += t[k];
  }
  return out;
}

double inner(const ScalarField& a, const ScalarField& b) {
  require_same(a.geometry(), b.geometry(), "inner");
  const Geometry& g = a.geometry();
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += g.weight(i) * a[i] * b[i];
  return s;
}

double inner(const OneFormField& a, const OneFormField& b) {
  require_same(a.geometry(), b.geometry(), "inner");
  const Geometry& g = a.geometry();
  double s = 0.0;
  for (int c = 0; c < a.components(); ++c) {
    auto x = a.component(c);
    auto y = b.component(c);
    for (std::size_t i = 0; i < a.nodes(); ++i) s += g.weight(i) * x[i] * y[i];
  }
  return s;
}

double inner(const SymTensorField& a, const SymTensorField& b) {
  require_same(a.geometry(), b.geometry(), "inner");
  const Geometry& g = a.geometry();
  double s = 0.0;
  if (g.kind() == GeometryKind::SphereRadial) {
    for (std::size_t i = 0; i < a.nodes(); ++i)
      s += g.weight(i) * (a.slot(0)[i] * b.slot(0)[i] + (g.dimension() - 1) * a.slot(1)[i] * b.slot(1)[i]);
    return s;
  }
  const int n = g.dimension();
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      auto x = a.component(i, j);
      auto y = b.component(i, j);
      double mult = (i == j) ? 1.0 : 2.0;
      for (std::size_t k = 0; k < a.nodes(); ++k) s += mult * g.weight(k) * x[k] * y[k];
    }
  return s;
}

double l2_norm(const ScalarField& f) { return std::sqrt(inner(f, f)); }
double l2_norm(const OneFormField& W) { return std::sqrt(inner(W, W)); }

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

double max_abs(const ScalarField& f) { return max_abs(f.values()); }

double mean(const ScalarField& f) {
  const Geometry& g = f.geometry();
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) s += g.weight(i) * f[i];
  return s / g.volume();
}

// ---- operators ----

ScalarField laplace_beltrami(const ScalarField& f, const Geometry& g) {
  require_same(f.geometry(), g, "laplace_beltrami");
  ScalarField out(f.geometry_ptr());
  switch (g.kind()) {
    case GeometryKind::Torus: {
      auto sp = spectral_of(g);
      std::vector<cplx> F(sp->modes());
      sp->forward(f.values().data(), F.data());
      for (std::size_t m = 0; m < sp->modes(); ++m) F[m] *= sp->k2(m);
      sp->backward(F.data(), out.values().data());
      break;
    }
    case GeometryKind::SphereRadial: {
      auto d1 = sphere_d1(g, f.values());
      auto d2 = sphere_d2(g, f.values());
      const int n = g.dimension();
      for (std::size_t i = 0; i < out.size(); ++i) {
        double r = g.coordinate(i, 0);
        out[i] = -d2[i] - (n - 1) * std::cos(r) / std::sin(r) * d1[i];
      }
      break;
    }
    case GeometryKind::Chart: {
      for (int a = 0; a < g.dimension(); ++a) {
        auto d2 = chart_d(g, f.values(), a, 2);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] -= d2[i];
      }
      break;
    }
  }
  return out;
}

OneFormField gradient(const ScalarField& f, const Geometry& g) {
  require_same(f.geometry(), g, "gradient");
  OneFormField out(f.geometry_ptr());
  switch (g.kind()) {
    case GeometryKind::Torus: {
      auto sp = spectral_of(g);
      std::vector<cplx> F(sp->modes()), D(sp->modes());
      sp->forward(f.values().data(), F.data());
      for (int a = 0; a < g.dimension(); ++a) {
        for (std::size_t m = 0; m < sp->modes(); ++m) D[m] = F[m] * cplx(0.0, sp->k_odd(m, a));
        sp->backward(D.data(), out.component(a).data());
      }
      break;
    }
    case GeometryKind::SphereRadial:
      copy_into(out.component(0), sphere_d1(g, f.values()));
      break;
    case GeometryKind::Chart:
      for (int a = 0; a < g.dimension(); ++a) copy_into(out.component(a), chart_d(g, f.values(), a, 1));
      break;
  }
  return out;
}

ScalarField divergence(const OneFormField& W, const Geometry& g) {
  require_same(W.geometry(), g, "divergence");
  ScalarField out(W.geometry_ptr());
  switch (g.kind()) {
    case GeometryKind::Torus: {
      auto sp = spectral_of(g);
      std::vector<cplx> F(sp->modes()), acc(sp->modes(), cplx(0.0));
      for (int a = 0; a < g.dimension(); ++a) {
        sp->forward(W.component(a).data(), F.data());
        for (std::size_t m = 0; m < sp->modes(); ++m) acc[m] += F[m] * cplx(0.0, sp->k_odd(m, a));
      }
      sp->backward(acc.data(), out.values().data());
      break;
    }
    case GeometryKind::SphereRadial: {
      auto w = W.component(0);
      auto d1 = sphere_d1(g, w);
      const int n = g.dimension();
      for (std::size_t i = 0; i < out.size(); ++i) {
        double r = g.coordinate(i, 0);
        out[i] = d1[i] + (n - 1) * std::cos(r) / std::sin(r) * w[i];
      }
      break;
    }
    case GeometryKind::Chart:
      for (int a = 0; a < g.dimension(); ++a) {
        auto d = chart_d(g, W.component(a), a, 1);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += d[i];
      }
      break;
  }
  return out;
}

OneFormField divergence(const SymTensorField& T, const Geometry& g) {
  require_same(T.geometry(), g, "divergence");
  OneFormField out(T.geometry_ptr());
  const int n = g.dimension();
  switch (g.kind()) {
    case GeometryKind::Torus: {
      auto sp = spectral_of(g);
      std::vector<cplx> F(sp->modes());
      std::vector<std::vector<cplx>> acc(n, std::vector<cplx>(sp->modes(), cplx(0.0)));
      for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
          sp->forward(T.component(i, j).data(), F.data());
          for (std::size_t m = 0; m < sp->modes(); ++m) {
            acc[i][m] += F[m] * cplx(0.0, sp->k_odd(m, j));
            if (i != j) acc[j][m] += F[m] * cplx(0.0, sp->k_odd(m, i));
          }
        }
      for (int i = 0; i < n; ++i) sp->backward(acc[i].data(), out.component(i).data());
      break;
    }
    case GeometryKind::SphereRadial: {
      auto a = T.slot(0);
      auto p = T.slot(1);
      auto d1 = sphere_d1(g, a);
      auto w = out.component(0);
      for (std::size_t i = 0; i < out.nodes(); ++i) {
        double r = g.coordinate(i, 0);
        w[i] = d1[i] + (n - 1) * std::cos(r) / std::sin(r) * (a[i] - p[i]);
      }
      break;
    }
    case GeometryKind::Chart:
      for (int i = 0; i < n; ++i) {
        auto w = out.component(i);
        for (int j = 0; j < n; ++j) {
          auto d = chart_d(g, T.component(i, j), j, 1);
          for (std::size_t k = 0; k < out.nodes(); ++k) w[k] += d[k];
        }
      }
      break;
  }
  return out;
}

SymTensorField conformal_killing_deriv(const OneFormField& W, const Geometry& g) {
  require_same(W.geometry(), g, "conformal_killing_deriv");
  SymTensorField out(W.geometry_ptr());
  const int n = g.dimension();
  if (g.kind() == GeometryKind::SphereRadial) {
    auto w = W.component(0);
    auto d1 = sphere_d1(g, w);
    auto rr = out.slot(0);
    auto pp = out.slot(1);
    for (std::size_t i = 0; i < out.nodes(); ++i) {
      double r = g.coordinate(i, 0);
      double q = 2.0 * (n - 1.0) / n * (d1[i] - std::cos(r) / std::sin(r) * w[i]);
      rr[i] = q;
      pp[i] = -q / (n - 1.0);
    }
    return out;
  }
  // D[i][j] = d_j W_i
  std::vector<std::vector<double>> D(n * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (g.kind() == GeometryKind::Torus)
        D[i * n + j] = spectral_d(*spectral_of(g), W.component(i), j);
      else
        D[i * n + j] = chart_d(g, W.component(i), j, 1);
    }
  const std::size_t N = out.nodes();
  std::vector<double> div(N, 0.0);
  for (int i = 0; i < n; ++i)
    for (std::size_t k = 0; k < N; ++k) div[k] += D[i * n + i][k];
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      auto t = out.component(i, j);
      for (std::size_t k = 0; k < N; ++k) {
        double v = D[i * n + j][k] + D[j * n + i][k];
        if (i == j) v -= 2.0 / n * div[k];
        t[k] = v;
      }
    }
  return out;
}

OneFormField lame(const OneFormField& W, const Geometry& g) {
  require_same(W.geometry(), g, "lame");
  if (g.kind() != GeometryKind::Torus) {
    OneFormField out = divergence(conformal_killing_deriv(W, g), g);
    for (double& x : out.raw()) x = -x;
    return out;
  }
  const int n = g.dimension();
  auto sp = spectral_of(g);
  const std::size_t M = sp->modes();
  std::vector<std::vector<cplx>> F(n, std::vector<cplx>(M));
  for (int a = 0; a < n; ++a) sp->forward(W.component(a).data(), F[a].data());
  const double kappa = 1.0 - 2.0 / n;
  OneFormField out(W.geometry_ptr());
  std::vector<cplx> G(M);
  for (int i = 0; i < n; ++i) {
    for (std::size_t m = 0; m < M; ++m) {
      cplx s = sp->k2(m) * F[i][m];
      for (int j = 0; j < n; ++j) {
        double kk = (i == j) ? sp->k(m, i) * sp->k(m, i) : sp->k_odd(m, i) * sp->k_odd(m, j);
        s += kappa * kk * F[j][m];
      }
      G[m] = s;
    }
    sp->backward(G.data(), out.component(i).data());
  }
  return out;
}

LameInverse lame_invert(const OneFormField& F, const Geometry& g) {
  require_same(F.geometry(), g, "lame_invert");
  require_kind(g, GeometryKind::Torus, "lame_invert");
  const int n = g.dimension();
  auto sp = spectral_of(g);
  const std::size_t M = sp->modes();
  std::vector<std::vector<cplx>> Fh(n, std::vector<cplx>(M));
  for (int a = 0; a < n; ++a) sp->forward(F.component(a).data(), Fh[a].data());

  LameInverse res{OneFormField(F.geometry_ptr()), 0.0};
  const double total = static_cast<double>(sp->real_size());
  double c2 = 0.0;
  for (int a = 0; a < n; ++a) {
    double c = Fh[a][0].real() / total;
    c2 += c * c;
  }
  res.defect = std::sqrt(c2 * g.volume());

  const double kappa = 1.0 - 2.0 / n;
  std::vector<std::vector<cplx>> Wh(n, std::vector<cplx>(M, cplx(0.0)));
  std::vector<double> A(n * n), L(n * n);
  std::vector<cplx> rhs(n), y(n);
  for (std::size_t m = 1; m < M; ++m) {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double kk = (i == j) ? sp->k(m, i) * sp->k(m, i) : sp->k_odd(m, i) * sp->k_odd(m, j);
        A[i * n + j] = kappa * kk + (i == j ? sp->k2(m) : 0.0);
      }
    // Cholesky; the symbol is symmetric positive definite for k != 0
    for (int j = 0; j < n; ++j) {
      double d = A[j * n + j];
      for (int k = 0; k < j; ++k) d -= L[j * n + k] * L[j * n + k];
      L[j * n + j] = std::sqrt(d);
      for (int i = j + 1; i < n; ++i) {
        double s = A[i * n + j];
        for (int k = 0; k < j; ++k) s -= L[i * n + k] * L[j * n + k];
        L[i * n + j] = s / L[j * n + j];
      }
    }
    for (int i = 0; i < n; ++i) {
      cplx s = Fh[i][m];
      for (int k = 0; k < i; ++k) s -= L[i * n + k] * y[k];
      y[i] = s / L[i * n + i];
    }
    for (int i = n - 1; i >= 0; --i) {
      cplx s = y[i];
      for (int k = i + 1; k < n; ++k) s -= L[k * n + i] * rhs[k];
      rhs[i] = s / L[i * n + i];
    }
    for (int i = 0; i < n; ++i) Wh[i][m] = rhs[i];
  }
  for (int a = 0; a < n; ++a) sp->backward(Wh[a].data(), res.W.component(a).data());
  return res;
}

ScalarField shifted_poisson_invert(const ScalarField& r, double q, const Geometry& g) {
  require_same(r.geometry(), g, "shifted_poisson_invert");
  require_kind(g, GeometryKind::Torus, "shifted_poisson_invert");
  if (!(q > 0.0)) throw InvalidArgument("shifted_poisson_invert: shift must be positive");
  auto sp = spectral_of(g);
  std::vector<cplx> F(sp->modes());
  sp->forward(r.values().data(), F.data());
  for (std::size_t m = 0; m < sp->modes(); ++m) F[m] /= (sp->k2(m) + q);
  ScalarField out(r.geometry_ptr());
  sp->backward(F.data(), out.values().data());
  return out;
}

namespace {

std::vector<double> resample_values(std::span<const double> src, const Geometry& gs, const Geometry& gt) {
  auto ss = spectral_of(gs);
  auto st = spectral_of(gt);
  const int n = gs.dimension();
  const int Ns = gs.resolution();
  const int Nt = gt.resolution();
  std::vector<cplx> F(ss->modes());
  ss->forward(src.data(), F.data());
  std::vector<cplx> T(st->modes(), cplx(0.0));
  const double scale = static_cast<double>(st->real_size()) / static_cast<double>(ss->real_size());
  const int half_t = Nt / 2 + 1;

  // Each source mode maps to one or more target slots; a source Nyquist
  // index is split evenly between +N/2 and -N/2 when upsampling.
  std::vector<std::vector<std::pair<int, double>>> slots(n);
  for (std::size_t m = 0; m < ss->modes(); ++m) {
    bool drop = false;
    for (int a = 0; a < n; ++a) {
      slots[a].clear();
      int s = ss->signed_index(m, a);
      bool last = (a == n - 1);
      bool nyq = (std::abs(s) == Ns / 2);
      if (std::abs(s) >= Nt / 2 && Nt <= Ns) {
        drop = true;
        break;
      }
      if (nyq && Nt > Ns) {
        if (last) {
          slots[a].push_back({Ns / 2, 0.5});
        } else {
          slots[a].push_back({Ns / 2, 0.5});
          slots[a].push_back({Nt - Ns / 2, 0.5});
        }
      } else {
        int t = last ? s : (s >= 0 ? s : s + Nt);
        slots[a].push_back({t, 1.0});
      }
    }
    if (drop) continue;
    // enumerate the product of slot choices
    std::vector<std::size_t> choice(n, 0);
    while (true) {
      std::size_t flat = 0;
      double w = 1.0;
      for (int a = 0; a < n; ++a) {
        int len = (a == n - 1) ? half_t : Nt;
        flat = flat * len + slots[a][choice[a]].first;
        w *= slots[a][choice[a]].second;
      }
      T[flat] += w * scale * F[m];
      int a = n - 1;
      while (a >= 0 && ++choice[a] == slots[a].size()) {
        choice[a] = 0;
        --a;
      }
      if (a < 0) break;
    }
  }
  std::vector<double> out(st->real_size());
  st->backward(T.data(), out.data());
  return out;
}

void check_resample(const Geometry& gs, const Geometry& gt) {
  require_kind(gs, GeometryKind::Torus, "spectral_resample");
  require_kind(gt, GeometryKind::Torus, "spectral_resample");
  if (gs.dimension() != gt.dimension() || gs.period() != gt.period())
    throw GeometryMismatch("spectral_resample: tori differ in dimension or period");
}

}  // namespace

ScalarField spectral_resample(const ScalarField& f, const GeometryPtr& target) {
  check_resample(f.geometry(), *target);
  return ScalarField(target, resample_values(f.values(), f.geometry(), *target));
}

OneFormField spectral_resample(const OneFormField& W, const GeometryPtr& target) {
  check_resample(W.geometry(), *target);
  OneFormField out(target);
  for (int a = 0; a < W.components(); ++a)
    copy_into(out.component(a), resample_values(W.component(a), W.geometry(), *target));
  return out;
}

double h1_norm2(const OneFormField& W) {
  const Geometry& g = W.geometry();
  double s = inner(W, W);
  for (int a = 0; a < W.components(); ++a) {
    ScalarField c(W.geometry_ptr(), to_vec(W.component(a)));
    s += inner(pointwise_norm2(gradient(c, g)), ScalarField(W.geometry_ptr(), 1.0));
  }
  return s;
}

}  // namespace elc
