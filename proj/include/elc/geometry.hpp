#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <numbers>
#include <span>
#include <utility>
#include <vector>

namespace elc {

enum class GeometryKind { Torus, SphereRadial, Chart };

class Geometry;
using GeometryPtr = std::shared_ptr<const Geometry>;

// Discrete background. Three kinds are supported:
//   Torus         periodic box [0, L)^n, spectral operators
//   SphereRadial  radial reduction of the round unit S^n on [eps, pi - eps]
//   Chart         Euclidean box [-a, a]^n (flat metric), finite differences
// Grid nodes of Torus and Chart are stored row-major with the last axis
// fastest.
class Geometry {
 public:
  static GeometryPtr torus(int n, int resolution, double period = 2.0 * std::numbers::pi,
                           double model_curvature = 0.0);
  static GeometryPtr sphere_radial(int n, int resolution, double eps = 1e-3);
  static GeometryPtr chart(int n, int resolution, double half_width);

  GeometryKind kind() const { return kind_; }
  int dimension() const { return n_; }
  int resolution() const { return N_; }
  double period() const { return period_; }
  double eps() const { return eps_; }
  double half_width() const { return half_width_; }
  double spacing() const { return h_; }
  std::size_t node_count() const { return nodes_; }

  // Background scalar curvature R(g). On the torus this is 0 unless a model
  // value was supplied (used to emulate a positively curved background).
  double scalar_curvature() const;
  double model_curvature() const { return model_curvature_; }

  // Number of stored components of a one-form / symmetric 2-tensor.
  int form_components() const;
  int tensor_components() const;
  // Storage slot of the (i, j) tensor component (Torus and Chart only).
  int tensor_index(int i, int j) const;

  // Coordinate of node `node` along `axis` (radius for the sphere).
  double coordinate(std::size_t node, int axis) const;
  std::vector<double> point(std::size_t node) const;
  std::vector<int> multi_index(std::size_t node) const;
  std::size_t flat_index(std::span<const int> idx) const;

  // Quadrature weight of a node, such that sum_i w_i f_i approximates the
  // integral of f over the manifold (trapezoid rule on sphere and chart).
  double weight(std::size_t node) const;
  double volume() const;

  bool same_as(const Geometry& other) const;

 private:
  Geometry() = default;

  GeometryKind kind_ = GeometryKind::Torus;
  int n_ = 3;
  int N_ = 8;
  double period_ = 2.0 * std::numbers::pi;
  double eps_ = 0.0;
  double half_width_ = 0.0;
  double h_ = 0.0;
  double model_curvature_ = 0.0;
  std::size_t nodes_ = 0;
  std::vector<double> sphere_weights_;
};

void require_same(const Geometry& a, const Geometry& b, const char* what);

class ScalarField {
 public:
  ScalarField() = default;
  explicit ScalarField(GeometryPtr g, double value = 0.0);
  ScalarField(GeometryPtr g, std::vector<double> values);

  static ScalarField from_function(GeometryPtr g,
                                   const std::function<double(std::span<const double>)>& fn);

  const Geometry& geometry() const { return *geom_; }
  const GeometryPtr& geometry_ptr() const { return geom_; }
  std::size_t size() const { return data_.size(); }
  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

 private:
  GeometryPtr geom_;
  std::vector<double> data_;
};

// One-form. Torus and Chart store n Cartesian components; the sphere
// reduction stores the radial component w of W = w dr only.
class OneFormField {
 public:
  OneFormField() = default;
  explicit OneFormField(GeometryPtr g);
  OneFormField(GeometryPtr g, std::vector<double> data);

  const Geometry& geometry() const { return *geom_; }
  const GeometryPtr& geometry_ptr() const { return geom_; }
  int components() const { return comps_; }
  std::size_t nodes() const { return geom_->node_count(); }
  std::span<double> component(int c);
  std::span<const double> component(int c) const;
  std::span<double> raw() { return data_; }
  std::span<const double> raw() const { return data_; }

 private:
  GeometryPtr geom_;
  int comps_ = 0;
  std::vector<double> data_;
};

// Symmetric 2-tensor. Torus and Chart store the n(n+1)/2 entries (i <= j).
// On the sphere the tensor is assumed rotationally symmetric and stored in
// an orthonormal frame as (T_rr, T_perp), T = T_rr dr^2 + T_perp g_angular.
class SymTensorField {
 public:
  SymTensorField() = default;
  explicit SymTensorField(GeometryPtr g);

  const Geometry& geometry() const { return *geom_; }
  const GeometryPtr& geometry_ptr() const { return geom_; }
  int components() const { return comps_; }
  std::size_t nodes() const { return geom_->node_count(); }
  std::span<double> component(int i, int j);
  std::span<const double> component(int i, int j) const;
  std::span<double> slot(int s);
  std::span<const double> slot(int s) const;
  std::span<double> raw() { return data_; }
  std::span<const double> raw() const { return data_; }

 private:
  GeometryPtr geom_;
  int comps_ = 0;
  std::vector<double> data_;
};

// Pointwise helpers.
ScalarField pointwise_norm2(const OneFormField& W);
ScalarField pointwise_norm2(const SymTensorField& T);
ScalarField trace(const SymTensorField& T);
double inner(const ScalarField& a, const ScalarField& b);
double inner(const OneFormField& a, const OneFormField& b);
double inner(const SymTensorField& a, const SymTensorField& b);
double l2_norm(const ScalarField& f);
double l2_norm(const OneFormField& W);
double max_abs(const ScalarField& f);
double max_abs(std::span<const double> v);
double mean(const ScalarField& f);

// Differential operators (sign convention: Delta = -div grad >= 0).
ScalarField laplace_beltrami(const ScalarField& f, const Geometry& g);
OneFormField gradient(const ScalarField& f, const Geometry& g);
ScalarField divergence(const OneFormField& W, const Geometry& g);
OneFormField divergence(const SymTensorField& T, const Geometry& g);
SymTensorField conformal_killing_deriv(const OneFormField& W, const Geometry& g);
OneFormField lame(const OneFormField& W, const Geometry& g);

struct LameInverse {
  OneFormField W;
  double defect = 0.0;
};
LameInverse lame_invert(const OneFormField& F, const Geometry& g);

// Torus only: solve (Delta + q) u = r for a positive constant q.
ScalarField shifted_poisson_invert(const ScalarField& r, double q, const Geometry& g);

// Torus only: band-limited resampling onto another torus of the same
// dimension and period (zero padding or truncation of the spectrum).
ScalarField spectral_resample(const ScalarField& f, const GeometryPtr& target);
OneFormField spectral_resample(const OneFormField& W, const GeometryPtr& target);

// H^1 norm squared: ||W||^2 + ||grad W||^2 (torus).
double h1_norm2(const OneFormField& W);

}  // namespace elc
