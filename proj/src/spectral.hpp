#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <vector>

namespace elc::detail {

using cplx = std::complex<double>;

// FFTW plans and wavenumber tables for one torus shape. Instances are
// immutable after construction and shared between threads; execution uses
// the new-array interface, which FFTW documents as thread safe.
class Spectral {
 public:
  static std::shared_ptr<const Spectral> get(int n, int N, double period);

  ~Spectral();
  Spectral(const Spectral&) = delete;
  Spectral& operator=(const Spectral&) = delete;

  int n() const { return n_; }
  int N() const { return N_; }
  std::size_t real_size() const { return real_size_; }
  std::size_t modes() const { return modes_; }

  // Unnormalized forward transform; backward includes the 1/N^n factor.
  void forward(const double* in, cplx* out) const;
  void backward(const cplx* in, double* out) const;

  std::vector<cplx> forward(const std::vector<double>& in) const;
  std::vector<double> backward(const std::vector<cplx>& in) const;

  // Wavenumber of mode m along axis a. `odd` zeroes the Nyquist entry, which
  // is what odd-order derivatives need to stay real.
  double k(std::size_t m, int a) const { return k_[m * n_ + a]; }
  double k_odd(std::size_t m, int a) const { return ko_[m * n_ + a]; }
  double k2(std::size_t m) const { return k2_[m]; }
  // Signed integer index of mode m along axis a.
  int signed_index(std::size_t m, int a) const { return idx_[m * n_ + a]; }

 private:
  Spectral(int n, int N, double period);

  int n_;
  int N_;
  std::size_t real_size_;
  std::size_t modes_;
  void* fwd_ = nullptr;
  void* bwd_ = nullptr;
  std::vector<double> k_;
  std::vector<double> ko_;
  std::vector<double> k2_;
  std::vector<int> idx_;
};

}  // namespace elc::detail
