#include "spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>
#include <mutex>
#include <numbers>
#include <tuple>

namespace elc::detail {

namespace {

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

std::shared_ptr<const Spectral> Spectral::get(int n, int N, double period) {
  static std::map<std::tuple<int, int, double>, std::shared_ptr<const Spectral>> cache;
  std::lock_guard<std::mutex> lock(planner_mutex());
  auto key = std::make_tuple(n, N, period);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  std::shared_ptr<const Spectral> s(new Spectral(n, N, period));
  cache.emplace(key, s);
  return s;
}

Spectral::Spectral(int n, int N, double period) : n_(n), N_(N) {
  real_size_ = 1;
  for (int a = 0; a < n; ++a) real_size_ *= static_cast<std::size_t>(N);
  modes_ = real_size_ / N * (N / 2 + 1);

  std::vector<int> dims(n, N);
  double* rbuf = fftw_alloc_real(real_size_);
  fftw_complex* cbuf = fftw_alloc_complex(modes_);
  unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  fwd_ = fftw_plan_dft_r2c(n, dims.data(), rbuf, cbuf, flags);
  bwd_ = fftw_plan_dft_c2r(n, dims.data(), cbuf, rbuf, flags | FFTW_DESTROY_INPUT);
  fftw_free(rbuf);
  fftw_free(cbuf);

  const double base = 2.0 * std::numbers::pi / period;
  const int half = N / 2 + 1;
  k_.resize(modes_ * n);
  ko_.resize(modes_ * n);
  idx_.resize(modes_ * n);
  k2_.resize(modes_);
  for (std::size_t m = 0; m < modes_; ++m) {
    std::size_t rest = m;
    double s2 = 0.0;
    for (int a = n - 1; a >= 0; --a) {
      int len = (a == n - 1) ? half : N;
      int i = static_cast<int>(rest % len);
      rest /= len;
      int s = (a == n - 1) ? i : (i <= N / 2 ? i : i - N);
      idx_[m * n + a] = s;
      double kk = base * s;
      k_[m * n + a] = kk;
      ko_[m * n + a] = (std::abs(s) == N / 2) ? 0.0 : kk;
      s2 += kk * kk;
    }
    k2_[m] = s2;
  }
}

Spectral::~Spectral() {
  std::lock_guard<std::mutex> lock(planner_mutex());
  fftw_destroy_plan(static_cast<fftw_plan>(fwd_));
  fftw_destroy_plan(static_cast<fftw_plan>(bwd_));
}

void Spectral::forward(const double* in, cplx* out) const {
  // r2c plans do not modify their input.
  fftw_execute_dft_r2c(static_cast<fftw_plan>(fwd_), const_cast<double*>(in),
                       reinterpret_cast<fftw_complex*>(out));
}

void Spectral::backward(const cplx* in, double* out) const {
  std::vector<cplx> tmp(in, in + modes_);
  fftw_execute_dft_c2r(static_cast<fftw_plan>(bwd_), reinterpret_cast<fftw_complex*>(tmp.data()), out);
  const double scale = 1.0 / static_cast<double>(real_size_);
  for (std::size_t i = 0; i < real_size_; ++i) out[i] *= scale;
}

std::vector<cplx> Spectral::forward(const std::vector<double>& in) const {
  std::vector<cplx> out(modes_);
  forward(in.data(), out.data());
  return out;
}

std::vector<double> Spectral::backward(const std::vector<cplx>& in) const {
  std::vector<double> out(real_size_);
  backward(in.data(), out.data());
  return out;
}

}  // namespace elc::detail
