#include "finite_diff.hpp"

namespace elc::detail {

void fd_first(const double* in, std::ptrdiff_t s, int count, double h, double* out) {
  auto f = [&](int i) { return in[i * s]; };
  const double c = 1.0 / (12.0 * h);
  const int m = count - 1;
  out[0] = c * (-25.0 * f(0) + 48.0 * f(1) - 36.0 * f(2) + 16.0 * f(3) - 3.0 * f(4));
  out[s] = c * (-3.0 * f(0) - 10.0 * f(1) + 18.0 * f(2) - 6.0 * f(3) + f(4));
  for (int i = 2; i <= m - 2; ++i)
    out[i * s] = c * (f(i - 2) - 8.0 * f(i - 1) + 8.0 * f(i + 1) - f(i + 2));
  out[(m - 1) * s] = -c * (-3.0 * f(m) - 10.0 * f(m - 1) + 18.0 * f(m - 2) - 6.0 * f(m - 3) + f(m - 4));
  out[m * s] = -c * (-25.0 * f(m) + 48.0 * f(m - 1) - 36.0 * f(m - 2) + 16.0 * f(m - 3) - 3.0 * f(m - 4));
}

void fd_second(const double* in, std::ptrdiff_t s, int count, double h, double* out) {
  auto f = [&](int i) { return in[i * s]; };
  const double c = 1.0 / (12.0 * h * h);
  const int m = count - 1;
  out[0] = c * (45.0 * f(0) - 154.0 * f(1) + 214.0 * f(2) - 156.0 * f(3) + 61.0 * f(4) - 10.0 * f(5));
  out[s] = c * (10.0 * f(0) - 15.0 * f(1) - 4.0 * f(2) + 14.0 * f(3) - 6.0 * f(4) + f(5));
  for (int i = 2; i <= m - 2; ++i)
    out[i * s] = c * (-f(i - 2) + 16.0 * f(i - 1) - 30.0 * f(i) + 16.0 * f(i + 1) - f(i + 2));
  out[(m - 1) * s] = c * (10.0 * f(m) - 15.0 * f(m - 1) - 4.0 * f(m - 2) + 14.0 * f(m - 3) - 6.0 * f(m - 4) + f(m - 5));
  out[m * s] = c * (45.0 * f(m) - 154.0 * f(m - 1) + 214.0 * f(m - 2) - 156.0 * f(m - 3) + 61.0 * f(m - 4) - 10.0 * f(m - 5));
}

std::vector<double> box_derivative(const std::vector<double>& f, int n, int N, int axis, double h,
                                   int order) {
  std::vector<double> out(f.size());
  std::ptrdiff_t stride = 1;
  for (int a = n - 1; a > axis; --a) stride *= N;
  const std::ptrdiff_t block = stride * N;
  const std::ptrdiff_t total = static_cast<std::ptrdiff_t>(f.size());
  for (std::ptrdiff_t outer = 0; outer < total; outer += block) {
    for (std::ptrdiff_t inner = 0; inner < stride; ++inner) {
      const double* src = f.data() + outer + inner;
      double* dst = out.data() + outer + inner;
      if (order == 1)
        fd_first(src, stride, N, h, dst);
      else
        fd_second(src, stride, N, h, dst);
    }
  }
  return out;
}

}  // namespace elc::detail
