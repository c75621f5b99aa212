#pragma once

#include <cstddef>
#include <vector>

namespace elc::detail {

// Fourth-order finite differences on a uniform 1-D line of `count` samples
// spaced `stride` apart; one-sided closures at both ends. count >= 6.
void fd_first(const double* in, std::ptrdiff_t stride, int count, double h, double* out);
void fd_second(const double* in, std::ptrdiff_t stride, int count, double h, double* out);

// Apply fd_first / fd_second along `axis` of an n-dimensional box with N
// nodes per axis (row-major, last axis fastest).
std::vector<double> box_derivative(const std::vector<double>& f, int n, int N, int axis, double h,
                                   int order);

}  // namespace elc::detail
