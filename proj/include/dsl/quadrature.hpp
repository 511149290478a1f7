#pragma once

#include <cmath>

#include "dsl/common.hpp"

namespace dsl {

namespace detail {
// 16-point Gauss-Legendre nodes/weights on [-1,1], symmetric halves.
inline constexpr double kGl16Nodes[8] = {
    0.0950125098376374, 0.2816035507792589, 0.4580167776572274,
    0.6178762444026438, 0.7554044083550030, 0.8656312023878318,
    0.9445750230732326, 0.9894009349916499};
inline constexpr double kGl16Weights[8] = {
    0.1894506104550685, 0.1826034150449236, 0.1691565193950025,
    0.1495959888165767, 0.1246289712555339, 0.0951585116824928,
    0.0622535239386479, 0.0271524594117541};
}  // namespace detail

/// 16-point Gauss-Legendre quadrature of f on [a,b].
template <typename F>
double gauss_legendre_16(F&& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  double sum = 0.0;
  for (int i = 0; i < 8; ++i) {
    const double dx = h * detail::kGl16Nodes[i];
    sum += detail::kGl16Weights[i] * (f(c - dx) + f(c + dx));
  }
  return h * sum;
}

namespace detail {
template <typename F>
double adaptive_rec(F& f, double a, double b, double whole, double abs_tol,
                    int depth) {
  const double m = 0.5 * (a + b);
  const double left = gauss_legendre_16(f, a, m);
  const double right = gauss_legendre_16(f, m, b);
  const double split = left + right;
  if (std::abs(split - whole) <= abs_tol || depth >= 48) {
    if (depth >= 48 && std::abs(split - whole) > abs_tol) {
      throw numeric_error("adaptive quadrature failed to converge");
    }
    return split;
  }
  return adaptive_rec(f, a, m, left, 0.5 * abs_tol, depth + 1) +
         adaptive_rec(f, m, b, right, 0.5 * abs_tol, depth + 1);
}
}  // namespace detail

/// Adaptive Gauss-Legendre integration to the given absolute tolerance.
template <typename F>
double integrate_adaptive(F&& f, double a, double b, double abs_tol) {
  if (!(b >= a)) throw invalid_input("integrate_adaptive: b < a");
  if (a == b) return 0.0;
  const double whole = gauss_legendre_16(f, a, b);
  return detail::adaptive_rec(f, a, b, whole, abs_tol, 0);
}

}  // namespace dsl
