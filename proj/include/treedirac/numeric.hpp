#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace treedirac {

// Composite 5-point Gauss-Legendre quadrature. Exact for polynomials of
// degree <= 9 on each panel.
template <typename F>
double gauss5(F&& f, double a, double b, int panels = 1) {
  static const double xs[5] = {
      -0.90617984593866399, -0.53846931010568309, 0.0,
      0.53846931010568309, 0.90617984593866399};
  static const double ws[5] = {
      0.23692688505618909, 0.47862867049936647, 0.56888888888888889,
      0.47862867049936647, 0.23692688505618909};
  const double w = (b - a) / panels;
  double sum = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double lo = a + p * w;
    const double mid = lo + 0.5 * w;
    for (int i = 0; i < 5; ++i) sum += ws[i] * f(mid + 0.5 * w * xs[i]);
  }
  return sum * 0.5 * w;
}

// Composite Simpson rule with n subintervals (n is rounded up to even).
template <typename F>
double simpson(F&& f, double a, double b, int n) {
  if (n < 2) n = 2;
  if (n % 2) ++n;
  const double h = (b - a) / n;
  double sum = f(a) + f(b);
  for (int i = 1; i < n; ++i) sum += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return sum * h / 3.0;
}

// Uniform double in [0,1) from the generator's raw bits. Keeps streams
// identical across standard library implementations.
inline double uniform01(std::mt19937_64& gen) {
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

inline double uniform_in(std::mt19937_64& gen, double lo, double hi) {
  return lo + (hi - lo) * uniform01(gen);
}

}  // namespace treedirac
