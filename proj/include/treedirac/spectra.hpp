#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "treedirac/discretize.hpp"
#include "treedirac/fw.hpp"
#include "treedirac/halfline.hpp"
#include "treedirac/numeric.hpp"
#include "treedirac/tree.hpp"

namespace treedirac {

// Smooth bump supported on [1, 2]: exp(-1/((x-1)(2-x))). All derivatives
// vanish at the endpoints; underflow of the exponential keeps the derivative
// formulas finite near them.
inline double bump_profile(double x) {
  if (x <= 1.0 || x >= 2.0) return 0.0;
  const double q = (x - 1.0) * (2.0 - x);
  return std::exp(-1.0 / q);
}

inline double bump_first_derivative(double x) {
  if (x <= 1.0 || x >= 2.0) return 0.0;
  const double q = (x - 1.0) * (2.0 - x);
  const double qp = 3.0 - 2.0 * x;
  return std::exp(-1.0 / q) * qp / (q * q);
}

inline double bump_second_derivative(double x) {
  if (x <= 1.0 || x >= 2.0) return 0.0;
  const double q = (x - 1.0) * (2.0 - x);
  const double qp = 3.0 - 2.0 * x;
  const double up = qp / (q * q);                      // (-1/q)'
  const double upp = -2.0 / (q * q) - 2.0 * qp * qp / (q * q * q);
  return std::exp(-1.0 / q) * (upp + up * up);
}

// Relative L2 residual of the scaled wave packet
// f_m(t) = exp(i r t) eta(t / l) / sqrt(l), l = 2^m, against the free
// Laplacian at energy r^2. The modulus removes the oscillatory phase, so the
// integrand is the smooth envelope combination
// (4 r^2 eta'(s)^2 + eta''(s)^2 / l^2) and the residual scales like 1/l.
inline double weyl_residual_laplacian(int m, double r, int quadrature_n = 4096) {
  if (m < 0) throw std::invalid_argument("scale index must be >= 0");
  if (quadrature_n < 8) throw std::invalid_argument("quadrature needs at least 8 nodes");
  const double l = std::pow(2.0, m);
  if (r * l / quadrature_n > 0.5)
    throw std::invalid_argument("quadrature under-resolves the oscillation");
  auto numerator = [&](double t) {
    const double s = t / l;
    const double d1 = bump_first_derivative(s) / l;
    const double d2 = bump_second_derivative(s) / (l * l);
    return (4.0 * r * r * d1 * d1 + d2 * d2) / l;
  };
  auto denominator = [&](double t) {
    const double e = bump_profile(t / l);
    return e * e / l;
  };
  const double num = simpson(numerator, l, 2.0 * l, quadrature_n);
  const double den = simpson(denominator, l, 2.0 * l, quadrature_n);
  return std::sqrt(num / den);
}

// Relative residual of the spinor quasi-mode Phi f_m against the
// periodic-grid Dirac operator at energy E_c(r). The host edge is embedded
// in a circle of circumference 4l so the wrap-around seam stays a distance l
// from the support.
inline double weyl_residual_dirac(int m, double r, double c, int grid_n = 4096) {
  if (m < 0) throw std::invalid_argument("scale index must be >= 0");
  const double l = std::pow(2.0, m);
  const FourierGrid grid(grid_n, 4.0 * l);
  if (r * grid.spacing() > 0.5)
    throw std::invalid_argument("grid under-resolves the oscillation");
  std::vector<cdouble> f(static_cast<std::size_t>(grid_n));
  double outside = 0.0;
  for (int k = 0; k < grid_n; ++k) {
    const double t = grid.point(k);
    const double env = bump_profile(t / l) / std::sqrt(l);
    f[static_cast<std::size_t>(k)] = std::polar(env, r * t);
    if (t < l || t > 2.0 * l) outside += env * env;
  }
  if (outside > 1e-12)
    throw std::logic_error("quasi-mode support leaked outside its edge window");
  const auto uh = grid.forward(f);
  const double e0 = dispersion(r, c);
  double num = 0.0, den = 0.0;
  for (int j = 0; j < grid_n; ++j) {
    const SymbolTriple s = symbols(grid.momentum(j), c);
    const double amp = std::norm(uh[static_cast<std::size_t>(j)]);
    const double gap = s.energy - e0;
    num += gap * gap * amp;  // (w1, w2) is the E(p) eigenvector per mode
    den += amp;
  }
  return std::sqrt(num / den);
}

struct EdgeProbeRow {
  int depth = 0;
  double min_positive = 0.0;
  double gap = 0.0;  // min_positive - c^2
};

struct EdgeProbeReport {
  std::vector<EdgeProbeRow> rows;
};

// Tracks the bottom of the positive spectrum of the discrete tree operator
// as the truncation deepens. Requires unbounded edge lengths, the regime
// where the positive spectrum fills [c^2, inf) and the gap above c^2 should
// shrink with depth.
inline EdgeProbeReport spectral_edge_probe(const GeneratingSequences& tree, double c,
                                           const std::vector<std::int64_t>& depths,
                                           double h, int dimension_cap = 6000) {
  if (!has_unbounded_edges(tree))
    throw std::domain_error("spectral edge probe requires unbounded edge lengths");
  EdgeProbeReport rep;
  for (std::int64_t N : depths) {
    const TreeTruncation trunc = truncate(tree, N);
    const DiscreteOperator op = assemble_tree_operator(trunc, c, h);
    const EigenDecomposition dec = eigen_solve(op, dimension_cap);
    // The positive part only rectifies the eigenvalues, so its smallest
    // nonzero level is the smallest positive level of the full operator.
    double minpos = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < dec.eigenvalues.size(); ++i)
      if (dec.eigenvalues(i) > 0.0) minpos = std::min(minpos, dec.eigenvalues(i));
    rep.rows.push_back({static_cast<int>(N), minpos, minpos - c * c});
  }
  return rep;
}

}  // namespace treedirac
