#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "treedirac/tree.hpp"
#include "treedirac/vertex_conditions.hpp"

namespace treedirac {

// Real 2x2 propagator for the first-order spinor system. Eigenvalue scans
// stay on the real axis, where the coefficient matrix and hence every
// propagator is real.
struct TransferMatrix2 {
  double m00 = 1.0, m01 = 0.0;
  double m10 = 0.0, m11 = 1.0;

  static TransferMatrix2 identity() { return {}; }
  double det() const { return m00 * m11 - m01 * m10; }
  double trace() const { return m00 + m11; }

  TransferMatrix2 operator*(const TransferMatrix2& r) const {
    return {m00 * r.m00 + m01 * r.m10, m00 * r.m01 + m01 * r.m11,
            m10 * r.m00 + m11 * r.m10, m10 * r.m01 + m11 * r.m11};
  }
  std::array<double, 2> apply(const std::array<double, 2>& v) const {
    return {m00 * v[0] + m01 * v[1], m10 * v[0] + m11 * v[1]};
  }
};

// Matrix G(lambda) of the system psi' = G psi equivalent to the eigenvalue
// equation on an edge: psi1' = ((lambda + c^2)/c) psi2 and
// psi2' = -((lambda - c^2)/c) psi1.
inline TransferMatrix2 coefficient_matrix(double lambda, double c) {
  if (!(c > 0.0)) throw std::invalid_argument("speed parameter c must be > 0");
  return {0.0, (lambda + c * c) / c, -(lambda - c * c) / c, 0.0};
}

// exp(G(lambda) * length) in closed form. G^2 = mu * I with
// mu = (c^4 - lambda^2)/c^2, so the propagator is trigonometric outside the
// spectral gap, hyperbolic inside it, and polynomial at lambda = +-c^2 where
// G is nilpotent. The degenerate case is matched exactly, not as a numeric
// limit.
inline TransferMatrix2 transfer(double lambda, double c, double length) {
  if (length < 0.0) throw std::invalid_argument("transfer length must be >= 0");
  const TransferMatrix2 g = coefficient_matrix(lambda, c);
  const double mu = g.m01 * g.m10;
  double d0, d1;  // propagator = d0 * I + d1 * G
  if (mu < 0.0) {
    const double w = std::sqrt(-mu);
    d0 = std::cos(w * length);
    d1 = std::sin(w * length) / w;
  } else if (mu > 0.0) {
    const double k = std::sqrt(mu);
    d0 = std::cosh(k * length);
    d1 = std::sinh(k * length) / k;
  } else {
    d0 = 1.0;
    d1 = length;
  }
  return {d0, d1 * g.m01, d1 * g.m10, d0};
}

// Relativistic dispersion E_c(k) = sqrt(c^2 k^2 + c^4).
inline double dispersion(double k, double c) {
  if (!(c > 0.0)) throw std::invalid_argument("speed parameter c must be > 0");
  return std::sqrt(c * c * k * k + c * c * c * c);
}

// Half-line operator obtained from the symmetry reduction: an interval
// (origin, terminal) with interior branching points where the spinor jumps
// by diag(sqrt(b), 1/sqrt(b)), and the first component pinned to zero at
// both ends.
struct HalflineSpec {
  double c = 1.0;
  double origin = 0.0;
  double terminal = 1.0;
  std::vector<double> breakpoints;
  std::vector<std::int64_t> factors;
  int start_generation = 0;

  HalflineSpec(double c_, double origin_, double terminal_,
               std::vector<double> breakpoints_ = {},
               std::vector<std::int64_t> factors_ = {}, int start_generation_ = 0)
      : c(c_),
        origin(origin_),
        terminal(terminal_),
        breakpoints(std::move(breakpoints_)),
        factors(std::move(factors_)),
        start_generation(start_generation_) {
    if (!(c > 0.0)) throw std::invalid_argument("speed parameter c must be > 0");
    if (!(terminal > origin))
      throw std::invalid_argument("terminal must exceed origin");
    if (breakpoints.size() != factors.size())
      throw std::invalid_argument("need one jump factor per breakpoint");
    double prev = origin;
    for (double bp : breakpoints) {
      if (!(bp > prev) || !(bp < terminal))
        throw std::invalid_argument("breakpoints must increase strictly inside the domain");
      prev = bp;
    }
    for (std::int64_t f : factors)
      if (f < 2) throw std::invalid_argument("jump factors must be >= 2");
  }

  // Segment endpoints including origin and terminal.
  std::vector<double> knots() const {
    std::vector<double> k;
    k.push_back(origin);
    k.insert(k.end(), breakpoints.begin(), breakpoints.end());
    k.push_back(terminal);
    return k;
  }
};

// Half-line operator attached to generation k of the tree, truncated at the
// generation-N radius.
inline HalflineSpec halfline_spec(const GeneratingSequences& tree, std::int64_t k,
                                  std::int64_t N, double c) {
  if (k < 0 || k >= N) throw std::domain_error("need 0 <= k < N");
  if (!tree.has_t(N)) throw std::domain_error("depth exceeds the available sequences");
  std::vector<double> bps;
  std::vector<std::int64_t> fs;
  for (std::int64_t j = k + 1; j < N; ++j) {
    bps.push_back(tree.t_at(j));
    fs.push_back(tree.b_at(j));
  }
  return HalflineSpec(c, tree.t_at(k), tree.t_at(N), std::move(bps), std::move(fs),
                      static_cast<int>(k));
}

// First spinor component at the terminal wall of the solution launched with
// psi(origin) = (0, 1). Zeros in lambda are the truncation's eigenvalues.
inline double secular(const HalflineSpec& spec, double lambda) {
  std::array<double, 2> psi = {0.0, 1.0};
  const auto knots = spec.knots();
  for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
    psi = transfer(lambda, spec.c, knots[i + 1] - knots[i]).apply(psi);
    if (i < spec.breakpoints.size())
      psi = halfline_matching(spec.factors[i]).apply(psi);
  }
  return psi[0];
}

namespace detail {

inline std::vector<double> scan_roots(const HalflineSpec& spec, double lo, double hi,
                                      double step, double tol) {
  const int cells = std::max(1, static_cast<int>(std::ceil((hi - lo) / step)));
  std::vector<double> roots;
  double xa = lo;
  double fa = secular(spec, xa);
  for (int i = 1; i <= cells; ++i) {
    const double xb = (i == cells) ? hi : lo + (hi - lo) * double(i) / cells;
    const double fb = secular(spec, xb);
    if (fa == 0.0) {
      roots.push_back(xa);
    } else if (fa * fb < 0.0) {
      double a = xa, b = xb, va = fa;
      for (int it = 0; it < 200 && (b - a) > tol; ++it) {
        const double m = 0.5 * (a + b);
        const double vm = secular(spec, m);
        if (vm == 0.0) {
          a = b = m;
          break;
        }
        if (va * vm < 0.0) {
          b = m;
        } else {
          a = m;
          va = vm;
        }
      }
      roots.push_back(0.5 * (a + b));
    }
    xa = xb;
    fa = fb;
  }
  if (fa == 0.0) roots.push_back(xa);
  // Merge duplicates from exact-zero grid hits.
  std::sort(roots.begin(), roots.end());
  std::vector<double> out;
  for (double r : roots)
    if (out.empty() || r - out.back() > tol) out.push_back(r);
  return out;
}

}  // namespace detail

// All eigenvalues in [lo, hi]: bracket sign changes of the secular function
// on a uniform scan, bisect each bracket, and halve the scan step until the
// root count stops changing. The isolated eigenvalue at -c^2, whose
// eigenfunction has vanishing first component on the whole line, is inserted
// analytically since the secular function can touch zero there without a
// bracketable sign change.
inline std::vector<double> eigenvalues(const HalflineSpec& spec, double lo, double hi,
                                       double scan_step = 0.0, double tol = 1e-12) {
  if (!(hi > lo)) throw std::invalid_argument("window must satisfy lo < hi");
  if (!(tol > 0.0)) throw std::invalid_argument("tolerance must be > 0");
  double step = scan_step > 0.0 ? scan_step : (hi - lo) / 2000.0;
  std::vector<double> roots = detail::scan_roots(spec, lo, hi, step, tol);
  for (int halvings = 0; halvings < 6; ++halvings) {
    step *= 0.5;
    std::vector<double> finer = detail::scan_roots(spec, lo, hi, step, tol);
    const bool stable = finer.size() == roots.size();
    roots = std::move(finer);
    if (stable) break;
  }
  const double special = -spec.c * spec.c;
  if (special >= lo && special <= hi) {
    const bool present = std::any_of(roots.begin(), roots.end(), [&](double r) {
      return std::abs(r - special) <= std::max(tol, 1e-12);
    });
    if (!present) {
      roots.push_back(special);
      std::sort(roots.begin(), roots.end());
    } else {
      // Snap the bracketed root onto the exact value.
      for (double& r : roots)
        if (std::abs(r - special) <= std::max(tol, 1e-12)) r = special;
    }
  }
  return roots;
}

}  // namespace treedirac
