#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "treedirac/discretize.hpp"
#include "treedirac/halfline.hpp"
#include "treedirac/numeric.hpp"
#include "treedirac/tree.hpp"

namespace treedirac {

// Number of copies of the generation-k half-line operator inside the tree
// operator: every generation-k vertex contributes b_k - 1 twisted sibling
// channels, and there are b_0*...*b_{k-1} such vertices.
inline std::int64_t multiplicity(const GeneratingSequences& tree, std::int64_t k) {
  if (k < 1) throw std::domain_error("multiplicity is defined for k >= 1");
  if (!tree.has_b(k)) throw std::domain_error("generation beyond the available sequences");
  return tree.branching_product(k - 1) * (tree.b_at(k) - 1);
}

// r_0 = 1 accounts for the fully symmetric channel spanning the whole tree.
inline std::vector<std::int64_t> multiplicity_table(const GeneratingSequences& tree,
                                                    std::int64_t N) {
  if (N < 1) throw std::domain_error("depth must be >= 1");
  std::vector<std::int64_t> r = {1};
  for (std::int64_t k = 1; k < N; ++k) r.push_back(multiplicity(tree, k));
  return r;
}

// Unitary mixing the b sibling subtrees at a vertex into one symmetric and
// b-1 twisted channels. Column s (1-based) has entries
// exp(2*pi*i*(j-1)*s/b)/sqrt(b); the last column is the constant symmetric
// channel.
inline Eigen::MatrixXcd sibling_dft(std::int64_t b) {
  if (b < 1) throw std::invalid_argument("branching number must be >= 1");
  const auto n = static_cast<Eigen::Index>(b);
  Eigen::MatrixXcd u(n, n);
  const double base = 2.0 * std::numbers::pi / double(b);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index s = 0; s < n; ++s)
      u(j, s) = std::polar(1.0 / std::sqrt(double(b)), base * double(j) * double(s + 1));
  return u;
}

struct SpectralEntry {
  double eigenvalue = 0.0;
  std::int64_t multiplicity = 1;
  std::string source;
  double residual = 0.0;
};

struct SpectralResult {
  std::vector<SpectralEntry> entries;  // ascending by eigenvalue
  std::string tree_description;
  double c = 1.0;
  int depth = 0;
};

// Eigenvalues of every half-line operator M_0 .. M_{N-1} in the window,
// tagged with their channel multiplicities. This is the spectrum the
// decomposition predicts for the depth-N tree truncation.
inline SpectralResult predicted_spectrum(const GeneratingSequences& tree, double c,
                                         std::int64_t N, double lo, double hi,
                                         double scan_step = 0.0, double tol = 1e-12) {
  const auto r = multiplicity_table(tree, N);
  SpectralResult out;
  out.tree_description = tree.describe();
  out.c = c;
  out.depth = static_cast<int>(N);
  for (std::int64_t k = 0; k < N; ++k) {
    const HalflineSpec spec = halfline_spec(tree, k, N, c);
    for (double ev : eigenvalues(spec, lo, hi, scan_step, tol))
      out.entries.push_back({ev, r[static_cast<std::size_t>(k)],
                             "M" + std::to_string(k), std::abs(secular(spec, ev))});
  }
  std::sort(out.entries.begin(), out.entries.end(),
            [](const SpectralEntry& a, const SpectralEntry& b) {
              return a.eigenvalue < b.eigenvalue;
            });
  return out;
}

// Discrete spectrum of the tree truncation in the window, with per-pair
// residual norms.
inline SpectralResult full_tree_spectrum(const GeneratingSequences& tree, double c,
                                         std::int64_t N, double h, double lo, double hi,
                                         int dimension_cap = 6000) {
  const TreeTruncation trunc = truncate(tree, N);
  const DiscreteOperator op = assemble_tree_operator(trunc, c, h);
  const EigenDecomposition dec = eigen_solve(op, dimension_cap);
  SpectralResult out;
  out.tree_description = tree.describe();
  out.c = c;
  out.depth = static_cast<int>(N);
  for (Eigen::Index i = 0; i < dec.eigenvalues.size(); ++i) {
    const double ev = dec.eigenvalues(i);
    if (ev < lo || ev > hi) continue;
    out.entries.push_back(
        {ev, 1, "full-tree", residual_norm(op, dec.eigenvectors.col(i), ev)});
  }
  return out;
}

// Worst eigenvalue error of the staggered grid on a plain interval of length
// T at step h, measured against the closed-form dispersion levels in the
// window. Used to calibrate how closely the discrete tree spectrum can be
// expected to track the transfer-matrix prediction.
inline double calibrate_interval_error(double T, double c, double h, double lo,
                                       double hi, int dimension_cap = 6000) {
  const HalflineSpec spec(c, 0.0, T, {}, {});
  const EigenDecomposition dec = eigen_solve(assemble_halfline_operator(spec, h),
                                             dimension_cap);
  std::vector<double> exact;
  if (-c * c >= lo && -c * c <= hi) exact.push_back(-c * c);
  for (int n = 1;; ++n) {
    const double ev = dispersion(n * std::numbers::pi / T, c);
    if (ev > hi && -ev < lo) break;
    if (ev >= lo && ev <= hi) exact.push_back(ev);
    if (-ev >= lo && -ev <= hi) exact.push_back(-ev);
  }
  std::sort(exact.begin(), exact.end());
  std::vector<double> discrete;
  for (Eigen::Index i = 0; i < dec.eigenvalues.size(); ++i)
    if (dec.eigenvalues(i) >= lo && dec.eigenvalues(i) <= hi)
      discrete.push_back(dec.eigenvalues(i));
  if (exact.size() != discrete.size())
    throw std::runtime_error("calibration window produced mismatched level counts");
  double worst = 0.0;
  for (std::size_t i = 0; i < exact.size(); ++i)
    worst = std::max(worst, std::abs(exact[i] - discrete[i]));
  return worst;
}

struct MatchPair {
  double full = 0.0;
  double predicted = 0.0;
  std::string source;
  double distance = 0.0;
};

struct DecompositionReport {
  bool pass = false;
  double tol_match = 0.0;
  double calibration_error = 0.0;
  double max_distance = 0.0;
  std::vector<MatchPair> pairs;
  std::vector<double> unmatched_full;
  std::vector<SpectralEntry> unmatched_predicted;
};

// Cross-validates the decomposition on one window: the discrete tree
// spectrum must match the multiplicity-weighted union of the half-line
// spectra as multisets, pairing sorted lists greedily. tol_match <= 0
// selects the default of five times the calibrated single-interval error at
// the same step, window and total path length.
inline DecompositionReport verify_decomposition(const GeneratingSequences& tree,
                                                double c, std::int64_t N, double h,
                                                double lo, double hi,
                                                double tol_match = 0.0,
                                                int dimension_cap = 6000) {
  DecompositionReport rep;
  rep.calibration_error = calibrate_interval_error(tree.t_at(N), c, h, lo, hi,
                                                   dimension_cap);
  rep.tol_match = tol_match > 0.0 ? tol_match : 5.0 * rep.calibration_error;

  const SpectralResult full = full_tree_spectrum(tree, c, N, h, lo, hi, dimension_cap);
  const SpectralResult pred = predicted_spectrum(tree, c, N, lo, hi);
  std::vector<SpectralEntry> flat;
  for (const auto& e : pred.entries)
    for (std::int64_t m = 0; m < e.multiplicity; ++m) {
      SpectralEntry one = e;
      one.multiplicity = 1;
      flat.push_back(one);
    }

  std::size_t i = 0, j = 0;
  while (i < full.entries.size() && j < flat.size()) {
    const double a = full.entries[i].eigenvalue;
    const double b = flat[j].eigenvalue;
    if (std::abs(a - b) <= rep.tol_match) {
      rep.pairs.push_back({a, b, flat[j].source, std::abs(a - b)});
      rep.max_distance = std::max(rep.max_distance, std::abs(a - b));
      ++i, ++j;
    } else if (a < b) {
      rep.unmatched_full.push_back(a);
      ++i;
    } else {
      rep.unmatched_predicted.push_back(flat[j]);
      ++j;
    }
  }
  for (; i < full.entries.size(); ++i)
    rep.unmatched_full.push_back(full.entries[i].eigenvalue);
  for (; j < flat.size(); ++j) rep.unmatched_predicted.push_back(flat[j]);
  rep.pass = rep.unmatched_full.empty() && rep.unmatched_predicted.empty();
  return rep;
}

// Spinor-valued radial profile given piecewise by polynomial coefficients
// (ascending powers) on consecutive intervals.
struct PiecewiseSpinor {
  struct Piece {
    double a = 0.0;
    double b = 0.0;
    std::vector<double> c1;
    std::vector<double> c2;
  };
  std::vector<Piece> pieces;

  static double eval_poly(const std::vector<double>& coef, double x) {
    double v = 0.0;
    for (std::size_t i = coef.size(); i-- > 0;) v = v * x + coef[i];
    return v;
  }
  std::array<double, 2> operator()(double t) const {
    for (const auto& p : pieces)
      if (t >= p.a && t <= p.b) return {eval_poly(p.c1, t), eval_poly(p.c2, t)};
    throw std::domain_error("evaluation point outside the profile support");
  }
};

struct IsometryReport {
  double tree_norm_sq = 0.0;
  double halfline_norm_sq = 0.0;
  PiecewiseSpinor halfline_psi;  // profile scaled by sqrt(g) per band
};

// Checks the unitarity of the symmetrization map: a radial profile phi
// lifted to the tree as f(x) = phi(|x|) has the same norm as
// psi = sqrt(g) * phi on the interval [0, t_N]. The tree side sums explicit
// per-edge integrals over the truncation, the half-line side weighs each
// band by the branching function, so agreement confirms the edge counts
// against g. Quadrature is exact for polynomial degrees up to 4 per piece.
inline IsometryReport symmetrization_isometry(const GeneratingSequences& tree,
                                              std::int64_t N,
                                              const PiecewiseSpinor& phi) {
  if (std::ssize(phi.pieces) != N)
    throw std::invalid_argument("profile needs one piece per generation band");
  for (std::int64_t n = 0; n < N; ++n) {
    const auto& p = phi.pieces[static_cast<std::size_t>(n)];
    if (std::abs(p.a - tree.t_at(n)) > 1e-12 || std::abs(p.b - tree.t_at(n + 1)) > 1e-12)
      throw std::invalid_argument("profile pieces must align with the branching radii");
  }
  const TreeTruncation trunc = truncate(tree, N);
  IsometryReport rep;
  auto density = [&](const PiecewiseSpinor::Piece& p) {
    return [&p](double t) {
      const double v1 = PiecewiseSpinor::eval_poly(p.c1, t);
      const double v2 = PiecewiseSpinor::eval_poly(p.c2, t);
      return v1 * v1 + v2 * v2;
    };
  };
  for (const auto& e : trunc.edges) {
    const auto& p = phi.pieces[static_cast<std::size_t>(e.generation)];
    rep.tree_norm_sq += gauss5(density(p), p.a, p.b, 2);
  }
  for (std::int64_t n = 0; n < N; ++n) {
    const auto& p = phi.pieces[static_cast<std::size_t>(n)];
    const double g = double(branching_function(tree, 0.5 * (p.a + p.b)));
    rep.halfline_norm_sq += g * gauss5(density(p), p.a, p.b, 2);
    PiecewiseSpinor::Piece scaled = p;
    for (double& cc : scaled.c1) cc *= std::sqrt(g);
    for (double& cc : scaled.c2) cc *= std::sqrt(g);
    rep.halfline_psi.pieces.push_back(std::move(scaled));
  }
  return rep;
}

}  // namespace treedirac
