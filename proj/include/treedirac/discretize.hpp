#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "treedirac/halfline.hpp"
#include "treedirac/tree.hpp"

namespace treedirac {

struct dimension_cap_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// One discretized interval of the staggered grid. First spinor components
// live on the integer nodes, second components on the midpoints, which keeps
// the first-order operator free of spurious doubled branches. Endpoint node
// values are mult * (shared DOF); a negative DOF index marks a hard wall
// where the first component is pinned to zero and the node is eliminated.
struct SegmentGrid {
  double length = 0.0;
  double h = 0.0;
  int n = 0;  // intervals, so n-1 interior nodes and n midpoints
  int left_dof = -1;
  double left_mult = 1.0;
  int right_dof = -1;
  double right_mult = 1.0;
  int first_interior = -1;
  int first_mid = -1;
};

struct GridMeta {
  double requested_h = 0.0;
  double c = 1.0;
  int n_nodes = 0;
  int n_mids = 0;
  std::vector<SegmentGrid> segments;
  // Tree assembly only: vertex id -> shared node DOF, -1 for eliminated
  // (root and leaf) vertices.
  std::vector<int> vertex_node;
};

struct DiscreteOperator {
  Eigen::MatrixXd H;
  GridMeta meta;
  Eigen::Index dim() const { return H.rows(); }
};

namespace detail {

struct SegmentDesc {
  double length;
  int left_dof;
  double left_mult;
  int right_dof;
  double right_mult;
};

// Shared assembly. The operator is the matrix of the symmetric form
//   Q(phi, psi) = c^2 <phi1, W1 psi1> - c^2 <phi2, W2 psi2>
//                 + c * sum_mids phi2 (psi1_right - psi1_left) + transpose
// rescaled by the inverse square roots of the diagonal mass weights, so it
// is Hermitian by construction and its diagonal blocks are exactly +-c^2.
// Interior nodes weigh h, shared endpoint nodes accumulate (h/2) * mult^2
// from each incident segment, midpoints weigh h.
inline DiscreteOperator assemble(const std::vector<SegmentDesc>& descs, int n_shared,
                                 double c, double h) {
  if (!(c > 0.0)) throw std::invalid_argument("speed parameter c must be > 0");
  if (!(h > 0.0)) throw std::invalid_argument("grid step must be > 0");
  GridMeta meta;
  meta.requested_h = h;
  meta.c = c;
  int n_interior = 0, n_mids = 0;
  std::vector<SegmentGrid> segs;
  for (const auto& d : descs) {
    if (h > 0.5 * d.length)
      throw std::invalid_argument("grid step exceeds half the shortest segment");
    const int n = static_cast<int>(std::lround(d.length / h));
    if (std::abs(n * h - d.length) > 0.01 * d.length)
      throw std::invalid_argument("grid step does not divide a segment length within 1%");
    SegmentGrid g;
    g.length = d.length;
    g.n = n;
    g.h = d.length / n;
    g.left_dof = d.left_dof;
    g.left_mult = d.left_mult;
    g.right_dof = d.right_dof;
    g.right_mult = d.right_mult;
    g.first_interior = n_shared + n_interior;
    n_interior += n - 1;
    n_mids += n;
    segs.push_back(g);
  }
  meta.n_nodes = n_shared + n_interior;
  meta.n_mids = n_mids;
  int mid = meta.n_nodes;
  for (auto& g : segs) {
    g.first_mid = mid;
    mid += g.n;
  }
  meta.segments = segs;
  const int dim = meta.n_nodes + meta.n_mids;
  if (dim > 16384)
    throw dimension_cap_error("assembled dimension " + std::to_string(dim) +
                              " exceeds the resource cap");

  std::vector<double> weight(static_cast<std::size_t>(meta.n_nodes), 0.0);
  for (const auto& g : segs) {
    for (int j = 0; j < g.n - 1; ++j)
      weight[static_cast<std::size_t>(g.first_interior + j)] = g.h;
    if (g.left_dof >= 0)
      weight[static_cast<std::size_t>(g.left_dof)] += 0.5 * g.h * g.left_mult * g.left_mult;
    if (g.right_dof >= 0)
      weight[static_cast<std::size_t>(g.right_dof)] += 0.5 * g.h * g.right_mult * g.right_mult;
  }

  DiscreteOperator op;
  op.H = Eigen::MatrixXd::Zero(dim, dim);
  const double c2 = c * c;
  for (int i = 0; i < meta.n_nodes; ++i) op.H(i, i) = c2;
  for (int i = meta.n_nodes; i < dim; ++i) op.H(i, i) = -c2;
  auto couple = [&](int mid_dof, int node_dof, double mult, double h_seg, double sign) {
    if (node_dof < 0) return;
    const double v =
        sign * c * mult / std::sqrt(h_seg * weight[static_cast<std::size_t>(node_dof)]);
    op.H(mid_dof, node_dof) += v;
    op.H(node_dof, mid_dof) += v;
  };
  for (const auto& g : segs) {
    for (int k = 0; k < g.n; ++k) {
      const int m = g.first_mid + k;
      if (k == 0)
        couple(m, g.left_dof, g.left_mult, g.h, -1.0);
      else
        couple(m, g.first_interior + k - 1, 1.0, g.h, -1.0);
      if (k == g.n - 1)
        couple(m, g.right_dof, g.right_mult, g.h, +1.0);
      else
        couple(m, g.first_interior + k, 1.0, g.h, +1.0);
    }
  }
  op.meta = std::move(meta);
  return op;
}

}  // namespace detail

// Discrete Dirac operator of a tree truncation. First components are shared
// at interior vertices, which encodes their continuity; the balance of the
// second components around a vertex is enforced weakly through the shared
// row. The root and the leaves carry hard walls.
inline DiscreteOperator assemble_tree_operator(const TreeTruncation& trunc, double c,
                                               double h) {
  std::vector<int> vertex_node(trunc.vertices.size(), -1);
  int shared = 0;
  for (const auto& v : trunc.vertices)
    if (v.parent >= 0 && v.generation < trunc.depth)
      vertex_node[static_cast<std::size_t>(v.id)] = shared++;
  std::vector<detail::SegmentDesc> descs;
  descs.reserve(trunc.edges.size());
  for (const auto& e : trunc.edges)
    descs.push_back({e.length, vertex_node[static_cast<std::size_t>(e.tail)], 1.0,
                     vertex_node[static_cast<std::size_t>(e.head)], 1.0});
  DiscreteOperator op = detail::assemble(descs, shared, c, h);
  op.meta.vertex_node = std::move(vertex_node);
  return op;
}

// Discrete half-line operator with the branching-point jumps absorbed into
// the coupling coefficients: the shared DOF at a breakpoint stores the left
// limit of the first component and the right segment reads it scaled by
// sqrt(b). The breakpoint mass (h_left + b * h_right)/2 matches the lifted
// tree norm, so the half-line grids reproduce the sibling-channel reduction
// of the tree grid exactly.
inline DiscreteOperator assemble_halfline_operator(const HalflineSpec& spec, double h) {
  const auto knots = spec.knots();
  const int n_shared = static_cast<int>(spec.breakpoints.size());
  std::vector<detail::SegmentDesc> descs;
  for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
    detail::SegmentDesc d;
    d.length = knots[i + 1] - knots[i];
    d.left_dof = (i == 0) ? -1 : static_cast<int>(i) - 1;
    d.left_mult = (i == 0) ? 1.0 : std::sqrt(double(spec.factors[i - 1]));
    d.right_dof = (i + 2 == knots.size()) ? -1 : static_cast<int>(i);
    d.right_mult = 1.0;
    descs.push_back(d);
  }
  return detail::assemble(descs, n_shared, spec.c, h);
}

struct EigenDecomposition {
  Eigen::VectorXd eigenvalues;   // ascending
  Eigen::MatrixXd eigenvectors;  // columns
  GridMeta meta;
};

// Dense full eigendecomposition. The residual and orthonormality checks run
// on every call so a silently inaccurate solve cannot leak into spectra.
inline EigenDecomposition eigen_solve(const DiscreteOperator& op,
                                      int dimension_cap = 6000) {
  if (op.dim() > dimension_cap)
    throw dimension_cap_error("operator dimension " + std::to_string(op.dim()) +
                              " exceeds the cap " + std::to_string(dimension_cap));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(op.H);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("eigendecomposition failed to converge");
  EigenDecomposition dec;
  dec.eigenvalues = es.eigenvalues();
  dec.eigenvectors = es.eigenvectors();
  dec.meta = op.meta;
  const double scale =
      std::max(std::abs(dec.eigenvalues(0)), std::abs(dec.eigenvalues(op.dim() - 1)));
  const Eigen::MatrixXd resid =
      op.H * dec.eigenvectors - dec.eigenvectors * dec.eigenvalues.asDiagonal();
  if (resid.colwise().norm().maxCoeff() > 1e-10 * std::max(scale, 1.0))
    throw std::runtime_error("eigendecomposition residual out of tolerance");
  const Eigen::MatrixXd gram =
      dec.eigenvectors.transpose() * dec.eigenvectors -
      Eigen::MatrixXd::Identity(op.dim(), op.dim());
  if (gram.cwiseAbs().maxCoeff() > 1e-10)
    throw std::runtime_error("eigenvector basis lost orthonormality");
  return dec;
}

// Spectral projection onto the positive part: eigenvalues at or below zero
// are zeroed, the eigenbasis is kept.
inline DiscreteOperator positive_part(const EigenDecomposition& dec) {
  Eigen::VectorXd lp = dec.eigenvalues.cwiseMax(0.0);
  DiscreteOperator op;
  op.H = dec.eigenvectors * lp.asDiagonal() * dec.eigenvectors.transpose();
  op.meta = dec.meta;
  return op;
}

inline double residual_norm(const DiscreteOperator& op, const Eigen::VectorXd& v,
                            double lambda) {
  if (v.size() != op.dim()) throw std::invalid_argument("vector size mismatch");
  const double n = v.norm();
  if (n == 0.0) throw std::invalid_argument("residual of the zero vector is undefined");
  return (op.H * v - lambda * v).norm() / n;
}

}  // namespace treedirac
