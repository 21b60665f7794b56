#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

#include "treedirac/tree.hpp"

namespace treedirac {

// Matching condition A*f1 + B*f2 = 0 at a vertex where b_k child edges meet
// the incoming edge (v = b_k + 1 boundary values per spinor component).
// A chains equality of consecutive first components, B balances the second
// components in its last row.
struct VertexConditionPair {
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;

  Eigen::Index size() const { return A.rows(); }
};

inline VertexConditionPair build_vertex_pair(std::int64_t b_k) {
  if (b_k < 1) throw std::invalid_argument("branching number must be >= 1");
  const Eigen::Index v = static_cast<Eigen::Index>(b_k) + 1;
  VertexConditionPair p;
  p.A = Eigen::MatrixXd::Zero(v, v);
  p.B = Eigen::MatrixXd::Zero(v, v);
  for (Eigen::Index i = 0; i + 1 < v; ++i) {
    p.A(i, i) = 1.0;
    p.A(i, i + 1) = -1.0;
  }
  p.B.row(v - 1).setOnes();
  return p;
}

struct ConditionValidation {
  Eigen::Index row_rank = 0;
  double symmetry_defect = 0.0;
  bool full_rank = false;
  bool symmetric = false;
  bool pass = false;
};

// Checks the two properties that make A, B a self-adjoint matching pair:
// A*B^T is symmetric (here it vanishes identically) and the stacked block
// (A|B) has full row rank.
inline ConditionValidation validate(const VertexConditionPair& p) {
  if (p.A.rows() != p.A.cols() || p.B.rows() != p.B.cols() ||
      p.A.rows() != p.B.rows())
    throw std::invalid_argument("condition matrices must be square and equally sized");
  const Eigen::Index v = p.A.rows();
  ConditionValidation r;
  r.symmetry_defect =
      (p.A * p.B.transpose() - p.B * p.A.transpose()).cwiseAbs().maxCoeff();
  Eigen::MatrixXd stacked(v, 2 * v);
  stacked << p.A, p.B;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(stacked);
  lu.setThreshold(1e-10);
  r.row_rank = lu.rank();
  r.full_rank = (r.row_rank == v);
  r.symmetric = (r.symmetry_defect <= 1e-12);
  r.pass = r.full_rank && r.symmetric;
  return r;
}

// Per-edge rotation by theta_s in the (f1, f2) plane. Rotating the boundary
// values of every meeting edge turns the condition A*f1 + B*f2 = 0 into
// A'*f1' + B'*f2' = 0 with A' = A*C + B*S and B' = B*C - A*S, where C and S
// are diagonal cos/sin matrices. The transform is symplectic on the stacked
// boundary data, so validation outcomes are unchanged.
inline VertexConditionPair gauge_transform(const VertexConditionPair& p,
                                           const std::vector<double>& thetas) {
  const Eigen::Index v = p.A.rows();
  if (std::ssize(thetas) != v)
    throw std::invalid_argument("need one gauge angle per meeting edge");
  Eigen::VectorXd c(v), s(v);
  for (Eigen::Index i = 0; i < v; ++i) {
    c(i) = std::cos(thetas[static_cast<std::size_t>(i)]);
    s(i) = std::sin(thetas[static_cast<std::size_t>(i)]);
  }
  VertexConditionPair out;
  out.A = p.A * c.asDiagonal() + p.B * s.asDiagonal();
  out.B = p.B * c.asDiagonal() - p.A * s.asDiagonal();
  return out;
}

// Weight transplanting a spinor across a branching point of the half-line
// reduction: first component scales by sqrt(b_j), second by 1/sqrt(b_j).
// Unimodular, and the pointwise product of the components (the probability
// current) is unchanged.
struct HalflineMatching {
  std::int64_t factor;
  double up() const { return std::sqrt(double(factor)); }
  double down() const { return 1.0 / std::sqrt(double(factor)); }
  double determinant() const { return up() * down(); }
  std::array<double, 2> apply(const std::array<double, 2>& psi) const {
    return {up() * psi[0], down() * psi[1]};
  }
};

inline HalflineMatching halfline_matching(std::int64_t b_j) {
  if (b_j < 2) throw std::invalid_argument("branching factor must be >= 2");
  return HalflineMatching{b_j};
}

// Stacks per-edge spinor traces at an interior vertex into the boundary
// vectors fed to the matching condition. Child edges contribute their values
// at the vertex-side endpoint (local coordinate 0), the incoming edge its
// value at the far endpoint (local coordinate L); the second components of
// the child edges enter with a minus sign.
inline std::pair<Eigen::VectorXd, Eigen::VectorXd> boundary_vectors(
    const TreeTruncation& trunc, int vertex_id,
    const std::map<int, std::array<double, 2>>& traces) {
  if (vertex_id < 0 || vertex_id >= std::ssize(trunc.vertices))
    throw std::invalid_argument("vertex id out of range");
  const auto& vert = trunc.vertices[static_cast<std::size_t>(vertex_id)];
  if (vert.parent < 0 || trunc.is_leaf(vertex_id))
    throw std::invalid_argument("boundary vectors are defined at interior vertices only");
  std::vector<int> outgoing;
  int incoming = -1;
  for (const auto& e : trunc.edges) {
    if (e.tail == vertex_id) outgoing.push_back(e.id);
    if (e.head == vertex_id) incoming = e.id;
  }
  const Eigen::Index v = static_cast<Eigen::Index>(outgoing.size()) + 1;
  Eigen::VectorXd f1(v), f2(v);
  for (Eigen::Index i = 0; i < v - 1; ++i) {
    const auto it = traces.find(outgoing[static_cast<std::size_t>(i)]);
    if (it == traces.end()) throw std::invalid_argument("missing trace for a child edge");
    f1(i) = it->second[0];
    f2(i) = -it->second[1];
  }
  const auto it = traces.find(incoming);
  if (it == traces.end()) throw std::invalid_argument("missing trace for the incoming edge");
  f1(v - 1) = it->second[0];
  f2(v - 1) = it->second[1];
  return {f1, f2};
}

}  // namespace treedirac
