#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "treedirac/decomposition.hpp"
#include "treedirac/discretize.hpp"
#include "treedirac/numeric.hpp"
#include "treedirac/tree.hpp"

using namespace treedirac;

namespace {

double lowest_positive(const EigenDecomposition& dec) {
  for (Eigen::Index i = 0; i < dec.eigenvalues.size(); ++i)
    if (dec.eigenvalues(i) > 0.0) return dec.eigenvalues(i);
  FAIL("no positive eigenvalue");
  return 0.0;
}

}  // namespace

TEST_CASE("assembled operators are Hermitian by construction", "[discretize]") {
  const GeneratingSequences tree({1, 2}, {0.0, 1.0, 2.0});
  const auto op = assemble_tree_operator(truncate(tree, 2), 1.0, 0.1);
  REQUIRE((op.H - op.H.transpose()).cwiseAbs().maxCoeff() == 0.0);

  const auto hop =
      assemble_halfline_operator(HalflineSpec(1.0, 0.0, 2.0, {1.0}, {2}), 0.1);
  REQUIRE((hop.H - hop.H.transpose()).cwiseAbs().maxCoeff() == 0.0);

  // Diagonal blocks carry exactly +-c^2, so H^2 >= c^4 and the spectral gap
  // survives discretization without any tolerance.
  const double c2 = 1.0;
  for (Eigen::Index i = 0; i < op.dim(); ++i)
    REQUIRE(std::abs(op.H(i, i)) == c2);
}

TEST_CASE("assembly rejects incompatible grid steps", "[discretize]") {
  const HalflineSpec spec(1.0, 0.0, 1.0, {}, {});
  REQUIRE_THROWS_WITH(assemble_halfline_operator(spec, 0.6),
                      Catch::Matchers::ContainsSubstring("half the shortest"));
  REQUIRE_THROWS_WITH(assemble_halfline_operator(spec, 0.3),
                      Catch::Matchers::ContainsSubstring("within 1%"));
  REQUIRE_THROWS_AS(assemble_halfline_operator(spec, 0.0), std::invalid_argument);
  // The assembled dimension is capped before any allocation.
  REQUIRE_THROWS_AS(
      assemble_halfline_operator(HalflineSpec(1.0, 0.0, std::numbers::pi, {}, {}),
                                 std::numbers::pi / 10000.0),
      dimension_cap_error);
}

TEST_CASE("interval eigenvalues converge to the dispersion at order two", "[discretize]") {
  const double L = std::numbers::pi;
  const double exact = std::sqrt(2.0);
  double err100 = 0.0, err200 = 0.0, err400 = 0.0;
  double ev200 = 0.0, ev400 = 0.0;
  for (int n : {100, 200, 400}) {
    const auto dec =
        eigen_solve(assemble_halfline_operator(HalflineSpec(1.0, 0.0, L, {}, {}), L / n));
    const double ev = lowest_positive(dec);
    const double err = std::abs(ev - exact);
    if (n == 100) err100 = err;
    if (n == 200) {
      err200 = err;
      ev200 = ev;
    }
    if (n == 400) {
      err400 = err;
      ev400 = ev;
    }
  }
  const double order1 = std::log2(err100 / err200);
  const double order2 = std::log2(err200 / err400);
  REQUIRE(order1 >= 1.0);
  REQUIRE(order2 >= 1.0);
  // Second-order scheme: one Richardson step lands well inside 1e-4.
  const double extrapolated = (4.0 * ev400 - ev200) / 3.0;
  REQUIRE(std::abs(extrapolated - exact) <= 1e-4);
}

TEST_CASE("the staggered layout produces no doubled branches", "[discretize]") {
  const double L = std::numbers::pi;
  const auto dec =
      eigen_solve(assemble_halfline_operator(HalflineSpec(1.0, 0.0, L, {}, {}), L / 400));
  // Count discrete levels between c^2 and the midpoint separating the n = 5
  // and n = 6 dispersion levels; a doubled scheme would report ten.
  const double top = 0.5 * (dispersion(5.0, 1.0) + dispersion(6.0, 1.0));
  int count = 0;
  for (Eigen::Index i = 0; i < dec.eigenvalues.size(); ++i)
    if (dec.eigenvalues(i) >= 1.0 && dec.eigenvalues(i) <= top) ++count;
  REQUIRE(count == 5);
  // The (0, const) mode sits exactly at -c^2.
  double nearest = 1e300;
  for (Eigen::Index i = 0; i < dec.eigenvalues.size(); ++i)
    nearest = std::min(nearest, std::abs(dec.eigenvalues(i) + 1.0));
  REQUIRE(nearest <= 1e-12);
}

TEST_CASE("eigen_solve meets its contract on small matrices", "[discretize]") {
  DiscreteOperator d3;
  d3.H = Eigen::Vector3d(1.0, 2.0, 3.0).asDiagonal();
  const auto dec3 = eigen_solve(d3);
  REQUIRE(dec3.eigenvalues(0) == 1.0);
  REQUIRE(dec3.eigenvalues(2) == 3.0);

  DiscreteOperator beta;
  beta.H = Eigen::MatrixXd::Zero(2, 2);
  beta.H(0, 0) = 4.0;
  beta.H(1, 1) = -4.0;  // c = 2
  const auto decb = eigen_solve(beta);
  REQUIRE(decb.eigenvalues(0) == -4.0);
  REQUIRE(decb.eigenvalues(1) == 4.0);

  std::mt19937_64 gen(17);
  DiscreteOperator rnd;
  rnd.H = Eigen::MatrixXd::Zero(50, 50);
  for (int i = 0; i < 50; ++i)
    for (int j = 0; j <= i; ++j) {
      rnd.H(i, j) = uniform_in(gen, -1.0, 1.0);
      rnd.H(j, i) = rnd.H(i, j);
    }
  const auto decr = eigen_solve(rnd);
  const Eigen::MatrixXd rebuilt =
      decr.eigenvectors * decr.eigenvalues.asDiagonal() * decr.eigenvectors.transpose();
  REQUIRE((rebuilt - rnd.H).norm() <= 1e-10 * rnd.H.norm());

  REQUIRE_THROWS_AS(eigen_solve(rnd, 10), dimension_cap_error);
}

TEST_CASE("positive part projects and is idempotent", "[discretize]") {
  DiscreteOperator beta;
  beta.H = Eigen::MatrixXd::Zero(2, 2);
  beta.H(0, 0) = 1.0;
  beta.H(1, 1) = -1.0;
  const auto plus = positive_part(eigen_solve(beta));
  const auto spec = eigen_solve(plus);
  REQUIRE_THAT(spec.eigenvalues(0), Catch::Matchers::WithinAbs(0.0, 1e-14));
  REQUIRE_THAT(spec.eigenvalues(1), Catch::Matchers::WithinAbs(1.0, 1e-14));

  const GeneratingSequences tree({1, 2}, {0.0, 1.0, 2.0});
  const auto op = assemble_tree_operator(truncate(tree, 2), 1.0, 0.05);
  const auto once = positive_part(eigen_solve(op));
  const auto twice = positive_part(eigen_solve(once));
  REQUIRE((once.H - twice.H).cwiseAbs().maxCoeff() <= 1e-12);
  REQUIRE(eigen_solve(once).eigenvalues.minCoeff() >= -1e-10);

  // Minimum nonzero level of the positive part on the single interval is the
  // first dispersion level, above the rest energy c^2.
  const auto pdec = eigen_solve(positive_part(eigen_solve(
      assemble_halfline_operator(HalflineSpec(1.0, 0.0, std::numbers::pi, {}, {}),
                                 std::numbers::pi / 200))));
  double minpos = 1e300;
  for (Eigen::Index i = 0; i < pdec.eigenvalues.size(); ++i)
    if (pdec.eigenvalues(i) > 1e-8) minpos = std::min(minpos, pdec.eigenvalues(i));
  REQUIRE_THAT(minpos, Catch::Matchers::WithinAbs(std::sqrt(2.0), 1e-3));
  REQUIRE(minpos >= 1.0);
}

TEST_CASE("residual norm separates eigenvectors from strangers", "[discretize]") {
  const GeneratingSequences tree({1, 2}, {0.0, 1.0, 2.0});
  const auto op = assemble_tree_operator(truncate(tree, 2), 1.0, 0.05);
  const auto dec = eigen_solve(op);
  REQUIRE(residual_norm(op, dec.eigenvectors.col(3), dec.eigenvalues(3)) <= 1e-10);

  std::mt19937_64 gen(23);
  Eigen::VectorXd v(op.dim());
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = uniform_in(gen, -1.0, 1.0);
  const double far = dec.eigenvalues.maxCoeff() + 7.0;
  REQUIRE(residual_norm(op, v, far) >= 7.0 - 1e-10);

  REQUIRE_THROWS_AS(residual_norm(op, Eigen::VectorXd::Zero(op.dim()), 1.0),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(residual_norm(op, Eigen::VectorXd::Ones(3), 1.0),
                    std::invalid_argument);
}

TEST_CASE("tree and half-line assemblies agree on a path graph", "[discretize]") {
  // A branchless tree is the same interval with the same wall conditions, so
  // the two assembly routes must emit the identical matrix.
  const GeneratingSequences path({1}, {0.0, std::numbers::pi});
  const auto from_tree = assemble_tree_operator(truncate(path, 1), 1.0,
                                                std::numbers::pi / 50);
  const auto from_line = assemble_halfline_operator(
      HalflineSpec(1.0, 0.0, std::numbers::pi, {}, {}), std::numbers::pi / 50);
  REQUIRE(from_tree.dim() == from_line.dim());
  REQUIRE((from_tree.H - from_line.H).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("breakpoint eigenvalues track the transfer-matrix oracle", "[discretize]") {
  const HalflineSpec spec(1.0, 0.0, 2.0, {1.0}, {2});
  const double h = 0.01;
  const auto dec = eigen_solve(assemble_halfline_operator(spec, h));
  const auto exact = eigenvalues(spec, 1.0, 4.0);
  std::vector<double> discrete;
  for (Eigen::Index i = 0; i < dec.eigenvalues.size(); ++i)
    if (dec.eigenvalues(i) >= 1.0 && dec.eigenvalues(i) <= 4.0)
      discrete.push_back(dec.eigenvalues(i));
  REQUIRE(discrete.size() == exact.size());
  const double envelope = 5.0 * calibrate_interval_error(2.0, 1.0, h, 1.0, 4.0);
  for (std::size_t i = 0; i < exact.size(); ++i)
    REQUIRE(std::abs(discrete[i] - exact[i]) <= envelope);
}

TEST_CASE("the absorbed jump keeps the discrete current continuous", "[discretize]") {
  // Asymmetric segments so no eigenvector has an exact second-component node
  // at the breakpoint. The defect of psi1*psi2 across the breakpoint, read
  // from the best-conditioned eigenvector, shrinks linearly with h.
  auto defect = [](double h) {
    const HalflineSpec spec(1.0, 0.0, 2.6, {1.0}, {2});
    const auto dec = eigen_solve(assemble_halfline_operator(spec, h));
    const auto& segs = dec.meta.segments;
    double bestscore = -1.0, bestdef = 0.0;
    for (Eigen::Index i = 0; i < dec.eigenvalues.size(); ++i) {
      if (dec.eigenvalues(i) < 1.0 || dec.eigenvalues(i) > 4.0) continue;
      const auto v = dec.eigenvectors.col(i);
      const double w = 0.5 * segs[0].h + 0.5 * segs[1].h * 2.0;
      const double p1 = v(0) / std::sqrt(w);
      const double p2l =
          v(segs[0].first_mid + segs[0].n - 1) / std::sqrt(segs[0].h);
      const double p2r = v(segs[1].first_mid) / std::sqrt(segs[1].h);
      const double jl = p1 * p2l;
      const double jr = std::sqrt(2.0) * p1 * p2r;
      const double score = std::min(std::abs(jl), std::abs(jr));
      if (score > bestscore) {
        bestscore = score;
        bestdef = std::abs(jl - jr) / std::max(std::abs(jl), std::abs(jr));
      }
    }
    return bestdef;
  };
  const double d1 = defect(0.02);
  const double d2 = defect(0.01);
  REQUIRE(d1 <= 0.2);
  REQUIRE(d2 / d1 >= 0.35);
  REQUIRE(d2 / d1 <= 0.65);
}
