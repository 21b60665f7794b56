#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace treedirac {

// Rule extending the generating sequences beyond their explicit prefix:
// constant branching number, edge increments either constant (arithmetic)
// or d*q^n (geometric), with n the global generation index. The rule must
// reproduce the last explicit increment, so the q-powers are anchored at
// generation 0 regardless of where the explicit prefix ends.
struct TailRule {
  enum class Kind { arithmetic, geometric };
  std::int64_t branching = 2;
  Kind kind = Kind::arithmetic;
  double d = 1.0;
  double q = 1.0;

  double increment(std::int64_t n) const {
    return kind == Kind::arithmetic ? d : d * std::pow(q, double(n));
  }
  // Ratio between consecutive increments, constant for both rules.
  double growth() const { return kind == Kind::arithmetic ? 1.0 : q; }
};

struct HeightResult {
  double value = 0.0;
  bool finite = true;
  // True when the tree has no tail rule and the value only reflects the
  // explicit prefix.
  bool prefix_only = false;
};

struct ReducedHeightResult {
  double value = 0.0;
  bool divergent = false;
  bool prefix_only = false;
};

// Rooted regular metric tree described by its branching numbers b_n and
// branching radii t_n. All vertices at generation n carry b_n children and
// sit at distance t_n from the root; b_0 = 1 is the root's single child.
class GeneratingSequences {
 public:
  GeneratingSequences(std::vector<std::int64_t> b, std::vector<double> t,
                      std::optional<TailRule> tail = std::nullopt)
      : b_(std::move(b)), t_(std::move(t)), tail_(std::move(tail)) {
    auto errors = validate(b_, t_, tail_);
    if (!errors.empty()) {
      std::string msg;
      for (const auto& e : errors) {
        if (!msg.empty()) msg += "; ";
        msg += e;
      }
      throw std::invalid_argument(msg);
    }
  }

  // Collects every violation instead of stopping at the first one.
  static std::vector<std::string> validate(const std::vector<std::int64_t>& b,
                                           const std::vector<double>& t,
                                           const std::optional<TailRule>& tail) {
    std::vector<std::string> errors;
    if (b.empty()) errors.push_back("b must be non-empty");
    if (t.empty()) errors.push_back("t must be non-empty");
    if (b.empty() || t.empty()) return errors;
    if (t.size() != b.size() && t.size() != b.size() + 1)
      errors.push_back("b and t must have the same usable length (|t| == |b| or |b|+1)");
    if (b[0] != 1) errors.push_back("b[0] must be 1 (the root has a single child)");
    for (std::size_t n = 1; n < b.size(); ++n)
      if (b[n] < 2)
        errors.push_back("b[" + std::to_string(n) + "] must be >= 2");
    if (t[0] != 0.0) errors.push_back("t[0] must be 0");
    for (std::size_t n = 1; n < t.size(); ++n)
      if (!(t[n] > t[n - 1]))
        errors.push_back("t must be strictly increasing at index " + std::to_string(n));
    if (tail) {
      if (tail->branching < 2) errors.push_back("tail branching must be >= 2");
      if (!(tail->d > 0.0)) errors.push_back("tail increment d must be > 0");
      if (tail->kind == TailRule::Kind::geometric && !(tail->q > 0.0))
        errors.push_back("tail ratio q must be > 0");
      if (t.size() >= 2 && tail->d > 0.0 &&
          (tail->kind == TailRule::Kind::arithmetic || tail->q > 0.0)) {
        const std::size_t m = t.size() - 1;
        const double last = t[m] - t[m - 1];
        const double rule = tail->increment(static_cast<std::int64_t>(m) - 1);
        if (std::abs(last - rule) > 1e-9 * std::max(1.0, std::abs(rule)))
          errors.push_back("tail rule does not reproduce the last explicit edge increment");
      }
    }
    return errors;
  }

  const std::vector<std::int64_t>& explicit_b() const { return b_; }
  const std::vector<double>& explicit_t() const { return t_; }
  const std::optional<TailRule>& tail() const { return tail_; }

  // Largest n for which b_n is defined, or no bound when a tail is present.
  bool has_b(std::int64_t n) const {
    return n >= 0 && (n < std::ssize(b_) || tail_.has_value());
  }
  bool has_t(std::int64_t n) const {
    return n >= 0 && (n < std::ssize(t_) || tail_.has_value());
  }

  std::int64_t b_at(std::int64_t n) const {
    if (n < 0) throw std::domain_error("generation index must be >= 0");
    if (n < std::ssize(b_)) return b_[static_cast<std::size_t>(n)];
    if (tail_) return tail_->branching;
    throw std::domain_error("generation " + std::to_string(n) +
                            " beyond explicit b with no tail rule");
  }

  double t_at(std::int64_t n) const {
    if (n < 0) throw std::domain_error("generation index must be >= 0");
    if (n < std::ssize(t_)) return t_[static_cast<std::size_t>(n)];
    if (!tail_)
      throw std::domain_error("generation " + std::to_string(n) +
                              " beyond explicit t with no tail rule");
    const std::int64_t m = std::ssize(t_) - 1;
    if (tail_->kind == TailRule::Kind::arithmetic)
      return t_.back() + tail_->d * double(n - m);
    if (tail_->q == 1.0) return t_.back() + tail_->d * double(n - m);
    // Sum of d*q^j for j = m .. n-1.
    const double qm = std::pow(tail_->q, double(m));
    const double qn = std::pow(tail_->q, double(n));
    return t_.back() + tail_->d * (qm - qn) / (1.0 - tail_->q);
  }

  // Product b_0 * ... * b_n. This is the value of the branching function
  // just to the right of t_n.
  std::int64_t branching_product(std::int64_t n) const {
    std::int64_t prod = 1;
    for (std::int64_t i = 0; i <= n; ++i) {
      const std::int64_t f = b_at(i);
      if (prod > std::numeric_limits<std::int64_t>::max() / f)
        throw std::overflow_error("branching product overflows 64-bit range");
      prod *= f;
    }
    return prod;
  }

  std::string describe() const {
    std::ostringstream os;
    os << "b=[";
    for (std::size_t i = 0; i < b_.size(); ++i) os << (i ? "," : "") << b_[i];
    os << "] t=[";
    for (std::size_t i = 0; i < t_.size(); ++i) os << (i ? "," : "") << t_[i];
    os << "]";
    if (tail_) {
      os << " tail{b*=" << tail_->branching << ","
         << (tail_->kind == TailRule::Kind::arithmetic ? "arithmetic" : "geometric")
         << ",d=" << tail_->d;
      if (tail_->kind == TailRule::Kind::geometric) os << ",q=" << tail_->q;
      os << "}";
    }
    return os.str();
  }

 private:
  std::vector<std::int64_t> b_;
  std::vector<double> t_;
  std::optional<TailRule> tail_;
};

inline HeightResult height(const GeneratingSequences& tree) {
  const auto& tail = tree.tail();
  if (!tail) return {tree.explicit_t().back(), true, true};
  if (tail->kind == TailRule::Kind::arithmetic || tail->q >= 1.0)
    return {std::numeric_limits<double>::infinity(), false, false};
  const std::int64_t m = std::ssize(tree.explicit_t()) - 1;
  const double rest = tail->d * std::pow(tail->q, double(m)) / (1.0 - tail->q);
  return {tree.explicit_t().back() + rest, true, false};
}

// Number of edges crossed at distance s from the root: 1 at s = 0 and
// b_0*...*b_n on the half-open band (t_n, t_{n+1}].
inline std::int64_t branching_function(const GeneratingSequences& tree, double s) {
  if (s < 0.0) throw std::domain_error("branching function argument must be >= 0");
  const HeightResult h = height(tree);
  if (s >= h.value)
    throw std::domain_error("branching function argument must be below the tree height");
  if (s == 0.0) return 1;
  std::int64_t n = 0;
  while (tree.t_at(n + 1) < s) ++n;
  return tree.branching_product(n);
}

// Sum of (t_{n+1} - t_n) / (b_0*...*b_n). The tail contributes a geometric
// series with ratio growth/branching, summed in closed form; the series
// diverges when that ratio reaches 1.
inline ReducedHeightResult reduced_height(const GeneratingSequences& tree, double tol = 1e-12) {
  if (!(tol > 0.0)) throw std::invalid_argument("tolerance must be > 0");
  const std::int64_t len_t = std::ssize(tree.explicit_t());
  const std::int64_t len_b = std::ssize(tree.explicit_b());
  double sum = 0.0;
  for (std::int64_t j = 0; j + 1 < len_t; ++j)
    sum += (tree.t_at(j + 1) - tree.t_at(j)) / double(tree.branching_product(j));
  const auto& tail = tree.tail();
  if (!tail) return {sum, false, true};
  // Increments from the rule while b is still explicit.
  std::int64_t j0 = len_t - 1;
  while (j0 < len_b) {
    sum += tail->increment(j0) / double(tree.branching_product(j0));
    ++j0;
  }
  const double rho = tail->growth() / double(tail->branching);
  const double first = tail->increment(j0) / double(tree.branching_product(j0));
  if (rho >= 1.0)
    return {std::numeric_limits<double>::infinity(), true, false};
  return {sum + first / (1.0 - rho), false, false};
}

// Total metric length of the depth-N truncation.
inline double total_length(const GeneratingSequences& tree, std::int64_t N) {
  if (N < 0) throw std::domain_error("depth must be >= 0");
  double sum = 0.0;
  for (std::int64_t n = 0; n < N; ++n)
    sum += (tree.t_at(n + 1) - tree.t_at(n)) * double(tree.branching_product(n));
  return sum;
}

// Tree spanned by a generation-k vertex: sequences shift by k and radii are
// measured from that vertex. A geometric tail keeps its ratio and rescales
// its base increment by q^k.
inline GeneratingSequences subtree(const GeneratingSequences& tree, std::int64_t k) {
  if (k < 0 || !tree.has_t(k))
    throw std::domain_error("subtree generation out of range");
  const double tk = tree.t_at(k);
  std::vector<std::int64_t> b = {1};
  for (std::int64_t n = k + 1; n < std::ssize(tree.explicit_b()); ++n)
    b.push_back(tree.explicit_b()[static_cast<std::size_t>(n)]);
  std::vector<double> t = {0.0};
  for (std::int64_t n = k + 1; n < std::ssize(tree.explicit_t()); ++n)
    t.push_back(tree.explicit_t()[static_cast<std::size_t>(n)] - tk);
  std::optional<TailRule> tail = tree.tail();
  if (tail && tail->kind == TailRule::Kind::geometric)
    tail->d = tail->d * std::pow(tail->q, double(k));
  return GeneratingSequences(std::move(b), std::move(t), std::move(tail));
}

// Explicit finite graph for the depth-N truncation. Vertices are numbered in
// breadth-first order with children listed in sibling order, so the layout is
// reproducible.
struct TreeTruncation {
  struct Vertex {
    int id;
    int generation;
    int parent;  // -1 for the root
  };
  struct Edge {
    int id;
    int tail;  // parent-side vertex
    int head;  // child-side vertex
    double length;
    int generation;
  };
  std::vector<Vertex> vertices;
  std::vector<Edge> edges;
  int depth = 0;

  bool is_leaf(int v) const { return vertices[static_cast<std::size_t>(v)].generation == depth; }
};

inline TreeTruncation truncate(const GeneratingSequences& tree, std::int64_t N) {
  if (N < 1) throw std::domain_error("truncation depth must be >= 1");
  if (!tree.has_t(N) || !tree.has_b(N - 1))
    throw std::domain_error("truncation depth exceeds the available sequences");
  TreeTruncation out;
  out.depth = static_cast<int>(N);
  out.vertices.push_back({0, 0, -1});
  std::vector<int> frontier = {0};
  for (std::int64_t n = 0; n < N; ++n) {
    const std::int64_t bn = tree.b_at(n);
    const double len = tree.t_at(n + 1) - tree.t_at(n);
    std::vector<int> next;
    for (int v : frontier) {
      for (std::int64_t s = 0; s < bn; ++s) {
        const int child = static_cast<int>(out.vertices.size());
        out.vertices.push_back({child, static_cast<int>(n) + 1, v});
        out.edges.push_back({static_cast<int>(out.edges.size()), v, child, len,
                             static_cast<int>(n)});
        next.push_back(child);
      }
    }
    frontier = std::move(next);
  }
  return out;
}

// True when the edge lengths are unbounded, which happens only for a
// geometric tail with ratio above 1.
inline bool has_unbounded_edges(const GeneratingSequences& tree) {
  const auto& tail = tree.tail();
  return tail && tail->kind == TailRule::Kind::geometric && tail->q > 1.0;
}

}  // namespace treedirac
