#ifndef NBCAR_WEIGHTS_HPP
#define NBCAR_WEIGHTS_HPP

#include <cstddef>
#include <utility>
#include <vector>

#include "nbcar/errors.hpp"

namespace nbcar {

// Sparse symmetric spatial weight matrix. Entries are lane counts between
// adjacent zones; the diagonal is zero and row sums are kept alongside.
class WeightMatrix {
public:
  struct Edge {
    int i = 0;      // i < j always
    int j = 0;
    double w = 0.0; // positive
  };

  WeightMatrix() = default;

  // Build from unique undirected edges given as (i, j, w) index triples.
  // Throws on out-of-range indices, self-pairs, nonpositive weights, or a
  // pair listed twice.
  static WeightMatrix from_edges(int n, const std::vector<Edge>& edges) {
    if (n < 0) throw DomainError("WeightMatrix: negative dimension");
    WeightMatrix m;
    m.n_ = n;
    m.neighbors_.assign(static_cast<std::size_t>(n), {});
    m.row_sums_.assign(static_cast<std::size_t>(n), 0.0);
    m.edges_.reserve(edges.size());
    for (const Edge& e : edges) {
      if (e.i < 0 || e.i >= n || e.j < 0 || e.j >= n)
        throw ShapeError("WeightMatrix: edge index out of range");
      if (e.i == e.j) throw ValidationError("WeightMatrix: self-pair not allowed");
      if (!(e.w > 0.0)) throw ValidationError("WeightMatrix: edge weight must be positive");
      const int a = e.i < e.j ? e.i : e.j;
      const int b = e.i < e.j ? e.j : e.i;
      for (const auto& [nb, w] : m.neighbors_[static_cast<std::size_t>(a)]) {
        (void)w;
        if (nb == b) throw ConflictError("WeightMatrix: duplicate edge");
      }
      m.edges_.push_back({a, b, e.w});
      m.neighbors_[static_cast<std::size_t>(a)].emplace_back(b, e.w);
      m.neighbors_[static_cast<std::size_t>(b)].emplace_back(a, e.w);
      m.row_sums_[static_cast<std::size_t>(a)] += e.w;
      m.row_sums_[static_cast<std::size_t>(b)] += e.w;
    }
    return m;
  }

  int size() const { return n_; }

  double row_sum(int i) const { return row_sums_[static_cast<std::size_t>(i)]; }

  bool is_island(int i) const { return row_sum(i) == 0.0; }

  int non_island_count() const {
    int c = 0;
    for (int i = 0; i < n_; ++i)
      if (!is_island(i)) ++c;
    return c;
  }

  // (neighbor index, weight) pairs for zone i.
  const std::vector<std::pair<int, double>>& neighbors(int i) const {
    return neighbors_[static_cast<std::size_t>(i)];
  }

  // Unique undirected edges, i < j.
  const std::vector<Edge>& edges() const { return edges_; }

  // Number of connected components among non-island zones. This is the
  // rank deficiency of the intrinsic CAR precision restricted to them.
  int connected_components() const {
    std::vector<int> label(static_cast<std::size_t>(n_), -1);
    int components = 0;
    std::vector<int> stack;
    for (int start = 0; start < n_; ++start) {
      if (is_island(start) || label[static_cast<std::size_t>(start)] >= 0) continue;
      ++components;
      stack.push_back(start);
      label[static_cast<std::size_t>(start)] = components;
      while (!stack.empty()) {
        const int v = stack.back();
        stack.pop_back();
        for (const auto& [nb, w] : neighbors_[static_cast<std::size_t>(v)]) {
          (void)w;
          if (label[static_cast<std::size_t>(nb)] < 0) {
            label[static_cast<std::size_t>(nb)] = components;
            stack.push_back(nb);
          }
        }
      }
    }
    return components;
  }

private:
  int n_ = 0;
  std::vector<std::vector<std::pair<int, double>>> neighbors_;
  std::vector<Edge> edges_;
  std::vector<double> row_sums_;
};

}  // namespace nbcar

#endif  // NBCAR_WEIGHTS_HPP
