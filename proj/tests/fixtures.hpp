#ifndef NBCAR_TESTS_FIXTURES_HPP
#define NBCAR_TESTS_FIXTURES_HPP

#include <Eigen/Dense>
#include <vector>

#include "nbcar/model.hpp"
#include "nbcar/weights.hpp"

namespace nbcar_tests {

// Fixed 12-zone reference instance for sampler-vs-oracle comparisons.
// Generated once from NB(exp(2.0 + 0.35 x_i), k = 2) counts with a frozen
// seed; the numbers below are literals on purpose so the instance can never
// drift with generator changes.
inline constexpr double kRef12Intercept = 2.0;   // pinned in oracle mode
inline constexpr double kRef12TrueSlope = 0.35;
inline constexpr double kRef12K = 2.0;

inline const std::vector<double>& ref12_x() {
  static const std::vector<double> x = {1.596, 2.949, 2.768, 3.763, 1.139, 3.229,
                                        1.255, 2.414, 2.317, 3.548, 3.037, 2.171};
  return x;
}

inline const std::vector<int>& ref12_y() {
  static const std::vector<int> y = {4, 11, 42, 40, 15, 40, 17, 21, 18, 23, 27, 27};
  return y;
}

// Intercept + covariate design with a path-graph adjacency (lanes = 2).
inline nbcar::ModelData ref12_data() {
  const auto& x = ref12_x();
  const auto& y = ref12_y();
  const int n = static_cast<int>(x.size());
  nbcar::ModelData data;
  data.y.resize(n);
  data.X.resize(n, 2);
  for (int i = 0; i < n; ++i) {
    data.y[i] = y[static_cast<std::size_t>(i)];
    data.X(i, 0) = 1.0;
    data.X(i, 1) = x[static_cast<std::size_t>(i)];
  }
  std::vector<nbcar::WeightMatrix::Edge> edges;
  for (int i = 0; i + 1 < n; ++i) edges.push_back({i, i + 1, 2.0});
  data.W = nbcar::WeightMatrix::from_edges(n, edges);
  data.column_names = {"intercept", "x"};
  for (int i = 0; i < n; ++i) data.zone_ids.push_back("z" + std::to_string(i + 1));
  return data;
}

}  // namespace nbcar_tests

#endif  // NBCAR_TESTS_FIXTURES_HPP
