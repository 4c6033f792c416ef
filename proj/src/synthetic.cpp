#include "nbcar/synthetic.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <ostream>
#include <set>

namespace nbcar {

TruthSpec TruthSpec::defaults() {
  TruthSpec spec;
  spec.beta_true.resize(12);
  // intercept, arterial length, access density, signal density, betweenness,
  // road density, then the six land-use contrasts against industrial.
  spec.beta_true << 2.352, 0.193, 0.108, 0.359, 1.705, -0.031,
      0.136, -0.001, -0.119, 0.184, 0.022, 0.075;
  return spec;
}

void TruthSpec::validate() const {
  if (!(k_true > 0.0)) throw ConfigError("TruthSpec: k_true must be positive");
  if (tau_true && !(*tau_true > 0.0)) throw ConfigError("TruthSpec: tau_true must be positive");
  if (!(target_sd_phi > 0.0)) throw ConfigError("TruthSpec: target_sd_phi must be positive");
  if (rows < 1 || cols < 1 || static_cast<long long>(rows) * cols < 2)
    throw ConfigError("TruthSpec: lattice needs at least two cells");
  if (cells < 2 || cells > rows * cols)
    throw ConfigError("TruthSpec: cells must lie in [2, rows*cols]");
  if (zero_arterial < 0 || zero_arterial >= cells)
    throw ConfigError("TruthSpec: zero_arterial must leave at least one modeled cell");
  if (lanes_min < 1 || lanes_max < lanes_min)
    throw ConfigError("TruthSpec: lane range is empty");
  if (landuse_weights.size() != static_cast<std::size_t>(kLandUseClasses))
    throw ConfigError("TruthSpec: landuse_weights needs 7 entries");
  for (double w : landuse_weights)
    if (!(w >= 0.0)) throw ConfigError("TruthSpec: landuse weights must be nonnegative");
}

std::vector<WeightMatrix::Edge> make_lattice(int rows, int cols, int lanes_min, int lanes_max,
                                             Rng& rng) {
  if (rows < 1 || cols < 1 || static_cast<long long>(rows) * cols < 2)
    throw DomainError("make_lattice: need at least two cells");
  if (lanes_min < 1 || lanes_max < lanes_min)
    throw DomainError("make_lattice: empty lane range");
  std::vector<WeightMatrix::Edge> edges;
  edges.reserve(static_cast<std::size_t>(2LL * rows * cols - rows - cols));
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const int cell = r * cols + c;
      if (c + 1 < cols)
        edges.push_back(
            {cell, cell + 1, static_cast<double>(rng.uniform_int(lanes_min, lanes_max))});
      if (r + 1 < rows)
        edges.push_back(
            {cell, cell + cols, static_cast<double>(rng.uniform_int(lanes_min, lanes_max))});
    }
  }
  return edges;
}

namespace {

Eigen::MatrixXd dense_laplacian(const WeightMatrix& W) {
  const int n = W.size();
  Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(n, n);
  for (const auto& e : W.edges()) {
    Q(e.i, e.i) += e.w;
    Q(e.j, e.j) += e.w;
    Q(e.i, e.j) -= e.w;
    Q(e.j, e.i) -= e.w;
  }
  return Q;
}

}  // namespace

IcarSample sample_icar(const WeightMatrix& W, double tau, Rng& rng) {
  if (!(tau > 0.0)) throw DomainError("sample_icar: tau must be positive");
  const int n = W.size();
  if (n < 1) throw DomainError("sample_icar: empty weight matrix");

  const Eigen::MatrixXd Q = dense_laplacian(W);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(Q);
  if (eig.info() != Eigen::Success)
    throw NumericRangeError("sample_icar: eigendecomposition failed");
  const Eigen::VectorXd& values = eig.eigenvalues();
  const Eigen::MatrixXd& vectors = eig.eigenvectors();
  const double tol = 1e-9 * std::max(1.0, values.cwiseAbs().maxCoeff());

  IcarSample out;
  out.phi = Eigen::VectorXd::Zero(n);
  for (int m = 0; m < n; ++m) {
    if (values[m] <= tol) continue;  // flat direction: zero coefficient
    const double sd = 1.0 / std::sqrt(tau * values[m]);
    out.phi += rng.normal(0.0, sd) * vectors.col(m);
  }

  const int components = W.connected_components();
  if (components > 1)
    out.warnings.push_back("sample_icar: " + std::to_string(components) +
                           " connected components; each centered separately");
  return out;
}

double icar_mean_marginal_variance(const WeightMatrix& W) {
  const int n = W.size();
  if (n < 2) throw DomainError("icar_mean_marginal_variance: need at least two zones");

  const Eigen::MatrixXd Q = dense_laplacian(W);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(Q);
  if (eig.info() != Eigen::Success)
    throw NumericRangeError("icar_mean_marginal_variance: eigendecomposition failed");
  const Eigen::VectorXd& values = eig.eigenvalues();
  const Eigen::MatrixXd& vectors = eig.eigenvectors();
  const double tol = 1e-9 * std::max(1.0, values.cwiseAbs().maxCoeff());

  double total = 0.0;
  int counted = 0;
  for (int i = 0; i < n; ++i) {
    if (W.is_island(i)) continue;
    double diag = 0.0;
    for (int m = 0; m < n; ++m) {
      if (values[m] <= tol) continue;
      diag += vectors(i, m) * vectors(i, m) / values[m];
    }
    total += diag;
    ++counted;
  }
  if (counted == 0) throw DomainError("icar_mean_marginal_variance: all zones are islands");
  return total / counted;
}

double icar_tau_for_target_sd(const WeightMatrix& W, double target_sd) {
  if (!(target_sd > 0.0)) throw DomainError("icar_tau_for_target_sd: target must be positive");
  return icar_mean_marginal_variance(W) / (target_sd * target_sd);
}

Eigen::VectorXi simulate_crashes(const Eigen::MatrixXd& X, const Eigen::VectorXd& beta,
                                 const Eigen::VectorXd& phi, double k, Rng& rng) {
  if (!(k > 0.0)) throw DomainError("simulate_crashes: k must be positive");
  Eigen::VectorXd psi, lambda;
  linear_predictor(X, beta, phi, psi, lambda);
  Eigen::VectorXi y(lambda.size());
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    const double rate = lambda[i] * rng.gamma(k, 1.0 / k);
    if (!std::isfinite(rate))
      throw NumericRangeError("simulate_crashes: non-finite rate at zone index " +
                              std::to_string(i));
    y[i] = static_cast<int>(rng.poisson(rate));
  }
  return y;
}

GridPosterior grid_posterior_1d(const Eigen::VectorXi& y, const Eigen::VectorXd& x_free,
                                const Eigen::VectorXd& offset, double k, double beta_precision,
                                const GridSpec& grid) {
  if (y.size() != x_free.size() || y.size() != offset.size())
    throw ShapeError("grid_posterior_1d: inconsistent dimensions");
  if (!(k > 0.0) || !(beta_precision > 0.0))
    throw DomainError("grid_posterior_1d: k and beta_precision must be positive");
  if (grid.steps < 5) throw GridError("grid_posterior_1d: need at least 5 grid points");
  if (!(grid.hi > grid.lo)) throw GridError("grid_posterior_1d: empty grid interval");

  const int m = grid.steps;
  const double h = (grid.hi - grid.lo) / (m - 1);

  // Log posterior along the grid, psi-form so huge linear predictors stay
  // finite instead of overflowing through exp.
  const double k_log_k = k * std::log(k);
  std::vector<double> lp(static_cast<std::size_t>(m));
  for (int t = 0; t < m; ++t) {
    const double b = grid.lo + t * h;
    double acc = -0.5 * beta_precision * b * b;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      const double yd = static_cast<double>(y[i]);
      const double psi = offset[i] + b * x_free[i];
      acc += std::lgamma(yd + k) - std::lgamma(k) - std::lgamma(yd + 1.0) + k_log_k +
             nb_loglik_psi_term(yd, psi, k);
    }
    lp[static_cast<std::size_t>(t)] = acc;
  }

  const double lp_max = *std::max_element(lp.begin(), lp.end());
  std::vector<double> w(static_cast<std::size_t>(m));
  for (int t = 0; t < m; ++t) w[static_cast<std::size_t>(t)] = std::exp(lp[static_cast<std::size_t>(t)] - lp_max);

  auto trapezoid = [&](auto&& f) {
    double acc = 0.5 * (f(0) + f(m - 1));
    for (int t = 1; t + 1 < m; ++t) acc += f(t);
    return acc * h;
  };
  const double z = trapezoid([&](int t) { return w[static_cast<std::size_t>(t)]; });
  if (!(z > 0.0)) throw GridError("grid_posterior_1d: zero mass on the grid");
  const double mean =
      trapezoid([&](int t) { return w[static_cast<std::size_t>(t)] * (grid.lo + t * h); }) / z;
  const double m2 = trapezoid([&](int t) {
                      const double b = grid.lo + t * h;
                      return w[static_cast<std::size_t>(t)] * b * b;
                    }) /
                    z;

  // Tail bound by exponential extrapolation of the boundary log slopes. A
  // rising density at either edge means the grid missed the mode's flank.
  const double slope_left = (lp[1] - lp[0]) / h;
  const double slope_right = (lp[static_cast<std::size_t>(m - 2)] - lp[static_cast<std::size_t>(m - 1)]) / h;
  if (!(slope_left > 0.0) || !(slope_right > 0.0))
    throw GridError("grid_posterior_1d: posterior not decaying at a grid edge; widen the grid");
  const double tail =
      (w[0] / slope_left + w[static_cast<std::size_t>(m - 1)] / slope_right) / z;
  if (!(tail < 1e-4))
    throw GridError("grid_posterior_1d: grid brackets less than 99.99% of the mass");

  GridPosterior out;
  out.mean = mean;
  out.sd = std::sqrt(std::max(0.0, m2 - mean * mean));
  out.tail_mass_bound = tail;
  return out;
}

namespace {

int draw_categorical(const std::vector<double>& weights, Rng& rng) {
  double total = 0.0;
  for (double w : weights) total += w;
  double u = rng.uniform01() * total;
  for (std::size_t c = 0; c < weights.size(); ++c) {
    u -= weights[c];
    if (u <= 0.0) return static_cast<int>(c);
  }
  return static_cast<int>(weights.size()) - 1;
}

std::string zone_id_for(int index, int width) {
  std::string digits = std::to_string(index + 1);
  while (static_cast<int>(digits.size()) < width) digits.insert(digits.begin(), '0');
  return "z" + digits;
}

// Connectivity of the modeled subgraph after removing the zero-arterial cells.
bool connected_after_removal(int cells, const std::vector<WeightMatrix::Edge>& edges,
                             const std::set<int>& removed) {
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(cells));
  for (const auto& e : edges) {
    if (e.i >= cells || e.j >= cells) continue;
    if (removed.count(e.i) || removed.count(e.j)) continue;
    adj[static_cast<std::size_t>(e.i)].push_back(e.j);
    adj[static_cast<std::size_t>(e.j)].push_back(e.i);
  }
  int start = -1;
  for (int i = 0; i < cells; ++i)
    if (!removed.count(i)) {
      start = i;
      break;
    }
  if (start < 0) return false;
  std::vector<char> seen(static_cast<std::size_t>(cells), 0);
  std::vector<int> stack = {start};
  seen[static_cast<std::size_t>(start)] = 1;
  int visited = 1;
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    for (int nb : adj[static_cast<std::size_t>(v)]) {
      if (!seen[static_cast<std::size_t>(nb)]) {
        seen[static_cast<std::size_t>(nb)] = 1;
        ++visited;
        stack.push_back(nb);
      }
    }
  }
  return visited == cells - static_cast<int>(removed.size());
}

}  // namespace

SyntheticDataset generate_dataset(const TruthSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng(seed);

  // Full-lattice edges; cells at index >= spec.cells are trimmed away.
  // Row-major truncation keeps the remaining lattice connected.
  const std::vector<WeightMatrix::Edge> lattice =
      make_lattice(spec.rows, spec.cols, spec.lanes_min, spec.lanes_max, rng);

  // Zero-arterial cells, re-drawn until the modeled subgraph is connected.
  std::set<int> zero_cells;
  for (int attempt = 0; attempt < 1000; ++attempt) {
    zero_cells.clear();
    while (static_cast<int>(zero_cells.size()) < spec.zero_arterial)
      zero_cells.insert(static_cast<int>(rng.uniform_int(0, spec.cells - 1)));
    if (connected_after_removal(spec.cells, lattice, zero_cells)) break;
    zero_cells.clear();
  }
  if (static_cast<int>(zero_cells.size()) != spec.zero_arterial && spec.zero_arterial > 0)
    throw ConfigError("generate_dataset: could not keep the modeled lattice connected");

  const int id_width = static_cast<int>(std::to_string(spec.cells).size());

  // Covariates for every cell; roads and counts stay empty on zero-arterial
  // cells so ingestion excludes them.
  std::vector<ZoneRecord> records(static_cast<std::size_t>(spec.cells));
  for (int i = 0; i < spec.cells; ++i) {
    ZoneRecord& r = records[static_cast<std::size_t>(i)];
    r.zone_id = zone_id_for(i, id_width);
    r.area_km2 = rng.uniform(spec.area_range.first, spec.area_range.second);
    const bool zero = zero_cells.count(i) > 0;
    r.arterial_length_km =
        zero ? 0.0 : rng.uniform(spec.arterial_range.first, spec.arterial_range.second);
    r.access_density = zero ? 0.0 : rng.uniform(spec.access_range.first, spec.access_range.second);
    r.signal_density = zero ? 0.0 : rng.uniform(spec.signal_range.first, spec.signal_range.second);
    r.road_density = rng.uniform(spec.road_range.first, spec.road_range.second);
    r.betweenness = rng.uniform(spec.betweenness_range.first, spec.betweenness_range.second);
    r.land_use_class = draw_categorical(spec.landuse_weights, rng);
    r.crash_count = 0;
  }

  // Modeled cells in id order, with their model indices.
  std::vector<int> model_index(static_cast<std::size_t>(spec.cells), -1);
  std::vector<int> modeled_cells;
  for (int i = 0; i < spec.cells; ++i) {
    if (zero_cells.count(i)) continue;
    model_index[static_cast<std::size_t>(i)] = static_cast<int>(modeled_cells.size());
    modeled_cells.push_back(i);
  }
  const int n_model = static_cast<int>(modeled_cells.size());

  std::vector<WeightMatrix::Edge> model_edges;
  SyntheticDataset out;
  for (const auto& e : lattice) {
    if (e.i >= spec.cells || e.j >= spec.cells) continue;
    const int a = model_index[static_cast<std::size_t>(e.i)];
    const int b = model_index[static_cast<std::size_t>(e.j)];
    if (a < 0 || b < 0) continue;
    model_edges.push_back({a, b, e.w});
    out.adjacency.push_back({records[static_cast<std::size_t>(e.i)].zone_id,
                             records[static_cast<std::size_t>(e.j)].zone_id,
                             static_cast<long long>(e.w), 0});
  }
  const WeightMatrix W = WeightMatrix::from_edges(n_model, model_edges);

  const double tau =
      spec.tau_true ? *spec.tau_true : icar_tau_for_target_sd(W, spec.target_sd_phi);

  IcarSample field = sample_icar(W, tau, rng);
  out.warnings = field.warnings;

  // Design over the modeled cells only, through the same covariate encoding
  // the fit will use.
  std::vector<ZoneRecord> modeled_records;
  modeled_records.reserve(static_cast<std::size_t>(n_model));
  for (int cell : modeled_cells) modeled_records.push_back(records[static_cast<std::size_t>(cell)]);
  const ZoneTable modeled_table{std::move(modeled_records)};
  const DesignMatrix design = design_matrix(modeled_table, CovariateSpec::defaults());
  if (design.X.cols() != spec.beta_true.size())
    throw ConfigError("generate_dataset: beta_true has " + std::to_string(spec.beta_true.size()) +
                      " entries for a " + std::to_string(design.X.cols()) + "-column design");

  const Eigen::VectorXi y = simulate_crashes(design.X, spec.beta_true, field.phi, spec.k_true, rng);
  for (int m = 0; m < n_model; ++m)
    records[static_cast<std::size_t>(modeled_cells[static_cast<std::size_t>(m)])].crash_count =
        y[m];

  out.zones = ZoneTable(std::move(records));
  out.phi = field.phi;
  out.tau = tau;
  for (Eigen::Index j = 0; j < spec.beta_true.size(); ++j)
    out.truth.emplace_back(design.column_names[static_cast<std::size_t>(j)], spec.beta_true[j]);
  out.truth.emplace_back("k", spec.k_true);
  out.truth.emplace_back("tau", tau);
  const double phi_mean = field.phi.mean();
  out.truth.emplace_back(
      "sd_phi", std::sqrt((field.phi.array() - phi_mean).square().sum() / n_model));
  return out;
}

void write_truth(std::ostream& out, const std::vector<std::pair<std::string, double>>& truth) {
  out << "parameter,value\n";
  for (const auto& [name, value] : truth) out << name << ',' << format_double(value) << '\n';
}

}  // namespace nbcar
