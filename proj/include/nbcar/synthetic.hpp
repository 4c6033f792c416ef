#ifndef NBCAR_SYNTHETIC_HPP
#define NBCAR_SYNTHETIC_HPP

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "nbcar/data.hpp"
#include "nbcar/model.hpp"
#include "nbcar/rng.hpp"
#include "nbcar/weights.hpp"

namespace nbcar {

// Ground truth for synthetic datasets. Coefficient defaults mirror the
// reference fit this project reproduces; covariate ranges mirror the
// descriptive statistics of that study area.
struct TruthSpec {
  Eigen::VectorXd beta_true;            // matches CovariateSpec::defaults() order
  double k_true = 2.5;
  std::optional<double> tau_true;       // unset: calibrated to target_sd_phi
  double target_sd_phi = 0.205;

  int rows = 14;
  int cols = 15;
  int cells = 202;                      // lattice cells kept, trimmed row-major
  int zero_arterial = 4;                // cells emitted without arterials
  int lanes_min = 2;
  int lanes_max = 8;

  std::pair<double, double> area_range = {0.75, 13.42};
  std::pair<double, double> arterial_range = {0.34, 7.51};
  std::pair<double, double> access_range = {0.47, 7.73};
  std::pair<double, double> signal_range = {0.543, 4.052};
  std::pair<double, double> road_range = {0.287, 12.627};
  std::pair<double, double> betweenness_range = {0.0, 0.5};
  std::vector<double> landuse_weights = {18.3, 22.3, 7.43, 8.42, 20.8, 8.42, 14.4};

  static TruthSpec defaults();

  void validate() const;
};

// 4-neighborhood grid adjacency over rows*cols cells (row-major indices)
// with lane counts drawn uniformly from [lanes_min, lanes_max].
std::vector<WeightMatrix::Edge> make_lattice(int rows, int cols, int lanes_min, int lanes_max,
                                             Rng& rng);

struct IcarSample {
  Eigen::VectorXd phi;
  std::vector<std::string> warnings;
};

// Exact draw from the intrinsic CAR prior restricted to its proper subspace,
// by spectral decomposition of the weighted Laplacian D - W: independent
// N(0, 1/(tau * eigenvalue)) coefficients on eigenvectors with nonzero
// eigenvalue, zero coefficient on the flat directions. Components center
// separately; islands come out exactly zero.
IcarSample sample_icar(const WeightMatrix& W, double tau, Rng& rng);

// Mean marginal variance of the unit-precision field: the average non-island
// diagonal entry of the pseudo-inverse of D - W.
double icar_mean_marginal_variance(const WeightMatrix& W);

// Precision tau that makes the expected marginal sd of the field roughly
// target_sd: tau = mean_marginal_variance / target_sd^2.
double icar_tau_for_target_sd(const WeightMatrix& W, double target_sd);

// NB counts through the gamma-Poisson mixture: y_i ~ Poisson(lambda_i G_i)
// with G_i ~ Gamma(k, 1/k), exactly the model's pmf.
Eigen::VectorXi simulate_crashes(const Eigen::MatrixXd& X, const Eigen::VectorXd& beta,
                                 const Eigen::VectorXd& phi, double k, Rng& rng);

struct GridSpec {
  double lo = -1.0;
  double hi = 1.0;
  int steps = 2001;
};

struct GridPosterior {
  double mean = 0.0;
  double sd = 0.0;
  double tail_mass_bound = 0.0;  // upper bound on mass outside the grid
};

// Brute-force 1-D posterior of a single free coefficient by trapezoid
// quadrature: psi_i = offset_i + b * x_i with everything else pinned, prior
// N(0, beta_precision). Independent of the sampler by construction; throws
// GridError when the grid fails to bracket 99.99% of the mass.
GridPosterior grid_posterior_1d(const Eigen::VectorXi& y, const Eigen::VectorXd& x_free,
                                const Eigen::VectorXd& offset, double k, double beta_precision,
                                const GridSpec& grid);

struct SyntheticDataset {
  ZoneTable zones;                          // every cell, zero-arterial rows included
  std::vector<AdjacencyRecord> adjacency;   // edges among modeled cells only
  std::vector<std::pair<std::string, double>> truth;
  Eigen::VectorXd phi;                      // modeled cells, zone order
  double tau = 0.0;
  std::vector<std::string> warnings;
};

// Full synthetic study: trimmed lattice, covariates from the ranges, an ICAR
// field at the calibrated precision, NB counts, and a truth table. The
// zero-arterial cells get empty roads and zero counts so ingestion drops
// them exactly like the real data prep did.
SyntheticDataset generate_dataset(const TruthSpec& spec, std::uint64_t seed);

void write_truth(std::ostream& out, const std::vector<std::pair<std::string, double>>& truth);

}  // namespace nbcar

#endif  // NBCAR_SYNTHETIC_HPP
