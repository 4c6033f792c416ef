#ifndef NBCAR_MODEL_HPP
#define NBCAR_MODEL_HPP

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "nbcar/errors.hpp"
#include "nbcar/weights.hpp"

namespace nbcar {

// Linear predictors above this make exp() overflow territory; the model
// reports them instead of saturating.
inline constexpr double kMaxLinearPredictor = 700.0;

// Hyperparameters of the parameter priors. Coefficients get independent
// N(0, precision) priors (precision convention), the over-dispersion k an
// inverse-gamma, and the CAR precision tau a gamma.
struct PriorSpec {
  double beta_precision = 1e-5;
  double k_shape = 1e-3;
  double k_rate = 1e-3;
  double tau_shape = 0.5;
  double tau_rate = 5e-4;

  void validate() const {
    if (!(beta_precision > 0.0) || !(k_shape > 0.0) || !(k_rate > 0.0) ||
        !(tau_shape > 0.0) || !(tau_rate > 0.0)) {
      throw ConfigError("PriorSpec: all hyperparameters must be strictly positive");
    }
  }
};

// Full parameter vector theta = (beta, phi, k, tau) plus the derived linear
// predictor psi and mean lambda = exp(psi).
struct ModelState {
  Eigen::VectorXd beta;
  Eigen::VectorXd phi;
  double k = 1.0;
  double tau = 1.0;
  Eigen::VectorXd psi;
  Eigen::VectorXd lambda;

  void refresh_derived(const Eigen::MatrixXd& X);
};

// Observed data as the model sees it: counts, design matrix, spatial weights.
struct ModelData {
  Eigen::VectorXi y;
  Eigen::MatrixXd X;
  WeightMatrix W;
  std::vector<std::string> column_names;  // p design columns
  std::vector<std::string> zone_ids;      // n zones
};

struct IcarConditional {
  double mean = 0.0;
  double variance = 0.0;
};

// log NB(y | lambda, k) in the mean-dispersion form:
//   Gamma(y+k) / (Gamma(k) y!) * (k/(k+lambda))^k * (lambda/(k+lambda))^y
// so E[y] = lambda and Var[y] = lambda + lambda^2/k.
double nb_log_pmf(long long y, double lambda, double k);

// The part of the NB log pmf that varies with psi = log(lambda) when k is
// held fixed: y*psi - (y+k)*log(k + exp(psi)). Gamma terms cancel in MH
// ratios for beta/phi moves, so the sampler uses this form.
double nb_loglik_psi_term(double y, double psi, double k);

// psi = X beta + phi and lambda = exp(psi). Throws NumericRangeError naming
// the first offending zone if any psi exceeds kMaxLinearPredictor.
void linear_predictor(const Eigen::MatrixXd& X, const Eigen::VectorXd& beta,
                      const Eigen::VectorXd& phi, Eigen::VectorXd& psi,
                      Eigen::VectorXd& lambda);

// Pair energy of the intrinsic CAR prior over unordered pairs:
//   E = sum_{i<j} w_ij (phi_i - phi_j)^2  >= 0.
double icar_pair_energy(const Eigen::VectorXd& phi, const WeightMatrix& W);

// Unnormalized joint log density -(tau/2) * E. The intrinsic prior is
// improper; no normalizing constant exists, so none is attempted.
double icar_joint_log_density_unnorm(const Eigen::VectorXd& phi, const WeightMatrix& W,
                                     double tau);

// Full conditional of phi_i given the rest: normal with mean the weighted
// neighbor average and variance 1/(tau * w_i+). Undefined for islands.
IcarConditional icar_conditional(int i, const Eigen::VectorXd& phi, const WeightMatrix& W,
                                 double tau);

// Full log densities of the named distributions, normalizing constants
// included. The codebase convention: parameter priors keep their constants,
// the ICAR term is the one density left unnormalized.
double normal_log_pdf_prec(double x, double mean, double precision);
double gamma_log_pdf(double x, double shape, double rate);
double inv_gamma_log_pdf(double x, double shape, double rate);

// Sum of the parameter prior log densities (beta normals, k inverse-gamma,
// tau gamma). The ICAR prior on phi is not part of this; it enters the
// posterior through icar_joint_log_density_unnorm.
double log_prior(const ModelState& state, const PriorSpec& priors);

// Unnormalized log posterior: NB likelihood + ICAR term + parameter priors.
// Uses the state's cached psi/lambda, which must be in sync with (beta, phi).
double log_posterior_unnorm(const ModelState& state, const ModelData& data,
                            const PriorSpec& priors);

}  // namespace nbcar

#endif  // NBCAR_MODEL_HPP
