#include "nbcar/model.hpp"

#include <cmath>
#include <string>

namespace nbcar {

void ModelState::refresh_derived(const Eigen::MatrixXd& X) {
  linear_predictor(X, beta, phi, psi, lambda);
}

double nb_log_pmf(long long y, double lambda, double k) {
  if (y < 0) throw DomainError("nb_log_pmf: y must be a nonnegative integer");
  if (!(lambda > 0.0) || !std::isfinite(lambda))
    throw DomainError("nb_log_pmf: lambda must be finite and positive");
  if (!(k > 0.0) || !std::isfinite(k))
    throw DomainError("nb_log_pmf: k must be finite and positive");
  const double yd = static_cast<double>(y);
  return std::lgamma(yd + k) - std::lgamma(k) - std::lgamma(yd + 1.0) +
         k * std::log(k / (k + lambda)) + yd * std::log(lambda / (k + lambda));
}

double nb_loglik_psi_term(double y, double psi, double k) {
  // log(k + e^psi) computed stably on both tails.
  double log_k_plus_lambda;
  if (psi > 500.0) {
    log_k_plus_lambda = psi + std::log1p(k * std::exp(-psi));
  } else {
    log_k_plus_lambda = std::log(k + std::exp(psi));
  }
  return y * psi - (y + k) * log_k_plus_lambda;
}

void linear_predictor(const Eigen::MatrixXd& X, const Eigen::VectorXd& beta,
                      const Eigen::VectorXd& phi, Eigen::VectorXd& psi,
                      Eigen::VectorXd& lambda) {
  if (X.cols() != beta.size())
    throw ShapeError("linear_predictor: X has " + std::to_string(X.cols()) +
                     " columns but beta has " + std::to_string(beta.size()) + " entries");
  if (X.rows() != phi.size())
    throw ShapeError("linear_predictor: X has " + std::to_string(X.rows()) +
                     " rows but phi has " + std::to_string(phi.size()) + " entries");
  psi = X * beta + phi;
  for (Eigen::Index i = 0; i < psi.size(); ++i) {
    if (!std::isfinite(psi[i]))
      throw NumericRangeError("linear_predictor: non-finite psi at zone index " +
                              std::to_string(i));
    if (psi[i] > kMaxLinearPredictor)
      throw NumericRangeError("linear_predictor: exp overflow at zone index " +
                              std::to_string(i) + " (psi = " + std::to_string(psi[i]) + ")");
  }
  // scalar std::exp on purpose: Eigen's vectorized exp can differ in the
  // last ulp, and lambda[i] == exp(psi[i]) is promised bitwise
  lambda.resize(psi.size());
  for (Eigen::Index i = 0; i < psi.size(); ++i) lambda[i] = std::exp(psi[i]);
}

double icar_pair_energy(const Eigen::VectorXd& phi, const WeightMatrix& W) {
  if (phi.size() != W.size())
    throw ShapeError("icar_pair_energy: phi length " + std::to_string(phi.size()) +
                     " does not match weight matrix dimension " + std::to_string(W.size()));
  double energy = 0.0;
  for (const auto& e : W.edges()) {
    const double d = phi[e.i] - phi[e.j];
    energy += e.w * d * d;
  }
  return energy;
}

double icar_joint_log_density_unnorm(const Eigen::VectorXd& phi, const WeightMatrix& W,
                                     double tau) {
  if (!(tau > 0.0)) throw DomainError("icar_joint_log_density_unnorm: tau must be positive");
  return -0.5 * tau * icar_pair_energy(phi, W);
}

IcarConditional icar_conditional(int i, const Eigen::VectorXd& phi, const WeightMatrix& W,
                                 double tau) {
  if (phi.size() != W.size())
    throw ShapeError("icar_conditional: phi length does not match weight matrix dimension");
  if (i < 0 || i >= W.size()) throw ShapeError("icar_conditional: zone index out of range");
  if (!(tau > 0.0)) throw DomainError("icar_conditional: tau must be positive");
  const double wsum = W.row_sum(i);
  if (wsum == 0.0)
    throw IslandError("icar_conditional: zone index " + std::to_string(i) +
                      " has no neighbors (w_i+ = 0)");
  double acc = 0.0;
  for (const auto& [j, w] : W.neighbors(i)) acc += w * phi[j];
  return {acc / wsum, 1.0 / (tau * wsum)};
}

double normal_log_pdf_prec(double x, double mean, double precision) {
  if (!(precision > 0.0)) throw DomainError("normal_log_pdf_prec: precision must be positive");
  const double d = x - mean;
  return 0.5 * std::log(precision) - 0.5 * std::log(2.0 * M_PI) - 0.5 * precision * d * d;
}

double gamma_log_pdf(double x, double shape, double rate) {
  if (!(shape > 0.0) || !(rate > 0.0))
    throw DomainError("gamma_log_pdf: shape and rate must be positive");
  if (!(x > 0.0)) throw DomainError("gamma_log_pdf: x must be positive");
  return shape * std::log(rate) - std::lgamma(shape) + (shape - 1.0) * std::log(x) - rate * x;
}

double inv_gamma_log_pdf(double x, double shape, double rate) {
  if (!(shape > 0.0) || !(rate > 0.0))
    throw DomainError("inv_gamma_log_pdf: shape and rate must be positive");
  if (!(x > 0.0)) throw DomainError("inv_gamma_log_pdf: x must be positive");
  return shape * std::log(rate) - std::lgamma(shape) - (shape + 1.0) * std::log(x) - rate / x;
}

double log_prior(const ModelState& state, const PriorSpec& priors) {
  priors.validate();
  if (!(state.k > 0.0)) throw DomainError("log_prior: k must be positive");
  if (!(state.tau > 0.0)) throw DomainError("log_prior: tau must be positive");
  double total = 0.0;
  for (Eigen::Index j = 0; j < state.beta.size(); ++j)
    total += normal_log_pdf_prec(state.beta[j], 0.0, priors.beta_precision);
  total += inv_gamma_log_pdf(state.k, priors.k_shape, priors.k_rate);
  total += gamma_log_pdf(state.tau, priors.tau_shape, priors.tau_rate);
  return total;
}

double log_posterior_unnorm(const ModelState& state, const ModelData& data,
                            const PriorSpec& priors) {
  if (data.y.size() != data.X.rows() || data.X.rows() != state.phi.size() ||
      data.X.cols() != state.beta.size() || state.lambda.size() != data.y.size()) {
    throw ShapeError("log_posterior_unnorm: inconsistent dimensions");
  }
  double loglik = 0.0;
  for (Eigen::Index i = 0; i < data.y.size(); ++i)
    loglik += nb_log_pmf(data.y[i], state.lambda[i], state.k);
  return loglik + icar_joint_log_density_unnorm(state.phi, data.W, state.tau) +
         log_prior(state, priors);
}

}  // namespace nbcar
