#ifndef NBCAR_SAMPLER_HPP
#define NBCAR_SAMPLER_HPP

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "nbcar/model.hpp"
#include "nbcar/rng.hpp"

namespace nbcar {

// Run protocol of the Metropolis-within-Gibbs chain. Defaults follow the
// reference protocol: 20000 iterations, first 2000 discarded, one chain.
// The fix_* fields exist for oracle comparisons where part of the parameter
// vector is pinned.
struct SamplerSpec {
  int iterations = 20000;
  int burn_in = 2000;
  int thin = 1;
  std::uint64_t seed = 0;
  double target_acceptance = 0.44;
  bool adapt = true;
  bool fix_phi_at_zero = false;
  std::optional<double> fix_k_at;
  std::optional<double> fix_beta0_at;  // requires fix_phi_at_zero

  void validate() const;
};

// Random-walk proposal scales, one per coordinate block.
struct Tuning {
  Eigen::VectorXd beta_scale;
  Eigen::VectorXd phi_scale;
  double logk_scale = 0.1;

  static Tuning initial(int p, int n, double scale = 0.1);
};

// What to do inside one sweep; run_chain fills this from the SamplerSpec
// and the data, direct callers can leave the defaults.
struct SweepOptions {
  bool update_phi = true;
  bool update_k = true;
  bool update_beta0 = true;
  bool recenter = true;     // requires an all-ones first design column
  int icar_rank = -1;       // n_non_islands - n_components; -1 = compute from W
};

// Acceptance probabilities observed in one sweep, used by the adapter.
struct SweepStats {
  Eigen::VectorXd beta_accept_prob;
  Eigen::VectorXd beta_accepted;
  Eigen::VectorXd phi_accept_prob;   // islands stay 0
  Eigen::VectorXd phi_accepted;
  double k_accept_prob = 0.0;
  bool k_accepted = false;
  int nonfinite_proposals = 0;
};

// Post-burn-in thinned draws of every parameter plus the derived sd(phi).
struct ChainDraws {
  std::vector<std::string> names;
  Eigen::MatrixXd draws;  // stored draws x parameters
  std::vector<std::pair<std::string, double>> acceptance;  // post-burn-in rates per block
  std::uint64_t seed = 0;
  SamplerSpec spec;

  int column(const std::string& name) const;
};

struct ParamSummary {
  std::string name;
  double mean = 0.0;
  double sd = 0.0;
  double q025 = 0.0;
  double q975 = 0.0;
  bool significant = false;  // 95% interval excludes zero
};

struct FitSummary {
  std::vector<ParamSummary> rows;

  const ParamSummary& find(const std::string& name) const;
};

// Starting point: intercept at log(mean(y) + 0.5) when the design has an
// all-ones first column, everything else flat.
ModelState init_state(const ModelData& data, const PriorSpec& priors);

// One full update cycle:
//   (a) each beta_j by coordinate random-walk MH,
//   (b) each non-island phi_i by random-walk MH against likelihood + CAR
//       conditional,
//   (c) recentering: phi loses its non-island mean, the intercept absorbs
//       it, lambda untouched,
//   (d) tau by its conjugate gamma draw,
//   (e) k by MH on log k with the Jacobian term.
SweepStats sweep(ModelState& state, const ModelData& data, const PriorSpec& priors,
                 const Tuning& tuning, Rng& rng, const SweepOptions& opts = {});

// Runs the whole chain: adaptation during burn-in only, frozen scales after,
// deterministic in (seed, data, priors, spec).
ChainDraws run_chain(const SamplerSpec& spec, const ModelData& data, const PriorSpec& priors);

// Independent chains with seeds derived from (spec.seed, chain index), run
// concurrently. Draw matrices come back per chain.
std::vector<ChainDraws> run_chains(const SamplerSpec& spec, int n_chains, const ModelData& data,
                                   const PriorSpec& priors);

// Stacks post-burn-in draws of several chains; acceptance rates averaged.
ChainDraws concat_draws(const std::vector<ChainDraws>& chains);

// Geweke convergence score: mean of the first 10% against the last 50%,
// scaled by batch-means variance estimates of each window.
double geweke_z(const Eigen::VectorXd& column);

// Effective sample size with the initial-positive-sequence truncation.
double ess(const Eigen::VectorXd& column);

// Order-statistic quantile with linear interpolation at h = (n-1)q + 1.
double quantile_sorted(const std::vector<double>& sorted, double q);

// Posterior mean/SD/95% interval/significance for every stored column.
FitSummary summarize(const ChainDraws& draws);

// Draws persistence: '#' comment lines, a header row of parameter names,
// one draw per row at 17 significant digits.
void write_draws(std::ostream& out, const ChainDraws& draws,
                 const std::vector<std::string>& comment_lines);
ChainDraws read_draws(std::istream& in);

}  // namespace nbcar

#endif  // NBCAR_SAMPLER_HPP
