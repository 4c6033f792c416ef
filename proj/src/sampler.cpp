#include "nbcar/sampler.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <future>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "nbcar/data.hpp"

namespace nbcar {

void SamplerSpec::validate() const {
  if (iterations < 1) throw ConfigError("SamplerSpec: iterations must be >= 1");
  if (burn_in < 0) throw ConfigError("SamplerSpec: burn_in must be >= 0");
  if (burn_in >= iterations)
    throw ConfigError("SamplerSpec: burn_in (" + std::to_string(burn_in) +
                      ") must be smaller than iterations (" + std::to_string(iterations) + ")");
  if (thin < 1) throw ConfigError("SamplerSpec: thin must be >= 1");
  if (!(target_acceptance > 0.0) || !(target_acceptance < 1.0))
    throw ConfigError("SamplerSpec: target_acceptance must lie in (0,1)");
  if (fix_k_at && !(*fix_k_at > 0.0))
    throw ConfigError("SamplerSpec: fix_k_at must be positive");
  if (fix_beta0_at && !fix_phi_at_zero)
    throw ConfigError("SamplerSpec: fix_beta0_at requires fix_phi_at_zero "
                      "(recentering would shift a pinned intercept)");
}

Tuning Tuning::initial(int p, int n, double scale) {
  Tuning t;
  t.beta_scale = Eigen::VectorXd::Constant(p, scale);
  t.phi_scale = Eigen::VectorXd::Constant(n, scale);
  t.logk_scale = scale;
  return t;
}

int ChainDraws::column(const std::string& name) const {
  for (int j = 0; j < static_cast<int>(names.size()); ++j)
    if (names[static_cast<std::size_t>(j)] == name) return j;
  return -1;
}

const ParamSummary& FitSummary::find(const std::string& name) const {
  for (const ParamSummary& row : rows)
    if (row.name == name) return row;
  throw Error("FitSummary: no parameter named '" + name + "'");
}

ModelState init_state(const ModelData& data, const PriorSpec& priors) {
  priors.validate();
  const Eigen::Index n = data.y.size();
  const Eigen::Index p = data.X.cols();
  if (n == 0) throw ValidationError("init_state: empty data");
  if (data.X.rows() != n)
    throw ShapeError("init_state: X has " + std::to_string(data.X.rows()) + " rows for " +
                     std::to_string(n) + " observations");
  if (data.W.size() != static_cast<int>(n))
    throw ShapeError("init_state: weight matrix dimension mismatch");
  for (Eigen::Index i = 0; i < n; ++i)
    if (data.y[i] < 0) throw ValidationError("init_state: negative count");

  ModelState state;
  state.beta = Eigen::VectorXd::Zero(p);
  if (p > 0 && (data.X.col(0).array() == 1.0).all())
    state.beta[0] = std::log(data.y.cast<double>().mean() + 0.5);
  state.phi = Eigen::VectorXd::Zero(n);
  state.k = 1.0;
  state.tau = 1.0;
  state.refresh_derived(data.X);
  return state;
}

namespace {

double nb_loglik_sum(const Eigen::VectorXi& y, const Eigen::VectorXd& psi, double k) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i)
    total += nb_loglik_psi_term(static_cast<double>(y[i]), psi[i], k);
  return total;
}

// Full NB log likelihood including the k-dependent gamma terms; the k update
// needs these, the beta/phi updates do not.
double nb_loglik_full(const Eigen::VectorXi& y, const Eigen::VectorXd& psi,
                      const Eigen::VectorXd& lambda, double k) {
  const double log_k = std::log(k);
  double total = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double yd = static_cast<double>(y[i]);
    total += std::lgamma(yd + k) - std::lgamma(k) - std::lgamma(yd + 1.0) + k * log_k +
             yd * psi[i] - (yd + k) * std::log(k + lambda[i]);
  }
  return total;
}

struct MhDecision {
  bool accepted = false;
  double alpha = 0.0;
  bool nonfinite = false;
};

MhDecision mh_step(double log_ratio, Rng& rng) {
  MhDecision d;
  if (std::isnan(log_ratio)) {  // proposal target could not be evaluated
    d.nonfinite = true;
    return d;
  }
  d.alpha = std::min(1.0, std::exp(log_ratio));
  d.accepted = rng.uniform01() < d.alpha;
  return d;
}

}  // namespace

SweepStats sweep(ModelState& state, const ModelData& data, const PriorSpec& priors,
                 const Tuning& tuning, Rng& rng, const SweepOptions& opts) {
  const Eigen::Index n = data.y.size();
  const Eigen::Index p = data.X.cols();
  if (state.beta.size() != p || state.phi.size() != n)
    throw ShapeError("sweep: state dimensions do not match data");
  if (tuning.beta_scale.size() != p || tuning.phi_scale.size() != n)
    throw ShapeError("sweep: tuning dimensions do not match data");
  if (state.psi.size() != n || state.lambda.size() != n) state.refresh_derived(data.X);

  SweepStats stats;
  stats.beta_accept_prob = Eigen::VectorXd::Zero(p);
  stats.beta_accepted = Eigen::VectorXd::Zero(p);
  stats.phi_accept_prob = Eigen::VectorXd::Zero(n);
  stats.phi_accepted = Eigen::VectorXd::Zero(n);

  // (a) coordinate random-walk MH on each beta_j
  double cur_ll = nb_loglik_sum(data.y, state.psi, state.k);
  Eigen::VectorXd psi_prop(n);
  for (Eigen::Index j = 0; j < p; ++j) {
    if (j == 0 && !opts.update_beta0) continue;
    const double delta = tuning.beta_scale[j] * rng.normal();
    psi_prop = state.psi + delta * data.X.col(j);
    double log_ratio;
    if (psi_prop.maxCoeff() > kMaxLinearPredictor || !psi_prop.allFinite()) {
      log_ratio = std::numeric_limits<double>::quiet_NaN();
    } else {
      const double prop_ll = nb_loglik_sum(data.y, psi_prop, state.k);
      const double b_old = state.beta[j];
      const double b_new = b_old + delta;
      const double prior_diff = -0.5 * priors.beta_precision * (b_new * b_new - b_old * b_old);
      log_ratio = (prop_ll - cur_ll) + prior_diff;
    }
    const MhDecision d = mh_step(log_ratio, rng);
    stats.beta_accept_prob[j] = d.alpha;
    stats.beta_accepted[j] = d.accepted ? 1.0 : 0.0;
    stats.nonfinite_proposals += d.nonfinite;
    if (d.accepted) {
      state.beta[j] += delta;
      state.psi.swap(psi_prop);
      for (Eigen::Index i = 0; i < n; ++i) state.lambda[i] = std::exp(state.psi[i]);
      cur_ll = nb_loglik_sum(data.y, state.psi, state.k);
    }
  }

  // (b) single-site random-walk MH on each non-island phi_i, target
  //     NB(y_i | lambda_i, k) times the CAR full conditional
  if (opts.update_phi) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double wsum = data.W.row_sum(static_cast<int>(i));
      if (wsum == 0.0) continue;  // island: pinned at zero
      double neighbor_acc = 0.0;
      for (const auto& [j, w] : data.W.neighbors(static_cast<int>(i)))
        neighbor_acc += w * state.phi[j];
      const double cond_mean = neighbor_acc / wsum;
      const double cond_prec = state.tau * wsum;

      const double delta = tuning.phi_scale[i] * rng.normal();
      const double phi_new = state.phi[i] + delta;
      const double psi_new = state.psi[i] + delta;
      double log_ratio;
      if (psi_new > kMaxLinearPredictor || !std::isfinite(psi_new)) {
        log_ratio = std::numeric_limits<double>::quiet_NaN();
      } else {
        const double yd = static_cast<double>(data.y[i]);
        const double cur =
            nb_loglik_psi_term(yd, state.psi[i], state.k) -
            0.5 * cond_prec * (state.phi[i] - cond_mean) * (state.phi[i] - cond_mean);
        const double prop = nb_loglik_psi_term(yd, psi_new, state.k) -
                            0.5 * cond_prec * (phi_new - cond_mean) * (phi_new - cond_mean);
        log_ratio = prop - cur;
      }
      const MhDecision d = mh_step(log_ratio, rng);
      stats.phi_accept_prob[i] = d.alpha;
      stats.phi_accepted[i] = d.accepted ? 1.0 : 0.0;
      stats.nonfinite_proposals += d.nonfinite;
      if (d.accepted) {
        state.phi[i] = phi_new;
        state.psi[i] = psi_new;
        state.lambda[i] = std::exp(psi_new);
      }
    }

    // (c) recentering: the improper CAR prior leaves the level of phi free;
    //     move it into the intercept. psi and lambda are deliberately left
    //     alone, so every lambda_i stays bit-identical.
    if (opts.recenter) {
      double total = 0.0;
      int count = 0;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (data.W.row_sum(static_cast<int>(i)) == 0.0) continue;
        total += state.phi[i];
        ++count;
      }
      if (count > 0) {
        const double shift = total / count;
        for (Eigen::Index i = 0; i < n; ++i)
          if (data.W.row_sum(static_cast<int>(i)) != 0.0) state.phi[i] -= shift;
        if (p > 0) state.beta[0] += shift;
      }
    }
  }

  // (d) conjugate gamma draw for tau given the pair energy; the shape picks
  //     up half the rank of the restricted CAR precision
  {
    const int rank = opts.icar_rank >= 0
                         ? opts.icar_rank
                         : data.W.non_island_count() - data.W.connected_components();
    const double energy = icar_pair_energy(state.phi, data.W);
    const double shape = priors.tau_shape + 0.5 * rank;
    const double rate = priors.tau_rate + 0.5 * energy;
    state.tau = rng.gamma(shape, 1.0 / rate);
  }

  // (e) MH on log k, Jacobian included
  if (opts.update_k) {
    const double step = tuning.logk_scale * rng.normal();
    const double k_new = state.k * std::exp(step);
    double log_ratio;
    if (!std::isfinite(k_new) || !(k_new > 0.0)) {
      log_ratio = std::numeric_limits<double>::quiet_NaN();
    } else {
      const double cur = nb_loglik_full(data.y, state.psi, state.lambda, state.k) +
                         inv_gamma_log_pdf(state.k, priors.k_shape, priors.k_rate) +
                         std::log(state.k);
      const double prop = nb_loglik_full(data.y, state.psi, state.lambda, k_new) +
                          inv_gamma_log_pdf(k_new, priors.k_shape, priors.k_rate) +
                          std::log(k_new);
      log_ratio = prop - cur;
    }
    const MhDecision d = mh_step(log_ratio, rng);
    stats.k_accept_prob = d.alpha;
    stats.k_accepted = d.accepted;
    stats.nonfinite_proposals += d.nonfinite;
    if (d.accepted) state.k = k_new;
  }

  return stats;
}

namespace {

double population_sd(const Eigen::VectorXd& v) {
  const double mean = v.mean();
  return std::sqrt((v.array() - mean).square().sum() / static_cast<double>(v.size()));
}

void adapt_scale(double& scale, double accept_prob, double target, double step) {
  const double next = scale * std::exp(step * (accept_prob - target));
  scale = std::clamp(next, 1e-8, 1e4);
}

}  // namespace

ChainDraws run_chain(const SamplerSpec& spec, const ModelData& data, const PriorSpec& priors) {
  spec.validate();
  priors.validate();
  const Eigen::Index n = data.y.size();
  const Eigen::Index p = data.X.cols();

  ModelState state = init_state(data, priors);
  if (!spec.fix_phi_at_zero) {
    if (p == 0 || !(data.X.col(0).array() == 1.0).all())
      throw ConfigError(
          "run_chain: free spatial effects require an all-ones first design column; "
          "recentering moves the phi level into the intercept");
  }
  if (spec.fix_beta0_at) state.beta[0] = *spec.fix_beta0_at;
  if (spec.fix_k_at) state.k = *spec.fix_k_at;
  state.refresh_derived(data.X);

  {
    const double lp0 = log_posterior_unnorm(state, data, priors);
    if (!std::isfinite(lp0))
      throw SamplerAbort("run_chain: non-finite log posterior at the initial state");
  }

  SweepOptions opts;
  opts.update_phi = !spec.fix_phi_at_zero;
  opts.update_k = !spec.fix_k_at.has_value();
  opts.update_beta0 = !spec.fix_beta0_at.has_value();
  opts.recenter = !spec.fix_phi_at_zero;
  opts.icar_rank = data.W.non_island_count() - data.W.connected_components();

  Tuning tuning = Tuning::initial(static_cast<int>(p), static_cast<int>(n), 0.1);
  Rng rng(spec.seed);

  const int stored = (spec.iterations - spec.burn_in) / spec.thin;
  ChainDraws out;
  out.seed = spec.seed;
  out.spec = spec;
  for (Eigen::Index j = 0; j < p; ++j) {
    out.names.push_back(static_cast<std::size_t>(j) < data.column_names.size()
                            ? data.column_names[static_cast<std::size_t>(j)]
                            : "beta_" + std::to_string(j));
  }
  out.names.push_back("k");
  out.names.push_back("tau");
  for (Eigen::Index i = 0; i < n; ++i) {
    out.names.push_back("phi_" + (static_cast<std::size_t>(i) < data.zone_ids.size()
                                      ? data.zone_ids[static_cast<std::size_t>(i)]
                                      : std::to_string(i)));
  }
  out.names.push_back("sd_phi");
  out.draws.resize(stored, static_cast<Eigen::Index>(out.names.size()));

  Eigen::VectorXd beta_accept_count = Eigen::VectorXd::Zero(p);
  double phi_accept_count = 0.0;
  double phi_proposals = 0.0;
  double k_accept_count = 0.0;
  int kept_sweeps = 0;
  int row = 0;
  long long consecutive_nonfinite = 0;
  const long long abort_threshold = 10 * (static_cast<long long>(p) + n + 1);

  for (int t = 1; t <= spec.iterations; ++t) {
    const SweepStats st = sweep(state, data, priors, tuning, rng, opts);

    if (st.nonfinite_proposals > 0) {
      consecutive_nonfinite += st.nonfinite_proposals;
      if (consecutive_nonfinite > abort_threshold) {
        std::ostringstream dump;
        dump << "run_chain: persistent non-finite target at iteration " << t
             << " (k=" << state.k << ", tau=" << state.tau << ", |beta|=" << state.beta.norm()
             << ", max|phi|=" << (n > 0 ? state.phi.cwiseAbs().maxCoeff() : 0.0) << ")";
        throw SamplerAbort(dump.str());
      }
    } else {
      consecutive_nonfinite = 0;
    }

    if (spec.adapt && t <= spec.burn_in) {
      const double step = std::pow(static_cast<double>(t), -0.6);
      for (Eigen::Index j = 0; j < p; ++j) {
        if (j == 0 && !opts.update_beta0) continue;
        adapt_scale(tuning.beta_scale[j], st.beta_accept_prob[j], spec.target_acceptance, step);
      }
      if (opts.update_phi) {
        for (Eigen::Index i = 0; i < n; ++i) {
          if (data.W.is_island(static_cast<int>(i))) continue;
          adapt_scale(tuning.phi_scale[i], st.phi_accept_prob[i], spec.target_acceptance, step);
        }
      }
      if (opts.update_k)
        adapt_scale(tuning.logk_scale, st.k_accept_prob, spec.target_acceptance, step);
    }

    if (t > spec.burn_in) {
      ++kept_sweeps;
      beta_accept_count += st.beta_accepted;
      if (opts.update_phi) {
        for (Eigen::Index i = 0; i < n; ++i) {
          if (data.W.is_island(static_cast<int>(i))) continue;
          phi_accept_count += st.phi_accepted[i];
          phi_proposals += 1.0;
        }
      }
      k_accept_count += st.k_accepted ? 1.0 : 0.0;

      if ((t - spec.burn_in) % spec.thin == 0) {
        Eigen::Index col = 0;
        for (Eigen::Index j = 0; j < p; ++j) out.draws(row, col++) = state.beta[j];
        out.draws(row, col++) = state.k;
        out.draws(row, col++) = state.tau;
        for (Eigen::Index i = 0; i < n; ++i) out.draws(row, col++) = state.phi[i];
        out.draws(row, col++) = population_sd(state.phi);
        ++row;
      }
    }
  }

  for (Eigen::Index j = 0; j < p; ++j) {
    if (j == 0 && !opts.update_beta0) continue;
    out.acceptance.emplace_back(out.names[static_cast<std::size_t>(j)],
                                beta_accept_count[j] / kept_sweeps);
  }
  if (opts.update_phi && phi_proposals > 0.0)
    out.acceptance.emplace_back("phi", phi_accept_count / phi_proposals);
  if (opts.update_k) out.acceptance.emplace_back("k", k_accept_count / kept_sweeps);
  return out;
}

std::vector<ChainDraws> run_chains(const SamplerSpec& spec, int n_chains, const ModelData& data,
                                   const PriorSpec& priors) {
  if (n_chains < 1) throw ConfigError("run_chains: need at least one chain");
  std::vector<std::future<ChainDraws>> futures;
  futures.reserve(static_cast<std::size_t>(n_chains));
  for (int c = 0; c < n_chains; ++c) {
    SamplerSpec chain_spec = spec;
    chain_spec.seed =
        n_chains == 1 ? spec.seed : Rng::derive_stream(spec.seed, static_cast<std::uint64_t>(c));
    futures.push_back(std::async(std::launch::async, [chain_spec, &data, &priors] {
      return run_chain(chain_spec, data, priors);
    }));
  }
  std::vector<ChainDraws> chains;
  chains.reserve(futures.size());
  for (auto& f : futures) chains.push_back(f.get());
  return chains;
}

ChainDraws concat_draws(const std::vector<ChainDraws>& chains) {
  if (chains.empty()) throw ConfigError("concat_draws: no chains");
  ChainDraws out;
  out.names = chains[0].names;
  out.seed = chains[0].spec.seed;
  out.spec = chains[0].spec;
  Eigen::Index rows = 0;
  for (const ChainDraws& c : chains) {
    if (c.names != out.names) throw ShapeError("concat_draws: chains have different parameters");
    rows += c.draws.rows();
  }
  out.draws.resize(rows, static_cast<Eigen::Index>(out.names.size()));
  Eigen::Index at = 0;
  for (const ChainDraws& c : chains) {
    out.draws.middleRows(at, c.draws.rows()) = c.draws;
    at += c.draws.rows();
  }
  out.acceptance = chains[0].acceptance;
  for (std::size_t b = 0; b < out.acceptance.size(); ++b) {
    double total = 0.0;
    for (const ChainDraws& c : chains) total += c.acceptance[b].second;
    out.acceptance[b].second = total / static_cast<double>(chains.size());
  }
  return out;
}

namespace {

// Mean of a window and the batch-means estimate of that mean's variance,
// using about sqrt(length) non-overlapping batches. The tail that does not
// fill a batch is ignored on both counts.
std::pair<double, double> batch_mean_variance(const double* x, int len) {
  const int n_batches = std::max(2, static_cast<int>(std::lround(std::sqrt(len))));
  const int batch = len / n_batches;
  const int used = n_batches * batch;
  double mean = 0.0;
  for (int i = 0; i < used; ++i) mean += x[i];
  mean /= used;
  double ss = 0.0;
  for (int b = 0; b < n_batches; ++b) {
    double bm = 0.0;
    for (int i = 0; i < batch; ++i) bm += x[b * batch + i];
    bm /= batch;
    ss += (bm - mean) * (bm - mean);
  }
  const double batch_var = ss / (n_batches - 1);
  return {mean, batch_var / n_batches};
}

}  // namespace

double geweke_z(const Eigen::VectorXd& column) {
  const int n = static_cast<int>(column.size());
  if (n < 100) throw DiagnosticError("geweke_z: need at least 100 draws");
  const double var = (column.array() - column.mean()).square().sum();
  if (var == 0.0) throw DiagnosticError("geweke_z: zero-variance column");

  const int len_a = std::max(10, n / 10);
  const int len_b = n / 2;
  const auto [mean_a, var_a] = batch_mean_variance(column.data(), len_a);
  const auto [mean_b, var_b] = batch_mean_variance(column.data() + (n - len_b), len_b);
  const double denom = var_a + var_b;
  if (!(denom > 0.0)) throw DiagnosticError("geweke_z: zero spectral variance");
  return (mean_a - mean_b) / std::sqrt(denom);
}

double ess(const Eigen::VectorXd& column) {
  const int n = static_cast<int>(column.size());
  if (n < 100) throw DiagnosticError("ess: need at least 100 draws");
  const double mean = column.mean();
  Eigen::VectorXd centered = column.array() - mean;
  const double var = centered.squaredNorm() / n;
  if (var == 0.0) throw DiagnosticError("ess: zero-variance column");

  double iact = 1.0;
  for (int t = 1; t < n; ++t) {
    double acc = 0.0;
    for (int i = 0; i + t < n; ++i) acc += centered[i] * centered[i + t];
    const double rho = acc / (n * var);
    if (rho <= 0.0) break;  // initial positive sequence ends here
    iact += 2.0 * rho;
  }
  const double value = n / iact;
  return std::min(value, static_cast<double>(n));
}

double quantile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) throw SummaryError("quantile_sorted: empty input");
  const int n = static_cast<int>(sorted.size());
  const double h = (n - 1) * q + 1.0;  // 1-based rank
  const int lo = std::clamp(static_cast<int>(std::floor(h)), 1, n);
  const int hi = std::min(lo + 1, n);
  const double frac = h - lo;
  return sorted[static_cast<std::size_t>(lo - 1)] +
         frac * (sorted[static_cast<std::size_t>(hi - 1)] -
                 sorted[static_cast<std::size_t>(lo - 1)]);
}

FitSummary summarize(const ChainDraws& draws) {
  const Eigen::Index n = draws.draws.rows();
  if (n < 2) throw SummaryError("summarize: need at least 2 stored draws");
  FitSummary summary;
  std::vector<double> buffer(static_cast<std::size_t>(n));
  for (Eigen::Index j = 0; j < draws.draws.cols(); ++j) {
    ParamSummary row;
    row.name = draws.names[static_cast<std::size_t>(j)];
    row.mean = draws.draws.col(j).mean();
    row.sd = std::sqrt((draws.draws.col(j).array() - row.mean).square().sum() /
                       static_cast<double>(n - 1));
    for (Eigen::Index i = 0; i < n; ++i) buffer[static_cast<std::size_t>(i)] = draws.draws(i, j);
    std::sort(buffer.begin(), buffer.end());
    row.q025 = quantile_sorted(buffer, 0.025);
    row.q975 = quantile_sorted(buffer, 0.975);
    row.significant = (row.q025 > 0.0) || (row.q975 < 0.0);
    summary.rows.push_back(std::move(row));
  }
  return summary;
}

void write_draws(std::ostream& out, const ChainDraws& draws,
                 const std::vector<std::string>& comment_lines) {
  for (const std::string& line : comment_lines) out << "# " << line << '\n';
  for (std::size_t j = 0; j < draws.names.size(); ++j) {
    if (j) out << ',';
    out << draws.names[j];
  }
  out << '\n';
  for (Eigen::Index i = 0; i < draws.draws.rows(); ++i) {
    for (Eigen::Index j = 0; j < draws.draws.cols(); ++j) {
      if (j) out << ',';
      out << format_double(draws.draws(i, j));
    }
    out << '\n';
  }
}

ChainDraws read_draws(std::istream& in) {
  ChainDraws draws;
  std::string line;
  std::vector<std::vector<double>> rows;
  bool have_header = false;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::string cur;
    for (char ch : line) {
      if (ch == ',') {
        cells.push_back(cur);
        cur.clear();
      } else {
        cur.push_back(ch);
      }
    }
    cells.push_back(cur);
    if (!have_header) {
      draws.names = cells;
      have_header = true;
      continue;
    }
    if (cells.size() != draws.names.size())
      throw ValidationError("draws: row at line " + std::to_string(line_no) + " has " +
                            std::to_string(cells.size()) + " cells, expected " +
                            std::to_string(draws.names.size()));
    std::vector<double> row;
    row.reserve(cells.size());
    for (const std::string& cell : cells) {
      double v = 0.0;
      const char* begin = cell.data();
      const char* end = begin + cell.size();
      auto [ptr, ec] = std::from_chars(begin, end, v);
      if (ec != std::errc{} || ptr != end)
        throw ValidationError("draws: bad number '" + cell + "' at line " +
                              std::to_string(line_no));
      row.push_back(v);
    }
    rows.push_back(std::move(row));
  }
  if (!have_header) throw SchemaError("draws: missing header row");
  draws.draws.resize(static_cast<Eigen::Index>(rows.size()),
                     static_cast<Eigen::Index>(draws.names.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      draws.draws(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return draws;
}

}  // namespace nbcar
