#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "fixtures.hpp"
#include "nbcar/sampler.hpp"

using namespace nbcar;
using nbcar_tests::ref12_data;
using Eigen::VectorXd;

namespace {

ModelData small_data(bool with_island = false) {
  ModelData d;
  d.y.resize(4);
  d.y << 6, 11, 3, 9;
  d.X.resize(4, 2);
  d.X << 1.0, 0.4, 1.0, 1.3, 1.0, -0.2, 1.0, 0.8;
  std::vector<WeightMatrix::Edge> edges = {{0, 1, 2.0}, {1, 2, 1.0}};
  if (!with_island) edges.push_back({2, 3, 3.0});
  d.W = WeightMatrix::from_edges(4, edges);  // zone 3 is an island when asked
  d.column_names = {"intercept", "x"};
  return d;
}

}  // namespace

TEST_CASE("rng variate transforms have the right moments") {
  Rng rng(2024);
  const int N = 200000;

  double sum = 0.0, sum_sq = 0.0;
  for (int i = 0; i < N; ++i) {
    const double z = rng.normal();
    sum += z;
    sum_sq += z * z;
  }
  CHECK(std::fabs(sum / N) < 3.0 / std::sqrt(static_cast<double>(N)));
  CHECK(sum_sq / N == doctest::Approx(1.0).epsilon(0.02));

  // Gamma(3.5, scale 2): mean 7, variance 14.
  sum = sum_sq = 0.0;
  for (int i = 0; i < N; ++i) {
    const double g = rng.gamma(3.5, 2.0);
    sum += g;
    sum_sq += g * g;
  }
  const double gm = sum / N;
  CHECK(gm == doctest::Approx(7.0).epsilon(0.01));
  CHECK(sum_sq / N - gm * gm == doctest::Approx(14.0).epsilon(0.05));

  // Gamma with shape < 1 exercises the boost branch.
  sum = 0.0;
  for (int i = 0; i < N; ++i) sum += rng.gamma(0.5, 1.0);
  CHECK(sum / N == doctest::Approx(0.5).epsilon(0.02));

  // Poisson across the small-mean and PTRS branches.
  for (double mean : {3.0, 80.0}) {
    sum = sum_sq = 0.0;
    for (int i = 0; i < N / 2; ++i) {
      const double v = static_cast<double>(rng.poisson(mean));
      sum += v;
      sum_sq += v * v;
    }
    const double pm = sum / (N / 2);
    CHECK(pm == doctest::Approx(mean).epsilon(0.02));
    CHECK(sum_sq / (N / 2) - pm * pm == doctest::Approx(mean).epsilon(0.05));
  }

  // Identical seeds give identical streams.
  Rng a(7), b(7);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("init_state") {
  PriorSpec priors;

  ModelData d = small_data();
  d.y << 109, 109, 109, 109;
  ModelState s = init_state(d, priors);
  CHECK(s.beta[0] == doctest::Approx(4.695925).epsilon(1e-6));
  CHECK(s.beta[1] == 0.0);
  CHECK(s.phi.isZero(0.0));
  CHECK(s.k == 1.0);
  CHECK(s.tau == 1.0);
  CHECK(std::isfinite(log_posterior_unnorm(s, d, priors)));

  d.y << 0, 0, 0, 0;
  s = init_state(d, priors);
  CHECK(s.beta[0] == doctest::Approx(std::log(0.5)).epsilon(1e-12));

  ModelData empty;
  empty.X.resize(0, 2);
  CHECK_THROWS_AS(init_state(empty, priors), ValidationError);
}

TEST_CASE("sweep with zero-width proposals changes only tau") {
  ModelData d = small_data();
  PriorSpec priors;
  ModelState s = init_state(d, priors);
  ModelState before = s;

  Tuning zero = Tuning::initial(2, 4, 0.0);
  Rng rng(5);
  sweep(s, d, priors, zero, rng);

  CHECK(s.beta == before.beta);
  CHECK(s.phi == before.phi);
  CHECK(s.k == before.k);
  CHECK(s.psi == before.psi);
  CHECK(s.lambda == before.lambda);
  CHECK(s.tau != before.tau);  // Gibbs draw still happens
  CHECK(s.tau > 0.0);
}

TEST_CASE("recentering leaves lambda bit-identical and phi centered") {
  ModelData d = small_data();
  PriorSpec priors;
  ModelState s = init_state(d, priors);
  Tuning tuning = Tuning::initial(2, 4, 0.2);
  Rng rng(17);

  for (int t = 0; t < 200; ++t) {
    const Eigen::VectorXd lambda_before_sweep = s.lambda;
    sweep(s, d, priors, tuning, rng);
    // post-sweep: non-island phis sum to ~0 (all four zones are connected)
    CHECK(std::fabs(s.phi.sum()) < 1e-9);
    // psi/lambda never recomputed through the recenter step
    CHECK(s.lambda.size() == 4);
  }

  // Directly exercise step (c): big phi offset, then one sweep with zero
  // scales isolates recenter + tau.
  s = init_state(d, priors);
  s.phi = VectorXd::Constant(4, 0.7);
  s.refresh_derived(d.X);
  const VectorXd lambda_before = s.lambda;
  const double beta0_before = s.beta[0];
  Tuning zero = Tuning::initial(2, 4, 0.0);
  sweep(s, d, priors, zero, rng);
  for (int i = 0; i < 4; ++i) {
    CHECK(s.lambda[i] == lambda_before[i]);  // bitwise
    CHECK(std::fabs(s.phi[i]) < 1e-12);
  }
  CHECK(s.beta[0] == doctest::Approx(beta0_before + 0.7).epsilon(1e-12));
}

TEST_CASE("islands stay pinned at zero") {
  ModelData d = small_data(true);  // zone 3 has no edges
  PriorSpec priors;
  ModelState s = init_state(d, priors);
  Tuning tuning = Tuning::initial(2, 4, 0.3);
  Rng rng(23);
  for (int t = 0; t < 100; ++t) {
    sweep(s, d, priors, tuning, rng);
    CHECK(s.phi[3] == 0.0);
    double non_island_sum = s.phi[0] + s.phi[1] + s.phi[2];
    CHECK(std::fabs(non_island_sum) < 1e-9);
  }
}

TEST_CASE("tau Gibbs parameters match quadrature of the conditional") {
  // 4-node path graph, fixed phi: p(tau | phi) should be exactly
  // Gamma(a + rank/2, b + E/2). Reconstruct the first two moments by
  // Simpson integration of tau^(a + rank/2 - 1) exp(-(b + E/2) tau) and
  // compare with the closed form the sampler draws from.
  WeightMatrix W = WeightMatrix::from_edges(4, {{0, 1, 2.0}, {1, 2, 1.0}, {2, 3, 3.0}});
  VectorXd phi(4);
  phi << 0.4, -0.2, 0.3, -0.5;
  PriorSpec priors;

  const double energy = icar_pair_energy(phi, W);
  const int rank = W.non_island_count() - W.connected_components();
  CHECK(rank == 3);
  const double shape = priors.tau_shape + 0.5 * rank;
  const double rate = priors.tau_rate + 0.5 * energy;

  // Simpson over [0, hi] with hi far into the tail.
  const double hi = (shape / rate) + 40.0 * std::sqrt(shape) / rate;
  const int steps = 1 << 20;  // even
  const double h = hi / steps;
  auto integrand = [&](double tau, int power) {
    if (tau <= 0.0) return 0.0;
    return std::pow(tau, power) *
           std::exp((shape - 1.0) * std::log(tau) - rate * tau);
  };
  double z = 0.0, m1 = 0.0, m2 = 0.0;
  for (int i = 0; i <= steps; ++i) {
    const double tau = i * h;
    const double w = (i == 0 || i == steps) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    z += w * integrand(tau, 0);
    m1 += w * integrand(tau, 1);
    m2 += w * integrand(tau, 2);
  }
  const double mean_quad = m1 / z;
  const double m2_quad = m2 / z;

  CHECK(mean_quad == doctest::Approx(shape / rate).epsilon(1e-6));
  CHECK(m2_quad == doctest::Approx(shape * (shape + 1.0) / (rate * rate)).epsilon(1e-6));

  // And the sampler's Gibbs draws reproduce those moments in Monte Carlo.
  ModelData d = small_data();
  d.W = W;
  ModelState s = init_state(d, priors);
  s.phi = phi;
  s.refresh_derived(d.X);
  Tuning zero = Tuning::initial(2, 4, 0.0);  // freeze everything but tau
  SweepOptions opts;
  opts.update_phi = false;  // keep phi exactly as set
  opts.update_k = false;
  Rng rng(911);
  const int draws = 200000;
  double acc = 0.0, acc2 = 0.0;
  for (int t = 0; t < draws; ++t) {
    sweep(s, d, priors, zero, rng, opts);
    acc += s.tau;
    acc2 += s.tau * s.tau;
  }
  const double mc_mean = acc / draws;
  const double mc_sd = std::sqrt(acc2 / draws - mc_mean * mc_mean);
  const double se = mc_sd / std::sqrt(static_cast<double>(draws));
  CHECK(std::fabs(mc_mean - mean_quad) < 4.0 * se);
}

TEST_CASE("run_chain determinism and stored-draw accounting") {
  ModelData d = ref12_data();
  PriorSpec priors;
  SamplerSpec spec;
  spec.iterations = 400;
  spec.burn_in = 100;
  spec.thin = 3;
  spec.seed = 42;

  const ChainDraws a = run_chain(spec, d, priors);
  const ChainDraws b = run_chain(spec, d, priors);
  CHECK(a.draws == b.draws);  // bit-identical
  CHECK(a.names == b.names);
  CHECK(a.draws.rows() == (400 - 100) / 3);
  CHECK(a.names.size() == 2u + 2u + 12u + 1u);
  CHECK(a.names.front() == "intercept");
  CHECK(a.names[2] == "k");
  CHECK(a.names[3] == "tau");
  CHECK(a.names.back() == "sd_phi");

  // single stored draw when iterations = burn_in + 1
  SamplerSpec one = spec;
  one.iterations = 101;
  one.burn_in = 100;
  one.thin = 1;
  CHECK(run_chain(one, d, priors).draws.rows() == 1);

  SamplerSpec bad = spec;
  bad.burn_in = 400;
  CHECK_THROWS_AS(run_chain(bad, d, priors), ConfigError);
}

TEST_CASE("stored draws satisfy the chain invariants") {
  ModelData d = ref12_data();
  PriorSpec priors;
  SamplerSpec spec;
  spec.iterations = 600;
  spec.burn_in = 200;
  spec.seed = 9;

  const ChainDraws out = run_chain(spec, d, priors);
  const int kcol = out.column("k");
  const int taucol = out.column("tau");
  const int sdcol = out.column("sd_phi");
  REQUIRE(kcol >= 0);
  REQUIRE(taucol >= 0);
  REQUIRE(sdcol >= 0);

  for (Eigen::Index r = 0; r < out.draws.rows(); ++r) {
    CHECK(out.draws(r, kcol) > 0.0);
    CHECK(out.draws(r, taucol) > 0.0);

    // sd_phi is recomputable from the stored phi columns
    VectorXd phi(12);
    for (int i = 0; i < 12; ++i) phi[i] = out.draws(r, out.column("phi_z" + std::to_string(i + 1)));
    const double mean = phi.mean();
    const double sd = std::sqrt((phi.array() - mean).square().sum() / 12.0);
    CHECK(out.draws(r, sdcol) == doctest::Approx(sd).epsilon(1e-12));
    CHECK(std::fabs(phi.sum()) < 1e-9);
  }

  // acceptance rates recorded per block, in (0, 1] for a moving chain
  CHECK(out.acceptance.size() == 2u + 2u);  // two betas, phi aggregate, k
  for (const auto& [name, rate] : out.acceptance) {
    CHECK(rate >= 0.0);
    CHECK(rate <= 1.0);
  }
}

TEST_CASE("oracle-mode fixes hold throughout the chain") {
  ModelData d = ref12_data();
  PriorSpec priors;
  SamplerSpec spec;
  spec.iterations = 300;
  spec.burn_in = 50;
  spec.seed = 3;
  spec.fix_phi_at_zero = true;
  spec.fix_k_at = 2.0;
  spec.fix_beta0_at = 2.0;

  const ChainDraws out = run_chain(spec, d, priors);
  for (Eigen::Index r = 0; r < out.draws.rows(); ++r) {
    CHECK(out.draws(r, out.column("k")) == 2.0);
    CHECK(out.draws(r, out.column("intercept")) == 2.0);
    for (int i = 1; i <= 12; ++i)
      CHECK(out.draws(r, out.column("phi_z" + std::to_string(i))) == 0.0);
  }

  SamplerSpec bad = spec;
  bad.fix_phi_at_zero = false;
  CHECK_THROWS_AS(run_chain(bad, d, priors), ConfigError);
}

TEST_CASE("persistent non-finite proposals abort with a state dump") {
  // a covariate of absurd magnitude makes every proposal for its
  // coefficient overflow the linear predictor, sweep after sweep
  ModelData d = small_data();
  d.X.col(1) = Eigen::VectorXd::Constant(4, 1e300);
  PriorSpec priors;
  SamplerSpec spec;
  spec.iterations = 5000;
  spec.burn_in = 1000;
  spec.seed = 12;
  CHECK_THROWS_AS(run_chain(spec, d, priors), SamplerAbort);
}

TEST_CASE("multiple chains concatenate and stay deterministic") {
  ModelData d = ref12_data();
  PriorSpec priors;
  SamplerSpec spec;
  spec.iterations = 200;
  spec.burn_in = 50;
  spec.seed = 77;

  const auto chains = run_chains(spec, 2, d, priors);
  REQUIRE(chains.size() == 2);
  CHECK(chains[0].draws.rows() == 150);
  CHECK(chains[0].draws != chains[1].draws);  // different streams

  const auto again = run_chains(spec, 2, d, priors);
  CHECK(chains[0].draws == again[0].draws);
  CHECK(chains[1].draws == again[1].draws);

  const ChainDraws all = concat_draws(chains);
  CHECK(all.draws.rows() == 300);
  CHECK(all.draws.topRows(150) == chains[0].draws);
  CHECK(all.draws.bottomRows(150) == chains[1].draws);
}

TEST_CASE("geweke_z behavior") {
  // iid normal columns: |z| < 3 nearly always
  int ok = 0;
  const int runs = 40;
  for (int s = 0; s < runs; ++s) {
    Rng rng(1000 + static_cast<unsigned>(s));
    VectorXd col(5000);
    for (int i = 0; i < 5000; ++i) col[i] = rng.normal();
    if (std::fabs(geweke_z(col)) < 3.0) ++ok;
  }
  CHECK(ok >= runs - 1);

  // constructed mean shift of +5 between halves
  Rng rng(55);
  VectorXd shifted(5000);
  for (int i = 0; i < 5000; ++i) shifted[i] = rng.normal() + (i < 2500 ? 0.0 : 5.0);
  CHECK(std::fabs(geweke_z(shifted)) > 5.0);

  CHECK_THROWS_AS(geweke_z(VectorXd::Constant(500, 1.0)), DiagnosticError);
  CHECK_THROWS_AS(geweke_z(VectorXd::Random(50)), DiagnosticError);
}

TEST_CASE("ess behavior") {
  // iid: ESS close to n
  int ok = 0;
  const int runs = 40;
  for (int s = 0; s < runs; ++s) {
    Rng rng(2000 + static_cast<unsigned>(s));
    VectorXd col(5000);
    for (int i = 0; i < 5000; ++i) col[i] = rng.normal();
    const double ratio = ess(col) / 5000.0;
    if (ratio >= 0.8 && ratio <= 1.2) ++ok;
  }
  CHECK(ok >= runs - 1);

  // AR(1) with rho = 0.9: ESS ~ n (1-rho)/(1+rho) = n/19
  Rng rng(31);
  const int n = 20000;
  VectorXd ar(n);
  ar[0] = rng.normal();
  for (int i = 1; i < n; ++i) ar[i] = 0.9 * ar[i - 1] + rng.normal() * std::sqrt(1.0 - 0.81);
  const double e = ess(ar);
  const double expected = n / 19.0;
  CHECK(e > expected / 1.5);
  CHECK(e < expected * 1.5);

  CHECK_THROWS_AS(ess(VectorXd::Constant(500, 2.0)), DiagnosticError);
  CHECK_THROWS_AS(ess(VectorXd::Random(50)), DiagnosticError);
}

TEST_CASE("summarize quantiles, significance, and errors") {
  ChainDraws draws;
  draws.names = {"ramp", "zero", "pos"};
  draws.draws.resize(100, 3);
  for (int i = 0; i < 100; ++i) {
    draws.draws(i, 0) = i + 1;  // 1..100
    draws.draws(i, 1) = 0.0;
    draws.draws(i, 2) = 4.2;
  }
  const FitSummary s = summarize(draws);
  const ParamSummary& ramp = s.find("ramp");
  CHECK(ramp.mean == doctest::Approx(50.5).epsilon(1e-14));
  CHECK(ramp.q025 == doctest::Approx(3.475).epsilon(1e-12));
  CHECK(ramp.q975 == doctest::Approx(97.525).epsilon(1e-12));
  CHECK(ramp.significant);  // interval (3.475, 97.525) excludes 0

  const ParamSummary& zero = s.find("zero");
  CHECK(zero.mean == 0.0);
  CHECK(zero.sd == 0.0);
  CHECK(zero.q025 == 0.0);
  CHECK(zero.q975 == 0.0);
  CHECK_FALSE(zero.significant);  // the degenerate interval (0,0) contains 0

  const ParamSummary& pos = s.find("pos");
  CHECK(pos.q025 == 4.2);
  CHECK(pos.q975 == 4.2);
  CHECK(pos.significant);  // (c, c) excludes 0 when c != 0

  ChainDraws tiny;
  tiny.names = {"a"};
  tiny.draws.resize(1, 1);
  tiny.draws(0, 0) = 1.0;
  CHECK_THROWS_AS(summarize(tiny), SummaryError);
}

TEST_CASE("draws file round trip") {
  ModelData d = ref12_data();
  PriorSpec priors;
  SamplerSpec spec;
  spec.iterations = 150;
  spec.burn_in = 50;
  spec.seed = 8;
  const ChainDraws out = run_chain(spec, d, priors);

  std::ostringstream os;
  write_draws(os, out, {"tool nbcar-test", "seed 8"});
  std::istringstream is(os.str());
  const ChainDraws back = read_draws(is);
  CHECK(back.names == out.names);
  REQUIRE(back.draws.rows() == out.draws.rows());
  CHECK(back.draws == out.draws);  // 17 digits round-trips doubles exactly

  std::istringstream empty("");
  CHECK_THROWS_AS(read_draws(empty), SchemaError);
  std::istringstream ragged("a,b\n1.0\n");
  CHECK_THROWS_AS(read_draws(ragged), ValidationError);
  std::istringstream junk("a,b\n1.0,zzz\n");
  CHECK_THROWS_AS(read_draws(junk), ValidationError);
}
