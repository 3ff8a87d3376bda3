#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "indirect_testutil.hpp"
#include "ratefield/sigma.hpp"
#include "ratefield/synth.hpp"

using namespace ratefield;

TEST_CASE("banded logdet equals brute force on small posterior Hessians") {
  Rng rng(RngSeed{60});
  for (Index steps = 2; steps <= 11; ++steps) {
    const TimeGrid g = make_grid(1.0, steps);
    Eigen::VectorXd s(g.nodes());
    for (Index j = 0; j < g.nodes(); ++j) s[j] = 0.5 * rng.normal();
    Eigen::VectorXd t(3);
    t << 0.2, 0.5, 0.9;
    const SymTridiagd h =
        potential_hessian(LogRatePath(g, s), SpikeTrain(t), ModelParams{0.3});
    const double ld = h.factorize().log_determinant();
    const double brute = std::log(h.dense().determinant());
    CHECK(ld == doctest::Approx(brute).epsilon(1e-10));
  }
}

TEST_CASE("evidence scan is finite and smooth on synthetic data") {
  const TimeGrid g = make_grid(100.0, 1000);
  const LogRatePath truth = simulate_gbm_log(0.0, 0.1, g, RngSeed{61});
  const SpikeTrain spikes = simulate_spikes(truth, RngSeed{62});
  REQUIRE(spikes.count() > 10);

  const Eigen::VectorXd grid_s = default_sigma_grid();
  const SigmaScan scan = sigma_posterior(grid_s, spikes, g);
  CHECK(scan.log_evidence.allFinite());
  CHECK(scan.weights.sum() == doctest::Approx(1.0).epsilon(1e-12));
  // log evidence varies smoothly: bounded step-to-step change relative to range
  const double range = scan.log_evidence.maxCoeff() - scan.log_evidence.minCoeff();
  for (Index k = 1; k < scan.log_evidence.size(); ++k)
    CHECK(std::abs(scan.log_evidence[k] - scan.log_evidence[k - 1]) < 0.8 * range + 10.0);
}

TEST_CASE("single-point and duplicate grids") {
  const TimeGrid g = make_grid(50.0, 500);
  const LogRatePath truth(g, Eigen::VectorXd::Zero(g.nodes()));
  const SpikeTrain spikes = simulate_spikes(truth, RngSeed{63});

  Eigen::VectorXd one(1);
  one << 0.1;
  const SigmaScan s1 = sigma_posterior(one, spikes, g);
  CHECK(s1.weights[0] == doctest::Approx(1.0));
  CHECK(s1.map_sigma() == doctest::Approx(0.1));

  Eigen::VectorXd two(2);
  two << 0.1, 0.1;
  const SigmaScan s2 = sigma_posterior(two, spikes, g);
  CHECK(s2.weights[0] == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(s2.weights[1] == doctest::Approx(0.5).epsilon(1e-10));
}

TEST_CASE("sigma recovery on one seeded dataset") {
  const TimeGrid g = make_grid(200.0, 2000);
  const LogRatePath truth = simulate_gbm_log(0.0, 0.1, g, RngSeed{64});
  const SpikeTrain spikes = simulate_spikes(truth, RngSeed{65});
  const SigmaScan scan = sigma_posterior(default_sigma_grid(), spikes, g);
  const auto [lo, hi] = scan.credible_interval(0.95);
  CHECK(lo <= 0.1);
  CHECK(hi >= 0.1);
  CHECK(scan.map_sigma() > 0.02);
  CHECK(scan.map_sigma() < 0.5);
}

TEST_CASE("indirect evidence is finite on a small dataset") {
  const double T = 10.0;
  const TimeGrid g = make_grid(T, 80);
  Rng rng(RngSeed{66});
  std::vector<MentionRecord> recs;
  for (int k = 0; k < 60; ++k) {
    const double i = rng.uniform() * 0.7 * T;
    recs.push_back({i, testutil::sample_last_mention(rng, i, 1.0, 2.0, T)});
  }
  const IndirectData data(recs, Eigen::VectorXd::Constant(g.nodes(), 2.0), g);
  const double le1 = log_evidence_indirect(0.1, data);
  const double le2 = log_evidence_indirect(0.3, data);
  CHECK(std::isfinite(le1));
  CHECK(std::isfinite(le2));
}

TEST_CASE("mixed posterior: degenerate and balanced mixtures") {
  // hand-built sample sets with known Gaussian marginals
  const auto make_set = [](double mean, unsigned seed) {
    SampleSet s;
    s.tracked_nodes = {0};
    s.n_chains = 1;
    s.samples_per_chain = 20000;
    s.marginals.resize(20000, 1);
    Rng rng(RngSeed{seed});
    for (Index k = 0; k < 20000; ++k) s.marginals(k, 0) = mean + 0.3 * rng.normal();
    s.ess = Eigen::VectorXd::Constant(1, 20000);
    s.exp_x_mean = Eigen::VectorXd::Zero(1);
    s.exp_x_se = Eigen::VectorXd::Zero(1);
    return s;
  };
  const std::vector<SampleSet> sets = {make_set(-1.0, 70), make_set(2.0, 71)};

  SigmaScan scan;
  scan.sigma_grid = Eigen::Vector2d(0.1, 0.2);
  scan.log_evidence = Eigen::Vector2d(0.0, 0.0);

  scan.weights = Eigen::Vector2d(1.0, 0.0);
  const SampleSet degenerate = mixed_posterior(scan, sets);
  CHECK(degenerate.marginals.col(0).mean() == doctest::Approx(-1.0).epsilon(0.02));

  scan.weights = Eigen::Vector2d(0.25, 0.75);
  const SampleSet mixed = mixed_posterior(scan, sets);
  CHECK(mixed.marginals.col(0).mean() ==
        doctest::Approx(0.25 * -1.0 + 0.75 * 2.0).epsilon(0.05));

  // equal weights over identical sets leave the statistics unchanged
  const std::vector<SampleSet> same = {make_set(0.5, 72), make_set(0.5, 72)};
  scan.weights = Eigen::Vector2d(0.5, 0.5);
  const SampleSet unchanged = mixed_posterior(scan, same);
  CHECK(unchanged.marginals.col(0).mean() == doctest::Approx(0.5).epsilon(0.02));

  const std::vector<SampleSet> wrong = {make_set(0.0, 73)};
  CHECK_THROWS_AS(mixed_posterior(scan, wrong), InvalidArgument);
}
