#include <algorithm>
#include <cmath>
#include <sstream>

#include "cavsync/counting.hpp"
#include "cavsync/trajectories.hpp"
#include "doctest.h"

using namespace cavsync;

namespace {

GeneratorSpec pi_generator(const PhysicalParams& p) { return build_effective(p, PulseShape::square(derive(p).T_pi)); }

// Asymptotic Kolmogorov tail probability.
double kolmogorov_q(double lambda) {
  double q = 0.0;
  for (int k = 1; k <= 100; ++k) q += 2.0 * ((k % 2) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
  return std::clamp(q, 0.0, 1.0);
}

bool within(const Estimate& e, double exact, double n_sigma) {
  return std::abs(e.value - exact) <= n_sigma * e.stderr_ + 1e-12;
}

}  // namespace

TEST_CASE("waiting time of an excited emitter is exponential") {
  PhysicalParams p = preset('C', 1);
  p.Omega0 = 0.0;
  p.gamma_loss = {0.0};
  p.gamma_phi = {0.0};
  const double gamma = p.gamma[0];
  TrajectoryConfig cfg;
  cfg.M = 10000;
  cfg.seed = 7;
  cfg.t_f = 25.0 / gamma;
  cfg.initial_levels = {0};
  // Keep the radiative channel alone; the cavity-mediated decay would add to the rate.
  GeneratorSpec gen = build_effective(p, PulseShape::square(0.0));
  std::erase_if(gen.jumps, [](const JumpChannel& c) { return c.kind != ChannelKind::Antenna; });
  const EnsembleResult res = run_ensemble(gen, cfg);
  std::vector<double> t;
  for (const auto& traj : res.log.trajectories) {
    REQUIRE(traj.size() == 1u);
    CHECK(res.log.kinds[static_cast<std::size_t>(traj[0].channel)] == ChannelKind::Antenna);
    t.push_back(traj[0].time);
  }
  std::sort(t.begin(), t.end());
  const double n = static_cast<double>(t.size());
  double d = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double F = 1.0 - std::exp(-gamma * t[i]);
    d = std::max({d, std::abs(F - i / n), std::abs((i + 1) / n - F)});
  }
  const double sn = std::sqrt(n);
  CHECK(kolmogorov_q((sn + 0.12 + 0.11 / sn) * d) > 0.01);
}

TEST_CASE("trajectory estimates agree with the counter method") {
  for (int N : {1, 2}) {
    const PhysicalParams p = preset('C', N);
    const GeneratorSpec gen = pi_generator(p);
    const double t_f = 15.0 / p.gamma[0];
    const PhotonStats exact = read_stats(count_photons(gen, CounterConfig{2, {}}, t_f));
    TrajectoryConfig cfg;
    cfg.M = 3000;
    cfg.seed = 11;
    cfg.t_f = t_f;
    const EnsembleResult res = run_ensemble(gen, cfg);
    CAPTURE(N);
    for (std::size_t j = 0; j < static_cast<std::size_t>(N); ++j) {
      for (std::size_t n = 0; n < 3; ++n) CHECK(within(res.stats.p_n[j][n], exact.p_n[j][n], 4.0));
    }
    CHECK(within(res.stats.p_all, exact.p_all_one, 4.0));
  }
}

TEST_CASE("two-emitter joint efficiency matches the tabulated value") {
  const PhysicalParams p = preset('C', 2);
  TrajectoryConfig cfg;
  cfg.M = 6000;
  cfg.seed = 3;
  cfg.t_f = 15.0 / p.gamma[0];
  const Estimate e = run_ensemble(pi_generator(p), cfg).stats.p_all;
  CHECK(within(e, 0.979, 3.0));
}

TEST_CASE("ensemble excitation follows the master equation") {
  const PhysicalParams p = preset('D', 2);
  const GeneratorSpec gen = pi_generator(p);
  const double t_f = 4.0 / p.gamma[0];
  TrajectoryConfig cfg;
  cfg.M = 2000;
  cfg.t_f = t_f;
  cfg.sample_times = linspace(0.0, t_f, 25);
  const EnsembleResult res = run_ensemble(gen, cfg);
  EvolutionSpec spec;
  spec.tf = t_f;
  spec.samples = cfg.sample_times;
  spec.rel_tol = 1e-10;
  spec.abs_tol = 1e-12;
  const EvolutionResult me = evolve(gen, gen.ground_state(), spec);
  for (int j = 0; j < 2; ++j) {
    const ComplexOperator ex = gen.excitation(j);
    for (std::size_t s = 0; s < cfg.sample_times.size(); ++s) {
      const double want = expectation(ex, me.snapshots[s]).real();
      CAPTURE(s);
      CHECK(within(res.stats.excited[static_cast<std::size_t>(j)][s], want, 4.0));
    }
  }
}

TEST_CASE("no dissipation means no jumps") {
  GeneratorSpec gen = pi_generator(preset('A', 2));
  gen.jumps.clear();
  TrajectoryConfig cfg;
  cfg.M = 20;
  cfg.t_f = 1.0;
  cfg.sample_times = {0.0, 0.5, 1.0};
  const EnsembleResult res = run_ensemble(gen, cfg);
  for (const auto& traj : res.log.trajectories) CHECK(traj.empty());
  for (const auto& per_qubit : res.stats.excited) {
    for (const auto& e : per_qubit) CHECK(e.stderr_ < 1e-12);
  }
  CHECK(res.stats.p_all.value == 0.0);
}

TEST_CASE("logs are identical for any thread count") {
  const PhysicalParams p = preset('D', 2);
  const GeneratorSpec gen = pi_generator(p);
  TrajectoryConfig cfg;
  cfg.M = 200;
  cfg.seed = 42;
  cfg.t_f = 15.0 / p.gamma[0];
  const EnsembleResult a = run_ensemble(gen, cfg);
  cfg.threads = 3;
  const EnsembleResult b = run_ensemble(gen, cfg);
  std::ostringstream sa, sb;
  a.log.write_csv(sa);
  b.log.write_csv(sb);
  CHECK(sa.str() == sb.str());
  REQUIRE(a.log.trajectories.size() == b.log.trajectories.size());
  for (std::size_t m = 0; m < a.log.trajectories.size(); ++m) {
    REQUIRE(a.log.trajectories[m].size() == b.log.trajectories[m].size());
    for (std::size_t k = 0; k < a.log.trajectories[m].size(); ++k) {
      CHECK(a.log.trajectories[m][k].time == b.log.trajectories[m][k].time);
      CHECK(a.log.trajectories[m][k].channel == b.log.trajectories[m][k].channel);
    }
  }
  cfg.seed = 43;
  std::ostringstream sc;
  run_ensemble(gen, cfg).log.write_csv(sc);
  CHECK(sc.str() != sa.str());
}

TEST_CASE("log structure and dephasing events") {
  PhysicalParams p = preset('D', 2);
  p.gamma_phi = {0.3 * p.gamma[0], 0.3 * p.gamma[0]};
  const GeneratorSpec gen = pi_generator(p);
  TrajectoryConfig cfg;
  cfg.M = 300;
  cfg.t_f = 15.0 / p.gamma[0];
  const EnsembleResult res = run_ensemble(gen, cfg);
  CHECK(res.log.labels.size() == 7u);
  std::size_t dephasing = 0;
  for (const auto& traj : res.log.trajectories) {
    for (std::size_t k = 0; k < traj.size(); ++k) {
      CHECK(traj[k].channel >= 0);
      CHECK(traj[k].channel < 7);
      if (k > 0) CHECK(traj[k].time > traj[k - 1].time);
      dephasing += res.log.kinds[static_cast<std::size_t>(traj[k].channel)] == ChannelKind::Dephasing;
    }
  }
  CHECK(dephasing > 0u);
  const JumpLog stripped = without_dephasing(res.log);
  const Estimate a = estimate_PN(res.log), b = estimate_PN(stripped);
  CHECK(a.value == b.value);
  CHECK(a.stderr_ == b.stderr_);
  for (std::size_t m = 0; m < stripped.trajectories.size(); ++m) {
    CHECK(stripped.antenna_counts(m) == res.log.antenna_counts(m));
    for (const auto& ev : stripped.trajectories[m]) {
      CHECK(stripped.kinds[static_cast<std::size_t>(ev.channel)] != ChannelKind::Dephasing);
    }
  }
}

TEST_CASE("binomial estimates") {
  const Estimate e = binomial_estimate(3, 4);
  CHECK(e.value == doctest::Approx(0.75));
  CHECK(e.stderr_ == doctest::Approx(std::sqrt(0.75 * 0.25 / 4.0)));
  CHECK(binomial_estimate(5, 5).stderr_ == 0.0);
  CHECK_THROWS(binomial_estimate(0, 0));

  JumpLog log;
  log.n_qubits = 2;
  log.kinds = {ChannelKind::Antenna, ChannelKind::Antenna, ChannelKind::Loss};
  log.qubits = {0, 1, 0};
  log.labels = {"a0", "a1", "l0"};
  log.trajectories = {{{0.1, 0}, {0.2, 2}, {0.3, 1}}, {{0.1, 1}, {0.2, 0}}};
  CHECK(estimate_PN(log).value == 1.0);
  log.trajectories.push_back({{0.1, 0}});
  CHECK(estimate_PN(log).value == doctest::Approx(2.0 / 3.0));
  CHECK_THROWS(estimate_PN(JumpLog{}));
}

TEST_CASE("single trajectory and invalid configurations") {
  const PhysicalParams p = preset('C', 1);
  const GeneratorSpec gen = pi_generator(p);
  TrajectoryConfig cfg;
  cfg.M = 1;
  cfg.t_f = 1.0;
  const EnsembleResult res = run_ensemble(gen, cfg);
  CHECK(res.log.trajectories.size() == 1u);
  CHECK(std::isfinite(res.stats.p_all.stderr_));
  CHECK(res.stats.p_all.stderr_ == 0.0);

  TrajectoryConfig bad = cfg;
  bad.M = 0;
  CHECK_THROWS_AS(run_ensemble(gen, bad), ConfigError);
  bad = cfg;
  bad.t_f = 0.0;
  CHECK_THROWS_AS(run_ensemble(gen, bad), ConfigError);
  bad = cfg;
  bad.sample_times = {0.5, 0.1};
  CHECK_THROWS_AS(run_ensemble(gen, bad), ConfigError);
  bad = cfg;
  bad.sample_times = {0.5, 2.0};
  CHECK_THROWS_AS(run_ensemble(gen, bad), ConfigError);
  bad = cfg;
  bad.initial_levels = {0, 0};
  CHECK_THROWS_AS(run_ensemble(gen, bad), DimensionError);
  CHECK_THROWS(run_ensemble(build_full_displaced(p, PulseShape::square(1.0)), cfg));
}
