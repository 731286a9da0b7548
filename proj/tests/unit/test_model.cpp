#include <cmath>

#include "cavsync/counting.hpp"
#include "cavsync/integrator.hpp"
#include "cavsync/model.hpp"
#include "doctest.h"

using namespace cavsync;

namespace {

constexpr double kPi = 3.14159265358979323846;

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

PhysicalParams single(double gamma, double loss = 0.0, double phi = 0.0) {
  PhysicalParams p = preset('C', 1);
  p.gamma = {gamma};
  p.gamma_loss = {loss};
  p.gamma_phi = {phi};
  return p;
}

double excited_at(const GeneratorSpec& gen, int j, double t) {
  EvolutionSpec spec;
  spec.tf = t;
  spec.samples = {t};
  const auto s = evolve_observables(gen, gen.ground_state(), spec, {{"e", gen.excitation(j)}});
  return s.values[0][0].real();
}

}  // namespace

TEST_CASE("derived quantities follow the closed-form expressions") {
  const PhysicalParams p = preset('C', 3);
  const DerivedParams d = derive(p);
  const double k2 = 0.25 * p.kappa * p.kappa, D = p.Delta(), den = k2 + D * D;
  const double alpha = p.Omega0 / std::sqrt(den);
  CHECK(rel(d.alpha_ss_abs, alpha) < 1e-12);
  CHECK(rel(d.phi, std::atan(2.0 * D / p.kappa) - 0.5 * kPi) < 1e-12);
  for (int j = 0; j < 3; ++j) {
    const auto u = static_cast<std::size_t>(j);
    CHECK(rel(d.Omega_cm[u], alpha * p.g[u]) < 1e-12);
    CHECK(rel(d.delta_cm[u], p.g[u] * p.g[u] * D / den) < 1e-12);
    CHECK(rel(d.gamma_cm[u], p.g[u] * p.g[u] * p.kappa / den) < 1e-12);
    // Equal couplings: Lamb shift and exchange coincide.
    CHECK(rel(d.J_cm[u][(u + 1) % 3], d.delta_cm[u]) < 1e-12);
  }
  CHECK(rel(d.T_pi, kPi / (2.0 * d.Omega_cm[0])) < 1e-12);
}

TEST_CASE("common parameters give the quoted field and drive") {
  const DerivedParams d = derive(preset('A', 2));
  CHECK(d.alpha_ss_abs == doctest::Approx(194.0).epsilon(1e-3));
  CHECK(d.alpha_ss_abs * d.alpha_ss_abs == doctest::Approx(3.8e4).epsilon(0.02));
  CHECK(d.Omega_cm[0] / kTwoPi == doctest::Approx(39.0).epsilon(0.01));
}

TEST_CASE("set C cavity-mediated ratios") {
  const PhysicalParams p = preset('C', 2);
  const DerivedParams d = derive(p);
  CHECK(d.gamma_cm[0] / p.gamma[0] == doctest::Approx(3.8e-4).epsilon(0.03));
  CHECK(d.J_cm[0][1] / p.gamma[0] == doctest::Approx(4.7e-5).epsilon(0.03));
}

TEST_CASE("zero detuning removes shifts and exchange") {
  PhysicalParams p = preset('B', 2);
  p.omega_c = p.omega_d;
  const DerivedParams d = derive(p);
  CHECK(d.delta_cm[0] == 0.0);
  CHECK(d.J_cm[0][1] == 0.0);
  p.kappa = 0.0;
  CHECK_THROWS_AS(derive(p), ConfigError);
}

TEST_CASE("scaling of derived rates with drive and coupling") {
  PhysicalParams p = preset('B', 2);
  const DerivedParams d0 = derive(p);
  for (auto& g : p.g) g *= 2.0;
  const DerivedParams d1 = derive(p);
  CHECK(rel(d1.gamma_cm[0], 4.0 * d0.gamma_cm[0]) < 1e-14);
  CHECK(rel(d1.J_cm[0][1], 4.0 * d0.J_cm[0][1]) < 1e-14);
  p = preset('B', 2);
  p.Omega0 *= 3.0;
  CHECK(rel(derive(p).Omega_cm[0], 3.0 * d0.Omega_cm[0]) < 1e-14);
}

TEST_CASE("regime diagnostics") {
  const RegimeReport c = validate_regime(preset('C', 2));
  CHECK(c.all_pass());
  REQUIRE(c.checks.size() == 6);
  const double want[] = {2.6e-2, 4.7e-5, 3.8e-4, 5.0e-3, 1.0e-2};
  for (int i = 0; i < 5; ++i) CHECK(c.checks[static_cast<std::size_t>(i)].value == doctest::Approx(want[i]).epsilon(0.03));
  CHECK(c.checks[5].value < 1e-12);

  const RegimeReport d = validate_regime(preset('D', 2));
  CHECK(d.checks[0].value == doctest::Approx(7.7e-2).epsilon(0.02));
  CHECK(d.checks[0].pass);

  PhysicalParams p = preset('C', 2);
  const double om = derive(p).Omega_cm[0];
  p.gamma.assign(2, om);
  const RegimeReport w = validate_regime(p);
  CHECK_FALSE(w.checks[0].pass);
  CHECK_FALSE(w.all_pass());
}

TEST_CASE("parameter validation names the field") {
  PhysicalParams p = preset('C', 2);
  p.gamma_phi = {0.1, -0.1};
  try {
    p.validate();
    FAIL("expected a configuration error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("gamma_phi") != std::string::npos);
  }
  p = preset('C', 2);
  p.g.resize(1);
  CHECK_THROWS_AS(p.validate(), ConfigError);
}

TEST_CASE("pulse envelopes") {
  const PulseShape sq = PulseShape::square(2.0);
  CHECK(sq(-1e-9) == 0.0);
  CHECK(sq(0.0) == 1.0);
  CHECK(sq(1.999) == 1.0);
  CHECK(sq(2.0) == 0.0);
  const PulseShape sm = PulseShape::smooth(2.0, 0.1);
  for (double t : {0.05, 0.5, 1.0, 2.0, 2.3}) {
    const double want = 0.5 * std::tanh(t / 0.1) * (2.0 - std::tanh(20.0) - std::tanh((t - 2.0) / 0.1));
    CHECK(sm(t) == doctest::Approx(want).epsilon(1e-15));
  }
  CHECK(sm(sm.support_end()) < 1e-12);
  const PulseSchedule train(sq, 3, 10.0);
  CHECK(train(10.5) == 1.0);
  CHECK(train(12.5) == 0.0);
  CHECK(train(31.0) == 0.0);
  CHECK(train.breakpoints() == std::vector<double>{0.0, 2.0, 10.0, 12.0, 20.0, 22.0});
}

TEST_CASE("classical field matches the closed-form solution") {
  const PhysicalParams p = preset('C', 1);
  const double T = 0.02;
  std::vector<double> ts;
  for (int i = 0; i <= 40; ++i) ts.push_back(0.001 * i);
  const auto a = integrate_alpha(p, PulseShape::square(T), ts);
  double worst = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    worst = std::max(worst, std::abs(a[i] - alpha_closed_form(p, T, ts[i])));
  }
  CHECK(worst < 1e-6 * 194.0);
  // Mean field magnitude sits at the steady-state value once transients decay.
  double mean_abs = 0.0;
  for (int i = 10; i <= 20; ++i) mean_abs += std::abs(a[static_cast<std::size_t>(i)]);
  CHECK(mean_abs / 11.0 == doctest::Approx(derive(p).alpha_ss_abs).epsilon(0.02));
  // Free decay after switch-off with rate kappa/2.
  const double r = std::abs(a[22]) / std::abs(a[21]);
  CHECK(r == doctest::Approx(std::exp(-0.5 * p.kappa * 0.001)).epsilon(1e-6));

  PhysicalParams off = p;
  off.Omega0 = 0.0;
  for (const auto& v : integrate_alpha(off, PulseShape::square(T), ts)) CHECK(std::abs(v) == 0.0);
}

TEST_CASE("effective generator channel structure") {
  for (int n : {1, 2, 3}) {
    const GeneratorSpec gen = build_effective(preset('C', n), PulseShape::square(0.01));
    CHECK(gen.jumps.size() == static_cast<std::size_t>(3 * n + 1));
    CHECK(gen.layout.total_dim() == (1 << n));
    CHECK(gen.jumps.back().kind == ChannelKind::Collective);
    CHECK(gen.channel_index(ChannelKind::Dephasing, n - 1) == 3 * n - 1);
  }
}

TEST_CASE("exact pi pulse on an isolated resonant qubit") {
  PhysicalParams p = single(0.0);
  const GeneratorSpec gen = build_effective(p, PulseShape::square(derive(p).T_pi), EffectiveOptions{true});
  CHECK(excited_at(gen, 0, derive(p).T_pi) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("an uncoupled qubit is decoupled from the dynamics") {
  PhysicalParams p = preset('C', 2);
  p.g[1] = 0.0;
  const double T = kPi / (2.0 * derive(p).Omega_cm[0]);
  const GeneratorSpec gen = build_effective(p, PulseShape::square(T));
  CHECK(excited_at(gen, 1, 0.5) < 1e-14);
  CHECK(excited_at(gen, 0, T) > 0.95);
}

TEST_CASE("full displaced model structure and vacuum for zero coupling") {
  PhysicalParams p = preset('C', 2);
  const GeneratorSpec gen = build_full_displaced(p, PulseShape::square(derive(p).T_pi), 6);
  CHECK(gen.layout.dims() == std::vector<int>{6, 2, 2});
  CHECK(gen.jumps.size() == 7u);
  CHECK(gen.jumps.back().kind == ChannelKind::Cavity);
  CHECK_THROWS_AS(build_full_displaced(p, PulseShape::square(0.01), 1), ConfigError);

  p.g.assign(2, 0.0);
  const GeneratorSpec z = build_full_displaced(p, PulseShape::square(0.01), 4);
  const Matrix nfl = embed_operator(Matrix(local::annihilation(4).adjoint() * local::annihilation(4)), 0, z.layout)
                         .entries();
  EvolutionSpec spec;
  spec.tf = 0.05;
  spec.samples = {0.01, 0.05};
  const auto s = evolve_observables(z, z.ground_state(), spec,
                                    {{"n", ComplexOperator(z.layout, nfl, true)}, {"e0", z.excitation(0)}});
  for (const auto& v : s.values) {
    for (const auto& x : v) CHECK(std::abs(x) < 1e-14);
  }
}

TEST_CASE("fluctuation mode stays near vacuum and the cutoff is converged") {
  const PhysicalParams p = preset('C', 2);
  const PulseShape pulse = PulseShape::square(derive(p).T_pi);
  const double t_f = 3.0 * derive(p).T_pi;
  auto run = [&](int cutoff) {
    const GeneratorSpec gen = build_full_displaced(p, pulse, cutoff);
    EvolutionSpec spec;
    spec.tf = t_f;
    spec.samples = linspace(0.0, t_f, 31);
    const Matrix top = embed_operator(local::projector(cutoff, cutoff - 1), 0, gen.layout).entries();
    return evolve_observables(gen, gen.ground_state(), spec,
                              {{"top", ComplexOperator(gen.layout, top, true)}, {"e0", gen.excitation(0)}});
  };
  const auto s6 = run(6), s8 = run(8);
  double top = 0.0, shift = 0.0;
  for (std::size_t i = 0; i < s6.times.size(); ++i) {
    top = std::max(top, s6.values[0][i].real());
    shift = std::max(shift, std::abs(s6.values[1][i] - s8.values[1][i]));
  }
  CHECK(top < 1e-6);
  CHECK(shift < 1e-8);
}

TEST_CASE("full and effective single-qubit populations agree for every preset") {
  for (char c : {'A', 'B', 'C', 'D'}) {
    const PhysicalParams p = preset(c, 1);
    const PulseShape pulse = PulseShape::square(derive(p).T_pi);
    const double t_f = 15.0 / p.gamma[0];
    const auto ts = linspace(0.0, t_f, 301);
    EvolutionSpec spec;
    spec.tf = t_f;
    spec.samples = ts;
    const GeneratorSpec eff = build_effective(p, pulse), full = build_full_displaced(p, pulse, 6);
    const auto se = evolve_observables(eff, eff.ground_state(), spec, {{"e", eff.excitation(0)}});
    const auto sf = evolve_observables(full, full.ground_state(), spec, {{"e", full.excitation(0)}});
    double worst = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
      worst = std::max(worst, std::abs(se.values[0][i].real() - sf.values[0][i].real()));
    }
    CAPTURE(c);
    CHECK(worst < 1e-2);
  }
}

TEST_CASE("lab frame without the rotating-wave approximation agrees with the rotating frame") {
  const PhysicalParams p = preset('C', 1);
  const double T = derive(p).T_pi;
  const double t_f = 4.0 * T;
  const GeneratorSpec rwa = build_full_displaced(p, PulseShape::square(T), 4);
  const GeneratorSpec lab = build_full_displaced(p, PulseShape::square(T), 4, FullFrame::LabNonRWA, t_f);
  EvolutionSpec spec;
  spec.tf = t_f;
  spec.samples = linspace(0.0, t_f, 41);
  const auto a = evolve_observables(rwa, rwa.ground_state(), spec, {{"e", rwa.excitation(0)}});
  const auto b = evolve_observables(lab, lab.ground_state(), spec, {{"e", lab.excitation(0)}});
  // The lab-frame drive follows the ringing-up cavity field, so compare once the pulse is over.
  double worst = 0.0;
  for (std::size_t i = 0; i < a.times.size(); ++i) {
    if (a.times[i] > 1.2 * T) worst = std::max(worst, std::abs(a.values[0][i] - b.values[0][i]));
  }
  CHECK(worst < 1e-2);
  CHECK_THROWS_AS(build_full_displaced(preset('C', 3), PulseShape::square(T), 4, FullFrame::LabNonRWA, t_f),
                  ConfigError);
}

TEST_CASE("optimised smooth pulse reproduces the square-pulse efficiency") {
  const PhysicalParams p = preset('C', 1);
  const double T_pi = derive(p).T_pi;
  const PulseShape smooth = optimize_smooth_pulse(p, 0.1 * T_pi);
  CHECK(smooth.kind == PulseKind::SmoothTanh);
  const double t_f = 15.0 / p.gamma[0];
  auto p1 = [&](const PulseShape& s) {
    return read_stats(count_photons(build_effective(p, s), CounterConfig{2, {}}, t_f)).p_n[0][1];
  };
  const double sq = p1(PulseShape::square(T_pi)), sm = p1(smooth);
  CHECK(std::abs(sm - sq) / sq < 0.01);
}
