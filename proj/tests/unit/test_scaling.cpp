#include <cmath>

#include "cavsync/scaling.hpp"
#include "doctest.h"

using namespace cavsync;

namespace {

double excitation_after(const PhysicalParams& p, double T) {
  const GeneratorSpec gen = build_effective(p, PulseShape::square(T));
  EvolutionSpec spec;
  spec.tf = T;
  spec.rel_tol = 1e-11;
  spec.abs_tol = 1e-13;
  return expectation(gen.excitation(0), evolve(gen, gen.ground_state(), spec).final_state).real();
}

PhysicalParams coherent(char set) {
  PhysicalParams p = preset(set, 1);
  p.gamma = {1e-9};
  p.gamma_phi = {0.0};
  p.gamma_loss = {0.0};
  return p;
}

}  // namespace

TEST_CASE("quadratic fit through the origin") {
  std::vector<std::pair<int, double>> curve;
  for (int N = 1; N <= 6; ++N) curve.emplace_back(N, 3e-7 * N * (N - 1));
  FitResult fit = fit_epsilon(curve);
  CHECK(std::abs(fit.epsilon - 3e-7) < 1e-12 * 3e-7);
  CHECK(fit.valid);
  CHECK(fit.used == std::vector<int>{2, 3, 4, 5, 6});
  for (double r : fit.residuals) CHECK(std::abs(r) < 1e-18);

  const double eps = epsilon_analytic(preset('C', 1));
  curve.clear();
  for (int N = 2; N <= 5; ++N) curve.emplace_back(N, eps * N * (N - 1));
  CHECK(std::abs(fit_epsilon(curve).epsilon - eps) <= 1e-12 * eps);

  curve = {{2, 0.01}, {3, 0.03}, {4, 0.2}, {5, 0.5}};
  fit = fit_epsilon(curve);
  CHECK_FALSE(fit.valid);
  CHECK(fit.used == std::vector<int>{2, 3});
  CHECK(fit.residuals.size() == 4u);
  CHECK_THROWS(fit_epsilon({{2, 0.3}, {3, 0.5}}));
  CHECK_THROWS(fit_epsilon({{1, 0.0}, {2, 1e-6}}));
}

TEST_CASE("analytic scale factor") {
  CHECK(epsilon_analytic(preset('B', 2)) == doctest::Approx(6.5e-7).epsilon(0.01));
  CHECK(epsilon_analytic(preset('C', 2)) == doctest::Approx(1.04e-7).epsilon(0.01));
  // Within 8% of the fitted set B value.
  CHECK(std::abs(epsilon_analytic(preset('B', 2)) / 6.7e-7 - 1.0) < 0.08);
  PhysicalParams p = preset('B', 2);
  const double e0 = epsilon_analytic(p);
  for (double& g : p.g) g *= 2.0;
  CHECK(epsilon_analytic(p) / e0 == doctest::Approx(16.0).epsilon(1e-14));
  PhysicalParams q = preset('B', 2);
  q.g[1] *= 1.01;
  CHECK_THROWS(epsilon_analytic(q));

  std::vector<std::pair<PhysicalParams, double>> data;
  for (char c : {'A', 'C', 'D'}) data.emplace_back(preset(c, 1), epsilon_analytic(preset(c, 1), 1.3));
  CHECK(refit_prefactor(data) == doctest::Approx(1.3).epsilon(1e-12));
}

TEST_CASE("generation rates and labelled extrapolation") {
  CHECK(generation_rate(1.0, 0.4) == 0.4);
  CHECK_THROWS_AS(generation_rate(0.5, 0.0), ConfigError);
  const PhysicalParams c = preset('C', 1);
  const double R = c.gamma[0] / 15.0;  // pulses per microsecond, i.e. MHz
  CHECK(extrapolate_PN(0.989, 0.0, 30) == doctest::Approx(std::pow(0.989, 30)));
  CHECK(extrapolate_PN(0.9, 1e-3, 3) == doctest::Approx(0.729 * 1.006));
  CHECK(generation_rate(extrapolate_PN(0.989, 0.0, 30), R) == doctest::Approx(0.29).epsilon(0.05));
  CHECK(generation_rate(extrapolate_PN(0.989, 0.0, 100), R) == doctest::Approx(0.13).epsilon(0.08));
}

TEST_CASE("dependence curve of the counter method") {
  ScalingOptions opt;
  const std::vector<DnPoint> pts = dn_curve(preset('C', 1), 3, opt);
  REQUIRE(pts.size() == 3u);
  CHECK(pts[0].D_N == 0.0);
  CHECK(pts[0].P_N == doctest::Approx(pts[0].P_1).epsilon(1e-14));
  for (const auto& pt : pts) {
    CHECK(pt.P_N == doctest::Approx(std::pow(pt.P_1, pt.N) * (1.0 + pt.D_N)).epsilon(1e-12));
    CHECK(pt.D_N >= 0.0);
  }
  std::vector<std::pair<int, double>> curve;
  for (const auto& pt : pts) curve.emplace_back(pt.N, pt.D_N);
  CHECK(fit_epsilon(curve).epsilon == doctest::Approx(1.0e-7).epsilon(0.2));
  CHECK_THROWS_AS(dn_curve(preset('C', 1), 0), ConfigError);
}

TEST_CASE("decoupled emitters show no numerical dependence") {
  ScalingOptions opt;
  opt.decoupled = true;
  for (char c : {'B', 'D'}) {
    for (const auto& pt : dn_curve(preset(c, 1), 4, opt)) {
      CAPTURE(pt.N);
      CHECK(std::abs(pt.D_N) <= 1e-9);
    }
  }
}

TEST_CASE("disorder sampling") {
  const PhysicalParams base = preset('B', 3);
  DisorderSpec spec{DisorderTarget::G, 0.0, 10, 5};
  const PhysicalParams same = sample_disorder(base, spec, 4);
  CHECK(same.g == base.g);
  CHECK(same.gamma == base.gamma);

  spec.sigma = 0.01 * base.g[0];
  const std::size_t M = 4000;
  double sum = 0.0;
  for (std::size_t m = 0; m < M; ++m) {
    for (double g : sample_disorder(base, spec, m).g) sum += g;
  }
  const double n = 3.0 * M;
  CHECK(std::abs(sum / n - base.g[0]) <= 3.0 * spec.sigma / std::sqrt(n));
  CHECK(sample_disorder(base, spec, 7).g == sample_disorder(base, spec, 7).g);
  CHECK(sample_disorder(base, spec, 7).g != sample_disorder(base, spec, 8).g);

  DisorderSpec rates{DisorderTarget::GammaPhi, 2.0 * base.gamma[0], 1, 3};
  PhysicalParams zero_phi = base;
  zero_phi.gamma_phi = {0.0, 0.0, 0.0};
  for (std::uint64_t m = 0; m < 200; ++m) {
    for (double x : sample_disorder(zero_phi, rates, m).gamma_phi) CHECK(x >= 0.0);
  }
  PhysicalParams hopeless = base;
  hopeless.gamma = {-1e3, -1e3, -1e3};
  CHECK_THROWS_AS(sample_disorder(hopeless, DisorderSpec{DisorderTarget::Gamma, 1.0, 1, 1}, 0), NumericError);
  CHECK_THROWS_AS(sample_disorder(base, DisorderSpec{DisorderTarget::G, -1.0, 1, 1}, 0), ConfigError);

  const PhysicalParams w = sample_disorder(base, DisorderSpec{DisorderTarget::OmegaQ, 1.0, 1, 1}, 0);
  REQUIRE(w.omega_q_nominal.has_value());
  CHECK(*w.omega_q_nominal == base.nominal_omega_q());

  for (auto t : {DisorderTarget::OmegaQ, DisorderTarget::G, DisorderTarget::Gamma, DisorderTarget::GammaPhi,
                 DisorderTarget::GammaLoss}) {
    CHECK(parse_disorder_target(to_string(t)) == t);
  }
  CHECK_THROWS_AS(parse_disorder_target("kappa"), ConfigError);
}

TEST_CASE("disorder averages") {
  const PhysicalParams base = preset('C', 1);
  ScalingOptions opt;
  const DisorderAverages zero = disorder_average(base, DisorderSpec{DisorderTarget::Gamma, 0.0, 3, 1}, 2, opt);
  const PhotonStats homogeneous =
      read_stats(count_photons(build_effective(base.replicated(2), PulseShape::square(derive(base.replicated(2)).T_pi)),
                               CounterConfig{1, {}}, 15.0 / base.gamma[0], opt.counting));
  CHECK(zero.avg_PN == doctest::Approx(homogeneous.p_all_one).epsilon(1e-12));
  CHECK(zero.se_PN == doctest::Approx(0.0));

  const DisorderSpec spec{DisorderTarget::G, 0.05 * base.g[0], 8, 2};
  const DisorderAverages a = disorder_average(base, spec, 2, opt);
  REQUIRE(a.realizations.size() == 8u);
  CHECK(a.avg_DN == doctest::Approx(a.avg_PN / (a.avg_P1 * a.avg_P1) - 1.0).epsilon(1e-14));
  CHECK(a.se_PN > 0.0);
  double mean = 0.0;
  for (const auto& r : a.realizations) {
    CHECK(r.values.size() == 2u);
    mean += r.P_N / 8.0;
  }
  CHECK(mean == doctest::Approx(a.avg_PN).epsilon(1e-14));
  opt.threads = 3;
  const DisorderAverages b = disorder_average(base, spec, 2, opt);
  CHECK(b.avg_PN == a.avg_PN);
  CHECK(b.avg_DN == a.avg_DN);
  CHECK_THROWS_AS(disorder_average(base, DisorderSpec{DisorderTarget::G, 0.0, 0, 1}, 2), ConfigError);
}

TEST_CASE("perturbative excitation after a detuned or mis-coupled pulse") {
  const PhysicalParams b = coherent('B');
  const DerivedParams d = derive(b);
  const double p0 = excitation_after(b, d.T_pi);
  CHECK(p0 > 0.9999);
  for (double x : {0.025, 0.05, 0.1}) {
    PhysicalParams g = b;
    g.g = {b.g[0] * (1.0 + x)};
    PhysicalParams w = b;
    w.omega_q_nominal = b.nominal_omega_q();
    w.omega_q = {b.omega_q[0] + x * d.Omega_cm[0]};
    CAPTURE(x);
    CHECK(std::abs(excitation_after(g, d.T_pi) / p0 - pe_coupling_disorder(x)) < 3.0 * std::pow(x, 4));
    CHECK(std::abs(excitation_after(w, d.T_pi) / p0 - pe_frequency_disorder(x)) < std::pow(x, 4));
  }
}
