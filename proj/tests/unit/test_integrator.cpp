#include <cmath>
#include <random>

#include <unsupported/Eigen/MatrixFunctions>

#include "cavsync/integrator.hpp"
#include "doctest.h"
#include "helpers.hpp"

using namespace cavsync;

namespace {

GeneratorSpec qubit(double omega, double gamma, double gamma_phi = 0.0) {
  GeneratorSpec gen;
  gen.layout = HilbertLayout({2});
  gen.n_qubits = 1;
  gen.h_static = to_sparse(omega * local::sigma_x());
  if (gamma > 0.0) gen.jumps.push_back({ChannelKind::Antenna, 0, "antenna_0", to_sparse(std::sqrt(gamma) * local::sigma_minus())});
  if (gamma_phi > 0.0) {
    gen.jumps.push_back({ChannelKind::Dephasing, 0, "dephasing_0",
                         to_sparse(std::sqrt(2.0 * gamma_phi) * local::excited_projector())});
  }
  return gen;
}

DensityState excited() {
  const int e[] = {0};
  return DensityState::basis(HilbertLayout({2}), e);
}

}  // namespace

TEST_CASE("exponential decay") {
  const double gamma = 2.3;
  const GeneratorSpec gen = qubit(0.0, gamma);
  EvolutionSpec spec;
  spec.tf = 3.0;
  spec.samples = linspace(0.0, 3.0, 31);
  const auto s = evolve_observables(gen, excited(), spec, {{"e", gen.excitation(0)}, {"1", identity(gen.layout)}});
  for (std::size_t i = 0; i < s.times.size(); ++i) {
    CHECK(std::abs(s.values[0][i].real() - std::exp(-gamma * s.times[i])) < 1e-8);
    CHECK(std::abs(s.values[1][i] - 1.0) < 1e-12);
  }
}

TEST_CASE("coherent Rabi oscillation") {
  const double omega = 1.7;
  const GeneratorSpec gen = qubit(omega, 0.0);
  EvolutionSpec spec;
  spec.tf = 5.0;
  spec.samples = linspace(0.0, 5.0, 51);
  // Global error over several periods sits slightly above the default local tolerance.
  spec.rel_tol = 1e-10;
  spec.abs_tol = 1e-12;
  const auto s = evolve_observables(gen, gen.ground_state(), spec, {{"e", gen.excitation(0)}});
  for (std::size_t i = 0; i < s.times.size(); ++i) {
    const double want = std::pow(std::sin(omega * s.times[i]), 2);
    CHECK(std::abs(s.values[0][i].real() - want) < 1e-8);
  }
}

TEST_CASE("empty generator is the identity map") {
  GeneratorSpec gen;
  gen.layout = HilbertLayout({2, 3});
  gen.n_qubits = 1;
  gen.h_static = SparseOp(6, 6);
  std::mt19937_64 rng(1);
  const DensityState rho(gen.layout, testing::random_density(6, rng));
  EvolutionSpec spec;
  spec.tf = 10.0;
  const auto r = evolve(gen, rho, spec);
  CHECK((r.final_state.rho() - rho.rho()).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("time-independent evolution matches the matrix exponential") {
  std::mt19937_64 rng(4);
  GeneratorSpec gen;
  gen.layout = HilbertLayout({2, 2});
  gen.n_qubits = 2;
  const Matrix h = testing::random_hermitian(4, rng);
  const Matrix c = 0.5 * testing::random_matrix(4, rng);
  gen.h_static = to_sparse(h);
  gen.jumps.push_back({ChannelKind::Loss, 0, "loss_0", to_sparse(c)});
  const Matrix rho0 = testing::random_density(4, rng);
  const double t = 0.8;
  EvolutionSpec spec;
  spec.tf = t;
  const auto r = evolve(gen, DensityState(gen.layout, rho0), spec);
  const Matrix l = testing::liouvillian(h, {c});
  const Matrix want = testing::vec_apply(Matrix((l * t).exp()), rho0);
  CHECK((r.final_state.rho() - want).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("kernel application equals the reference right-hand side") {
  const PhysicalParams p = preset('D', 3);
  const GeneratorSpec gen = build_effective(p, PulseShape::square(derive(p).T_pi));
  const LindbladKernel k(gen);
  std::mt19937_64 rng(9);
  const Matrix rho = testing::random_density(8, rng);
  for (double t : {0.0, 0.5 * derive(p).T_pi, 2.0 * derive(p).T_pi}) {
    Matrix out(8, 8);
    k.apply(t, rho, out, true);
    const auto jumps = gen.jump_operators();
    const Matrix want = lindblad_rhs(gen.hamiltonian_at(t), jumps, DensityState(gen.layout, rho));
    CHECK((out - want).norm() < 1e-12 * want.norm());
    // General path for a non-Hermitian argument.
    const Matrix x = testing::random_matrix(8, rng);
    Matrix got(8, 8);
    k.apply(t, x, got, false);
    Matrix ref = Matrix::Zero(8, 8);
    const Matrix ht = gen.hamiltonian_at(t).entries();
    ref = -kI * (ht * x - x * ht);
    for (const auto& c : jumps) {
      const Matrix& cm = c.entries();
      ref += cm * x * cm.adjoint() - 0.5 * (cm.adjoint() * cm * x + x * cm.adjoint() * cm);
    }
    CHECK((got - ref).norm() < 1e-12 * ref.norm());
  }
}

TEST_CASE("trace and hermiticity are preserved on a driven multi-qubit run") {
  const PhysicalParams p = preset('C', 3);
  const GeneratorSpec gen = build_effective(p, PulseShape::square(derive(p).T_pi));
  EvolutionSpec spec;
  spec.tf = 15.0 / p.gamma[0];
  spec.samples = linspace(0.0, spec.tf, 16);
  const auto r = evolve(gen, gen.ground_state(), spec);
  for (const auto& s : r.snapshots) {
    CHECK(std::abs(s.trace() - 1.0) <= 1e-8);
    CHECK(s.hermiticity_error() <= 1e-8);
  }
  CHECK(r.final_state.min_eigenvalue() >= -1e-7);
}

TEST_CASE("tightening the tolerance changes the answer by less than ten looser tolerances") {
  const PhysicalParams p = preset('B', 2);
  const GeneratorSpec gen = build_effective(p, PulseShape::square(derive(p).T_pi));
  EvolutionSpec a;
  a.tf = 5.0 / p.gamma[0];
  EvolutionSpec b = a;
  b.rel_tol *= 0.5;
  b.abs_tol *= 0.5;
  const Matrix ra = evolve(gen, gen.ground_state(), a).final_state.rho();
  const Matrix rb = evolve(gen, gen.ground_state(), b).final_state.rho();
  CHECK((ra - rb).cwiseAbs().maxCoeff() < 10.0 * a.rel_tol);
}

TEST_CASE("square-pulse switch times are hit exactly") {
  // Drive only during [0, T): population afterwards is frozen at sin^2(Omega T) without decay.
  const double omega = 3.0, T = 0.37;
  GeneratorSpec gen;
  gen.layout = HilbertLayout({2});
  gen.n_qubits = 1;
  gen.h_static = SparseOp(2, 2);
  const PulseShape pulse = PulseShape::square(T);
  gen.h_driven.push_back({to_sparse(omega * local::sigma_x()), [pulse](double t) { return pulse(t); }});
  gen.breakpoints = {0.0, T};
  EvolutionSpec spec;
  spec.tf = 1.0;
  spec.samples = {T, 0.5, 1.0};
  const auto s = evolve_observables(gen, gen.ground_state(), spec, {{"e", gen.excitation(0)}});
  for (const auto& v : s.values[0]) CHECK(std::abs(v.real() - std::pow(std::sin(omega * T), 2)) < 1e-9);
}

TEST_CASE("dense output of the stepper") {
  Dopri5 d([](double, const Vector& y, Vector& dy) { dy = cplx(-0.5, 3.0) * y; }, OdeOptions{1e-10, 1e-12});
  Vector y0(1);
  y0(0) = 1.0;
  d.start(0.0, 2.0, y0);
  double worst = 0.0;
  Vector out(1);
  while (d.step()) {
    for (int k = 1; k < 4; ++k) {
      const double t = d.t_prev() + 0.25 * k * (d.t() - d.t_prev());
      d.dense(t, out);
      worst = std::max(worst, std::abs(out(0) - std::exp(cplx(-0.5, 3.0) * t)));
    }
  }
  CHECK(d.t() == 2.0);
  CHECK(std::abs(d.y()(0) - std::exp(cplx(-1.0, 6.0))) < 1e-9);
  CHECK(worst < 1e-7);
}

TEST_CASE("evolution spec validation") {
  const GeneratorSpec gen = qubit(1.0, 1.0);
  EvolutionSpec spec;
  spec.tf = 1.0;
  spec.samples = {0.5, 2.0};
  CHECK_THROWS_AS(evolve(gen, gen.ground_state(), spec), ConfigError);
  spec.samples = {0.6, 0.5};
  CHECK_THROWS_AS(evolve(gen, gen.ground_state(), spec), ConfigError);
  spec.samples = {};
  spec.t0 = 1.0;
  CHECK_THROWS_AS(evolve(gen, gen.ground_state(), spec), ConfigError);
  spec.t0 = 0.0;
  CHECK_THROWS(evolve(gen, DensityState(HilbertLayout({3}), Matrix::Identity(3, 3) / 3.0), spec));
}

TEST_CASE("propagation of a non-hermitian operator") {
  const GeneratorSpec gen = qubit(0.8, 1.1, 0.3);
  const LindbladKernel k(gen);
  Matrix x = local::sigma_minus();
  const double t = 0.9;
  propagate(k, x, 0.0, t, {}, {}, OdeOptions{1e-10, 1e-12}, false);
  const Matrix l = testing::liouvillian(gen.hamiltonian_at(0).entries(),
                                        {gen.jump_operator(0).entries(), gen.jump_operator(1).entries()});
  const Matrix want = testing::vec_apply(Matrix((l * t).exp()), local::sigma_minus());
  CHECK((x - want).cwiseAbs().maxCoeff() < 1e-9);
}
