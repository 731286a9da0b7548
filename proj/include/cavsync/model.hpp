#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/SparseCore>

#include "cavsync/algebra.hpp"

namespace cavsync {

using SparseOp = Eigen::SparseMatrix<cplx, Eigen::RowMajor>;

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

/// Physical parameters in internal units (rad/us, times in us).
struct PhysicalParams {
  int n_qubits = 1;
  double omega_c = 0.0;
  double omega_d = 0.0;
  double Omega0 = 0.0;
  double kappa = 0.0;
  std::vector<double> g;
  std::vector<double> omega_q;
  std::vector<double> gamma;
  std::vector<double> gamma_loss;
  std::vector<double> gamma_phi;
  // Tune every qubit onto its own cavity-shifted resonance. Frequency offsets
  // from `omega_q_nominal` (default: mean of omega_q) remain as residual detunings.
  bool compensate = true;
  std::optional<double> omega_q_nominal;

  double Delta() const { return omega_d - omega_c; }
  double delta(int j) const { return omega_d - omega_q.at(static_cast<std::size_t>(j)); }
  double nominal_omega_q() const;

  // Throws ConfigError naming the first offending field.
  void validate() const;
  // Copy with every per-qubit list resized to n qubits (entries taken from qubit 0).
  PhysicalParams replicated(int n) const;
};

/// Table I presets 'A'..'D' for `n` qubits. Drive frequency defaults to 6 GHz.
PhysicalParams preset(char name, int n_qubits = 2);

enum class PulseKind { Square, SmoothTanh };

struct PulseShape {
  PulseKind kind = PulseKind::Square;
  double T = 0.0;
  double tau_r = 0.0;

  static PulseShape square(double T) { return {PulseKind::Square, T, 0.0}; }
  static PulseShape smooth(double T, double tau_r) { return {PulseKind::SmoothTanh, T, tau_r}; }

  double operator()(double t) const;
  // Time after which the envelope is negligible (< 1e-12 for the smooth shape).
  double support_end() const;
};

/// A pulse repeated `count` times with the given period, starting at t = 0.
struct PulseSchedule {
  PulseShape shape;
  int count = 1;
  double period = 0.0;

  PulseSchedule() = default;
  PulseSchedule(PulseShape s) : shape(s) {}  // NOLINT: single pulse converts implicitly
  PulseSchedule(PulseShape s, int n, double p) : shape(s), count(n), period(p) {}

  double operator()(double t) const;
  // Switch times of square pulses; empty for smooth shapes.
  std::vector<double> breakpoints() const;
};

struct DerivedParams {
  double alpha_ss_abs = 0.0;
  double phi = 0.0;
  std::vector<double> Omega_cm;
  std::vector<double> delta_cm;
  std::vector<std::vector<double>> J_cm;
  std::vector<double> gamma_cm;
  double T_pi = 0.0;
};

DerivedParams derive(const PhysicalParams& params);

struct RegimeCheck {
  std::string name;
  double value = 0.0;
  double threshold = 0.2;
  bool pass = true;
};

struct RegimeReport {
  std::vector<RegimeCheck> checks;
  bool all_pass() const;
};

RegimeReport validate_regime(const PhysicalParams& params);

/// Classical cavity field from the driven damped oscillator equation, with dense output.
class AlphaSolution {
 public:
  AlphaSolution(const PhysicalParams& params, const PulseSchedule& pulse, double t_end, double rtol = 1e-10,
                double atol = 1e-8);
  cplx operator()(double t) const;
  double t_end() const { return t_end_; }

 private:
  struct Step {
    double t0, h;
    cplx r[5];
  };
  std::vector<Step> steps_;
  double t_end_;
};

std::vector<cplx> integrate_alpha(const PhysicalParams& params, const PulseSchedule& pulse,
                                  const std::vector<double>& t_grid);

// Closed-form field for a square pulse switched on at t = 0 and off at T.
cplx alpha_closed_form(const PhysicalParams& params, double T, double t);

enum class GeneratorKind { EffectiveRWA, FullDisplaced };
enum class FullFrame { RotatingRWA, LabNonRWA };
enum class ChannelKind { Antenna, Loss, Dephasing, Collective, Cavity };

struct JumpChannel {
  ChannelKind kind;
  int qubit = -1;  // -1 for collective and cavity channels
  std::string label;
  SparseOp op;
};

struct HamiltonianTerm {
  SparseOp op;
  std::function<double(double)> envelope;
};

/// Time-dependent Lindblad generator: H(t) = h_static + sum_k envelope_k(t) op_k.
struct GeneratorSpec {
  GeneratorKind kind = GeneratorKind::EffectiveRWA;
  FullFrame frame = FullFrame::RotatingRWA;
  HilbertLayout layout;
  int n_qubits = 0;
  int first_qubit_site = 0;  // 1 for the full model, whose site 0 is the fluctuation mode
  SparseOp h_static;
  std::vector<HamiltonianTerm> h_driven;
  std::vector<JumpChannel> jumps;
  std::vector<double> breakpoints;

  ComplexOperator hamiltonian_at(double t) const;
  ComplexOperator jump_operator(std::size_t q) const;
  std::vector<ComplexOperator> jump_operators() const;
  int channel_index(ChannelKind kind, int qubit = -1) const;
  // Embedded qubit lowering operator and excitation number for qubit j.
  ComplexOperator sigma_minus(int j) const;
  ComplexOperator excitation(int j) const;
  // Ground state of all qubits (and fluctuation vacuum).
  DensityState ground_state() const;
};

struct EffectiveOptions {
  // Drop the cavity-mediated exchange and collective decay (independent emitters).
  bool decoupled = false;
};

GeneratorSpec build_effective(const PhysicalParams& params, const PulseSchedule& pulse,
                              const EffectiveOptions& options = {});

GeneratorSpec build_full_displaced(const PhysicalParams& params, const PulseSchedule& pulse, int fluc_cutoff = 6,
                                   FullFrame frame = FullFrame::RotatingRWA, double t_end = 0.0);

/// Duration of a smooth-tanh pulse with ramp `tau_r` whose area equals that of the square pi-pulse.
PulseShape optimize_smooth_pulse(const PhysicalParams& params, double tau_r);

SparseOp to_sparse(const Matrix& m);

}  // namespace cavsync
