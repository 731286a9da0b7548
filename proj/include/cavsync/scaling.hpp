#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "cavsync/counting.hpp"
#include "cavsync/model.hpp"

namespace cavsync {

struct DnPoint {
  int N = 0;
  double P_N = 0.0;
  double P_1 = 0.0;  // product of the single-channel probabilities of the same run, to the 1/N
  double D_N = 0.0;
  double overflow = 0.0;
};

struct ScalingOptions {
  int n_c = 1;
  double t_final_gamma = 15.0;
  CountingOptions counting{1e-10, 1e-12, 1e-4};
  bool decoupled = false;
  int threads = 1;
};

/// Counter-method D_N for N = 1..N_max, each an N-copy of qubit 0 of `params`.
std::vector<DnPoint> dn_curve(const PhysicalParams& params, int N_max, const ScalingOptions& options = {});

struct FitResult {
  double epsilon = 0.0;
  std::vector<int> used;           // N values inside the validity region
  std::vector<double> residuals;   // D_N - eps N(N-1), per input point
  bool valid = true;               // false when any point had D_N >= max_dn
  double max_dn = 0.1;
};

FitResult fit_epsilon(const std::vector<std::pair<int, double>>& curve, double max_dn = 0.1);

double epsilon_analytic(const PhysicalParams& params, double prefactor = 1.42);

// Least-squares prefactor c in eps = c g^4/gamma^2 kappa/((kappa/2)^2+Delta^2)^{3/2}.
double refit_prefactor(const std::vector<std::pair<PhysicalParams, double>>& fitted);

double generation_rate(double P_N, double R);

/// Labelled extrapolation (P_1)^N (1 + eps N(N-1)); never a simulated value.
double extrapolate_PN(double P_1, double epsilon, int N);

enum class DisorderTarget { OmegaQ, G, Gamma, GammaPhi, GammaLoss };

DisorderTarget parse_disorder_target(const std::string& name);
std::string to_string(DisorderTarget target);

struct DisorderSpec {
  DisorderTarget target = DisorderTarget::Gamma;
  double sigma = 0.0;  // absolute standard deviation, rad/us
  std::size_t M = 100;
  std::uint64_t seed = 1;
};

/// One Gaussian realization; index picks an independent stream.
PhysicalParams sample_disorder(const PhysicalParams& base, const DisorderSpec& spec, std::uint64_t index);

struct DisorderRealization {
  std::vector<double> values;  // disordered parameter per qubit
  std::vector<double> p1;      // per channel
  double P_N = 0.0;
};

struct DisorderAverages {
  int N = 0;
  double avg_PN = 0.0, se_PN = 0.0;
  double avg_P1 = 0.0, se_P1 = 0.0;
  double avg_DN = 0.0, se_DN = 0.0;
  std::vector<DisorderRealization> realizations;
};

DisorderAverages disorder_average(const PhysicalParams& base, const DisorderSpec& spec, int N,
                                  const ScalingOptions& options = {});

// Second-order excitation predictions after a pi-pulse.
double pe_coupling_disorder(double dg_over_g);
double pe_frequency_disorder(double domega_over_Omega);

}  // namespace cavsync
