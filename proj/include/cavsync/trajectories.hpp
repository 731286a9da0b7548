#pragma once

#include <cstdint>
#include <ostream>
#include <random>
#include <vector>

#include "cavsync/model.hpp"

namespace cavsync {

struct TrajectoryConfig {
  std::size_t M = 1000;
  std::uint64_t seed = 1;
  double t_f = 1.0;
  double norm_tol = 1e-10;  // relative accuracy of jump times
  int threads = 1;
  double rtol = 1e-8;
  double atol = 1e-10;
  std::vector<double> sample_times;  // optional ensemble-averaged populations
  // Basis levels per subsystem of the initial state; empty means all qubits in |g>.
  std::vector<int> initial_levels;
};

struct JumpEvent {
  double time;
  int channel;
};

struct JumpLog {
  std::vector<ChannelKind> kinds;
  std::vector<int> qubits;
  std::vector<std::string> labels;
  int n_qubits = 0;
  std::vector<std::vector<JumpEvent>> trajectories;

  // Antenna jump count per qubit for trajectory m.
  std::vector<int> antenna_counts(std::size_t m) const;
  void write_csv(std::ostream& out) const;
};

struct Estimate {
  double value = 0.0;
  double stderr_ = 0.0;
};

Estimate binomial_estimate(std::size_t hits, std::size_t total);

struct EnsembleStats {
  std::size_t M = 0;
  std::vector<std::vector<Estimate>> p_n;  // [qubit][n], n = 0..n_max
  Estimate p_all;
  std::vector<double> times;
  std::vector<std::vector<Estimate>> excited;  // [qubit][sample]
};

struct EnsembleResult {
  JumpLog log;
  EnsembleStats stats;
};

/// Pure-state unravelling with waiting-time sampling, started from the all-ground state by default.
EnsembleResult run_ensemble(const GeneratorSpec& gen, const TrajectoryConfig& cfg);

Estimate estimate_PN(const JumpLog& log);
std::vector<std::vector<Estimate>> estimate_Pn(const JumpLog& log, int n_max);
// Copy of the log with the dephasing events removed.
JumpLog without_dephasing(const JumpLog& log);

/// Uniform variate stream for trajectory `index`; independent of thread scheduling.
class TrajectoryRng {
 public:
  TrajectoryRng(std::uint64_t seed, std::uint64_t index);
  // Uniform in the open interval (0, 1).
  double uniform();

 private:
  std::mt19937_64 engine_;
};

}  // namespace cavsync
