#pragma once

#include <span>
#include <vector>

#include "cavsync/integrator.hpp"
#include "cavsync/model.hpp"

namespace cavsync {

struct CounterConfig {
  int n_c = 2;
  std::vector<int> counted;  // qubits whose antenna carries a counter; empty means all

  std::vector<int> resolved(int n_qubits) const;
};

/// Dense generator on [qubits..., counters...]; each counted antenna jump also raises its counter.
GeneratorSpec build_counting_generator(const GeneratorSpec& gen, const CounterConfig& cfg);

/// Counter-extended state kept block-diagonal in the counter basis: one system block per counter record.
class CountingState {
 public:
  CountingState(HilbertLayout system, int n_c, std::vector<int> counted);

  const HilbertLayout& system_layout() const { return system_; }
  int n_c() const { return n_c_; }
  const std::vector<int>& counted() const { return counted_; }
  std::size_t sectors() const { return blocks_.size(); }
  // Counter record of a sector, one digit per counted channel.
  std::vector<int> record(std::size_t sector) const;
  std::size_t sector_index(std::span<const int> record) const;

  const Matrix& block(std::size_t sector) const { return blocks_[sector]; }
  Matrix& block(std::size_t sector) { return blocks_[sector]; }

  // Probability of the counter occupancy pattern (one entry per counted channel).
  double joint(std::span<const int> pattern) const;
  DensityState reduced() const;
  // Dense state on the extended layout [system dims..., counters...].
  DensityState extended() const;

 private:
  HilbertLayout system_;
  int n_c_;
  std::vector<int> counted_;
  std::vector<Matrix> blocks_;
};

struct PhotonStats {
  std::vector<int> channels;              // qubit index of each counted antenna
  std::vector<std::vector<double>> p_n;   // [channel][n], n = 0..N_c
  double p_all_one = 0.0;                 // joint probability of exactly one photon per channel
  double overflow = 0.0;                  // max_j P_{N_c}^j
  double aliased = 0.0;                   // geometric estimate of max_j P_{N_c+2}^j, the weight wrapped onto n = 1

  double mean_p1() const;
  double product_p1() const;
};

struct CountingOptions {
  double rtol = 1e-10;
  double atol = 1e-12;
  // Fail when the estimated weight wrapped onto n = 1 exceeds this (only meaningful for N_c >= 2).
  double overflow_limit = 1e-4;
};

/// Evolve the counter-extended master equation from the system ground state to t_f.
CountingState count_photons(const GeneratorSpec& gen, const CounterConfig& cfg, double t_f,
                            const CountingOptions& options = {}, const std::vector<double>& samples = {},
                            const std::function<void(std::size_t, double, const CountingState&)>& observer = {});

PhotonStats read_stats(const CountingState& state);
// Dense route: `rho_ext` on [system..., counters...] with `n_counters` trailing registers.
PhotonStats read_stats(const DensityState& rho_ext, int n_counters, const std::vector<int>& channel_qubits);
double joint_probability(const DensityState& rho_ext, int n_counters, std::span<const int> pattern);

void check_overflow(const PhotonStats& stats, int n_c, double limit);

double demux_error(double p_n, double p_1, int n);

}  // namespace cavsync
