#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cavsync/model.hpp"

namespace cavsync {

/// Parsed INI configuration. Frequencies and rates are stored as written: MHz, i.e. value/2pi.
/// Times are in microseconds.
struct RunConfig {
  double omega_c = 0.0;
  double kappa = 0.0;
  double omega_d = 0.0;
  double Omega0 = 0.0;

  int n = 1;
  std::vector<double> g;
  std::vector<double> omega_q;  // empty: place every qubit on its cavity-shifted resonance
  std::vector<double> gamma;
  std::vector<double> gamma_loss;
  std::vector<double> gamma_phi;
  bool compensate = true;

  PulseKind pulse_kind = PulseKind::Square;
  std::optional<double> T;  // unset: pi-pulse duration
  double tau_r = 0.0;
  double t_final_gamma = 15.0;

  std::optional<std::uint64_t> seed;
  std::optional<int> threads;

  PhysicalParams params() const;
  PulseShape pulse(const PhysicalParams& p) const;
  double t_final(const PhysicalParams& p) const;
  // Canonical INI text; parse_config(echo()) reproduces this configuration exactly.
  std::string echo() const;
  // Same configuration with every per-qubit list resized to n entries.
  RunConfig with_qubits(int count) const;
};

// Errors carry "<source>:<line>: <field>: ..." when a line can be identified.
RunConfig parse_config(const std::string& text, const std::string& source = "config");
RunConfig load_config(const std::filesystem::path& path);
RunConfig preset_config(char name, int n_qubits = 2);

}  // namespace cavsync
