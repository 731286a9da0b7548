#include "cavsync/cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "cavsync/config.hpp"
#include "cavsync/correlators.hpp"
#include "cavsync/counting.hpp"
#include "cavsync/errors.hpp"
#include "cavsync/output.hpp"
#include "cavsync/scaling.hpp"
#include "cavsync/trajectories.hpp"
#include "cavsync/version.hpp"

namespace cavsync {

namespace {

namespace fs = std::filesystem;

struct Common {
  std::string config_path;
  std::string preset;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<int> qubits;
};

std::optional<std::string> env(const char* name) {
  const char* v = std::getenv(name);
  if (!v || !*v) return std::nullopt;
  return std::string(v);
}

template <class T>
T parse_env(const std::string& name, const std::string& text) {
  std::istringstream in(text);
  T v{};
  if (!(in >> v) || !in.eof()) throw ConfigError("environment " + name + ": invalid value '" + text + "'");
  return v;
}

double mhz(double rad_per_us) { return rad_per_us / kTwoPi; }

// Resolved inputs plus output bookkeeping for one subcommand run.
class Run {
 public:
  Run(std::string sub, const Common& common, std::ostream& out) : sub_(std::move(sub)), out_(out) {
    start_ = std::chrono::steady_clock::now();
    if (!common.config_path.empty() && !common.preset.empty()) {
      throw ConfigError("--config and --preset are mutually exclusive");
    }
    if (!common.config_path.empty()) {
      cfg = load_config(common.config_path);
    } else if (!common.preset.empty()) {
      if (common.preset.size() != 1) throw ConfigError("--preset: expected one of A, B, C, D");
      cfg = preset_config(common.preset[0], 2);
    } else {
      throw ConfigError("one of --config or --preset is required");
    }
    if (common.qubits) cfg = cfg.with_qubits(*common.qubits);

    seed = cfg.seed.value_or(1);
    if (auto s = env("SEED")) seed = parse_env<std::uint64_t>("SEED", *s);
    if (common.seed) seed = *common.seed;
    threads = cfg.threads.value_or(1);
    if (auto t = env("THREADS")) threads = parse_env<int>("THREADS", *t);
    if (common.threads) threads = *common.threads;
    if (threads < 1) throw ConfigError("threads: must be at least 1");

    params = cfg.params();
    dir_ = fs::path(common.out_dir) / sub_;
    fs::create_directories(dir_);
  }

  void emit(const std::string& name, const std::string& content) {
    atomic_write(dir_ / name, content);
    outputs_.push_back(name);
  }
  void emit(const std::string& name, const CsvTable& table) { emit(name + ".csv", table.str()); }

  void note(const std::string& key, const std::string& value) { extra_.emplace_back(key, value); }

  void finish() {
    RunManifest m;
    m.subcommand = sub_;
    m.config_text = cfg.echo();
    m.seed = seed;
    m.threads = threads;
    m.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    m.outputs = outputs_;
    m.extra = extra_;
    atomic_write(dir_ / "manifest.json", m.to_json());
    out_ << "wrote " << outputs_.size() << " file(s) to " << dir_.string() << "\n";
  }

  RunConfig cfg;
  PhysicalParams params;
  std::uint64_t seed = 1;
  int threads = 1;

 private:
  std::string sub_;
  std::ostream& out_;
  fs::path dir_;
  std::vector<std::string> outputs_;
  std::vector<std::pair<std::string, std::string>> extra_;
  std::chrono::steady_clock::time_point start_;
};

void cmd_derive(Run& run, std::ostream& out) {
  const PhysicalParams& p = run.params;
  const DerivedParams d = derive(p);
  const RegimeReport r = validate_regime(p);

  CsvTable derived({"quantity", "qubit", "value"});
  derived.row() << "alpha_ss_abs" << -1 << d.alpha_ss_abs;
  derived.row() << "alpha_ss_abs2" << -1 << d.alpha_ss_abs * d.alpha_ss_abs;
  derived.row() << "phi" << -1 << d.phi;
  derived.row() << "T_pi_us" << -1 << d.T_pi;
  for (int j = 0; j < p.n_qubits; ++j) {
    const auto u = static_cast<std::size_t>(j);
    derived.row() << "Omega_cm_MHz" << j << mhz(d.Omega_cm[u]);
    derived.row() << "delta_cm_MHz" << j << mhz(d.delta_cm[u]);
    derived.row() << "gamma_cm_MHz" << j << mhz(d.gamma_cm[u]);
    derived.row() << "residual_detuning_MHz" << j << mhz(p.delta(j) - d.delta_cm[u]);
  }
  for (int j = 0; j < p.n_qubits; ++j) {
    for (int l = j + 1; l < p.n_qubits; ++l) {
      derived.row() << "J_cm_MHz_0" + std::to_string(l) << j
                    << mhz(d.J_cm[static_cast<std::size_t>(j)][static_cast<std::size_t>(l)]);
    }
  }
  CsvTable regime({"check", "value", "threshold", "pass"});
  for (const auto& c : r.checks) regime.row() << c.name << c.value << c.threshold << (c.pass ? 1 : 0);

  out << std::setprecision(6);
  out << "|alpha_ss|        " << d.alpha_ss_abs << "   (|alpha_ss|^2 = " << d.alpha_ss_abs * d.alpha_ss_abs << ")\n";
  out << "T_pi              " << d.T_pi << " us\n";
  for (int j = 0; j < p.n_qubits; ++j) {
    const auto u = static_cast<std::size_t>(j);
    out << "qubit " << j << ": Omega_cm/2pi = " << mhz(d.Omega_cm[u]) << " MHz, delta_cm/2pi = "
        << mhz(d.delta_cm[u]) << " MHz, gamma_cm/2pi = " << mhz(d.gamma_cm[u]) << " MHz\n";
  }
  out << "regime checks (threshold 0.2):\n";
  for (const auto& c : r.checks) {
    out << "  " << std::left << std::setw(18) << c.name << std::right << std::setw(12) << c.value << "  "
        << (c.pass ? "ok" : "VIOLATED") << "\n";
  }
  run.emit("derived", derived);
  run.emit("regime", regime);
  run.emit("config.ini", run.cfg.echo());
  run.note("regime_ok", r.all_pass() ? "true" : "false");
}

struct DynamicsOpts {
  std::string model = "effective";
  std::string frame = "rwa";
  std::optional<double> t_final;
  int samples = 601;
  int cutoff = 6;
};

ObservableSeries excitation_series(const GeneratorSpec& gen, double t_f, const std::vector<double>& times) {
  std::vector<std::pair<std::string, ComplexOperator>> ops;
  for (int j = 0; j < gen.n_qubits; ++j) ops.emplace_back("excited_q" + std::to_string(j), gen.excitation(j));
  EvolutionSpec spec;
  spec.tf = t_f;
  spec.samples = times;
  return evolve_observables(gen, gen.ground_state(), spec, ops);
}

CsvTable series_table(const ObservableSeries& s) {
  std::vector<std::string> header{"t"};
  for (const auto& n : s.names) header.push_back(n);
  CsvTable t(header);
  for (std::size_t i = 0; i < s.times.size(); ++i) {
    auto row = t.row();
    row << s.times[i];
    for (const auto& ch : s.values) row << ch[i].real();
  }
  return t;
}

void cmd_dynamics(Run& run, const DynamicsOpts& o) {
  if (o.samples < 2) throw ConfigError("--samples: at least 2 required");
  const PhysicalParams& p = run.params;
  const PulseShape pulse = run.cfg.pulse(p);
  const double t_f = o.t_final.value_or(run.cfg.t_final(p));
  if (!(t_f > 0.0)) throw ConfigError("--t-final: must be positive");
  const std::vector<double> times = linspace(0.0, t_f, static_cast<std::size_t>(o.samples));

  CsvTable cavity({"t", "alpha_re", "alpha_im", "alpha_abs2"});
  const auto alpha = integrate_alpha(p, pulse, times);
  for (std::size_t i = 0; i < times.size(); ++i) {
    cavity.row() << times[i] << alpha[i].real() << alpha[i].imag() << std::norm(alpha[i]);
  }
  run.emit("cavity", cavity);

  const bool eff = o.model == "effective" || o.model == "both";
  const bool full = o.model == "full" || o.model == "both";
  if (!eff && !full) throw ConfigError("--model: expected effective, full or both");
  if (o.frame != "rwa" && o.frame != "lab") throw ConfigError("--frame: expected rwa or lab");

  CsvTable photons({"model", "qubit", "P1_mean_photons"});
  std::optional<ObservableSeries> se, sf;
  auto add_photons = [&](const std::string& model, const ObservableSeries& s) {
    for (int j = 0; j < p.n_qubits; ++j) {
      std::vector<double> y;
      for (const auto& v : s.values[static_cast<std::size_t>(j)]) y.push_back(v.real());
      photons.row() << model << j << p.gamma[static_cast<std::size_t>(j)] * trapezoid(s.times, y);
    }
  };
  if (eff) {
    se = excitation_series(build_effective(p, pulse), t_f, times);
    run.emit("effective", series_table(*se));
    add_photons("effective", *se);
  }
  if (full) {
    const FullFrame frame = o.frame == "lab" ? FullFrame::LabNonRWA : FullFrame::RotatingRWA;
    sf = excitation_series(build_full_displaced(p, pulse, o.cutoff, frame, t_f), t_f, times);
    run.emit("full", series_table(*sf));
    add_photons("full", *sf);
  }
  run.emit("photons", photons);
  if (se && sf) {
    std::vector<std::string> header{"t"};
    for (const auto& n : se->names) header.push_back("D_" + n);
    CsvTable dev(header);
    double worst = 0.0;
    for (std::size_t i = 0; i < times.size(); ++i) {
      auto row = dev.row();
      row << times[i];
      for (std::size_t c = 0; c < se->values.size(); ++c) {
        const double d = std::abs(sf->values[c][i].real() - se->values[c][i].real());
        worst = std::max(worst, d);
        row << d;
      }
    }
    run.emit("deviation", dev);
    run.note("max_deviation", format_number(worst));
  }
}

void cmd_counting(Run& run, int n_c) {
  const PhysicalParams& p = run.params;
  const GeneratorSpec gen = build_effective(p, run.cfg.pulse(p));
  const CounterConfig cc{n_c, {}};
  const PhotonStats stats = read_stats(count_photons(gen, cc, run.cfg.t_final(p)));
  check_overflow(stats, n_c, CountingOptions{}.overflow_limit);

  CsvTable pn({"qubit", "n", "probability"});
  for (std::size_t c = 0; c < stats.channels.size(); ++c) {
    for (std::size_t n = 0; n < stats.p_n[c].size(); ++n) pn.row() << stats.channels[c] << n << stats.p_n[c][n];
  }
  const int N = p.n_qubits;
  CsvTable summary({"N", "n_c", "P1_mean", "PN", "DN", "overflow"});
  const double prod = stats.product_p1();
  summary.row() << N << n_c << stats.mean_p1() << stats.p_all_one << (N == 1 ? 0.0 : stats.p_all_one / prod - 1.0)
                << stats.overflow;
  run.emit("pn", pn);
  run.emit("summary", summary);
}

struct TrajOpts {
  std::size_t M = 1000;
  std::optional<double> t_final;
  int samples = 0;
  bool jumps = false;
};

void cmd_trajectories(Run& run, const TrajOpts& o) {
  if (o.M < 1) throw ConfigError("--M: at least one trajectory required");
  const PhysicalParams& p = run.params;
  const GeneratorSpec gen = build_effective(p, run.cfg.pulse(p));
  TrajectoryConfig tc;
  tc.M = o.M;
  tc.seed = run.seed;
  tc.t_f = o.t_final.value_or(run.cfg.t_final(p));
  tc.threads = run.threads;
  if (o.samples > 1) tc.sample_times = linspace(0.0, tc.t_f, static_cast<std::size_t>(o.samples));
  const EnsembleResult res = run_ensemble(gen, tc);

  CsvTable pn({"qubit", "n", "probability", "stderr"});
  for (std::size_t j = 0; j < res.stats.p_n.size(); ++j) {
    for (std::size_t n = 0; n < res.stats.p_n[j].size(); ++n) {
      pn.row() << j << n << res.stats.p_n[j][n].value << res.stats.p_n[j][n].stderr_;
    }
  }
  CsvTable summary({"N", "M", "seed", "PN", "PN_stderr"});
  summary.row() << p.n_qubits << o.M << std::to_string(run.seed) << res.stats.p_all.value << res.stats.p_all.stderr_;
  run.emit("pn", pn);
  run.emit("summary", summary);
  if (!res.stats.times.empty()) {
    std::vector<std::string> header{"t"};
    for (int j = 0; j < p.n_qubits; ++j) {
      header.push_back("excited_q" + std::to_string(j));
      header.push_back("stderr_q" + std::to_string(j));
    }
    CsvTable ex(header);
    for (std::size_t s = 0; s < res.stats.times.size(); ++s) {
      auto row = ex.row();
      row << res.stats.times[s];
      for (const auto& q : res.stats.excited) row << q[s].value << q[s].stderr_;
    }
    run.emit("excited", ex);
  }
  if (o.jumps) {
    std::ostringstream buf;
    res.log.write_csv(buf);
    run.emit("jumps.csv", buf.str());
  }
}

struct CorrOpts {
  std::string kind = "both";
  int pulses = 1;
  std::size_t n_tau = 0;
  int n_on = 60;
  int n_off = 240;
  std::string ordering = "antisymmetric";
  bool check = true;
};

void cmd_correlations(Run& run, const CorrOpts& o) {
  const PhysicalParams& p = run.params;
  const bool hbt = o.kind == "hbt" || o.kind == "both";
  const bool hom = o.kind == "hom" || o.kind == "both";
  if (!hbt && !hom) throw ConfigError("--kind: expected hbt, hom or both");
  if (hom && p.n_qubits < 2) throw ConfigError("qubits.n: HOM needs at least two qubits");
  PulseTrainSpec train{o.pulses, 0.0, run.cfg.pulse(p)};
  train.R = 1.0 / run.cfg.t_final(p);
  train.validate();
  G2Options go;
  go.grid = {o.n_on, o.n_off};
  go.check_convergence = o.check;
  go.threads = run.threads;
  if (o.ordering == "antisymmetric") go.ordering = HomOrdering::AntisymmetricFirst;
  else if (o.ordering == "symmetric") go.ordering = HomOrdering::SymmetricFirst;
  else if (o.ordering == "symmetrized") go.ordering = HomOrdering::Symmetrized;
  else throw ConfigError("--ordering: expected antisymmetric, symmetric or symmetrized");

  const GeneratorSpec gen = build_effective(p, train.schedule());
  CsvTable zero({"kind", "value", "numerator", "denominator", "refined_value", "convergence", "max_imag"});
  auto add = [&](const std::string& kind, const G2Result& r) {
    zero.row() << kind << r.value << r.numerator << r.denominator << r.refined_value << r.convergence << r.max_imag;
  };
  if (hbt) add("hbt", g2_hbt_zero(gen, train, 0, go));
  if (hom) add("hom", g2_hom_zero(gen, train, 0, 1, go));
  run.emit("zero_delay", zero);
  if (o.n_tau > 1) {
    auto curve = [&](const std::string& name, const std::vector<CurvePoint>& pts) {
      CsvTable t({"tau", "value"});
      for (const auto& c : pts) t.row() << c.tau << c.value;
      run.emit(name, t);
    };
    if (hbt) curve("hbt_curve", g2_hbt_curve(gen, train, 0, o.n_tau, go));
    if (hom) curve("hom_curve", g2_hom_curve(gen, train, 0, 1, o.n_tau, go));
  }
}

struct ScalingCliOpts {
  int n_max = 5;
  int n_c = 1;
  bool decoupled = false;
  std::vector<int> extrapolate;
};

void cmd_scaling(Run& run, const ScalingCliOpts& o) {
  const PhysicalParams& p = run.params;
  ScalingOptions so;
  so.n_c = o.n_c;
  so.decoupled = o.decoupled;
  so.threads = run.threads;
  so.t_final_gamma = run.cfg.t_final_gamma;
  const auto curve = dn_curve(p, o.n_max, so);
  CsvTable dn({"N", "PN", "P1", "DN", "overflow"});
  std::vector<std::pair<int, double>> pts;
  for (const auto& c : curve) {
    dn.row() << c.N << c.P_N << c.P_1 << c.D_N << c.overflow;
    pts.emplace_back(c.N, c.D_N);
  }
  run.emit("dn", dn);
  if (o.n_max < 3) return;
  const FitResult fit = fit_epsilon(pts);
  const double analytic = epsilon_analytic(p.replicated(1));
  // Prefactor that would make the analytic formula reproduce this fit.
  const double prefactor = refit_prefactor({{p.replicated(1), fit.epsilon}});
  CsvTable ft({"epsilon_fit", "epsilon_analytic", "relative_difference", "prefactor_refit", "valid", "points_used"});
  ft.row() << fit.epsilon << analytic << (fit.epsilon - analytic) / analytic << prefactor << (fit.valid ? 1 : 0)
           << fit.used.size();
  run.emit("fit", ft);
  if (!o.extrapolate.empty()) {
    const double R = p.gamma[0] / run.cfg.t_final_gamma;
    CsvTable ex({"N", "PN_extrapolated", "rate_per_us", "label"});
    for (int N : o.extrapolate) {
      const double PN = extrapolate_PN(curve.front().P_1, fit.epsilon, N);
      ex.row() << N << PN << generation_rate(PN, R) << "extrapolated";
    }
    run.emit("extrapolation", ex);
  }
}

struct DisorderCliOpts {
  std::string target = "gamma";
  double sigma = 0.1;
  std::size_t M = 300;
  int n_c = 1;
};

void cmd_disorder(Run& run, const DisorderCliOpts& o) {
  const PhysicalParams& p = run.params;
  const int N = p.n_qubits;
  DisorderSpec spec;
  spec.target = parse_disorder_target(o.target);
  spec.M = o.M;
  spec.seed = run.seed;
  if (!(o.sigma >= 0.0)) throw ConfigError("--sigma: must be non-negative");
  // Relative widths: omega_q in units of Omega_cm, every other target in units of its own value.
  double scale = 0.0;
  switch (spec.target) {
    case DisorderTarget::OmegaQ: scale = derive(p).Omega_cm.at(0); break;
    case DisorderTarget::G: scale = p.g.at(0); break;
    case DisorderTarget::Gamma: scale = p.gamma.at(0); break;
    case DisorderTarget::GammaPhi: scale = p.gamma_phi.at(0); break;
    case DisorderTarget::GammaLoss: scale = p.gamma_loss.at(0); break;
  }
  spec.sigma = o.sigma * scale;
  ScalingOptions so;
  so.n_c = o.n_c;
  so.threads = run.threads;
  so.t_final_gamma = run.cfg.t_final_gamma;
  const DisorderAverages avg = disorder_average(p, spec, N, so);
  DisorderSpec none = spec;
  none.sigma = 0.0;
  none.M = 1;
  const DisorderAverages base = disorder_average(p, none, N, so);

  std::vector<std::string> header{"realization"};
  for (int j = 0; j < N; ++j) header.push_back(o.target + "_q" + std::to_string(j) + "_MHz");
  for (int j = 0; j < N; ++j) header.push_back("P1_q" + std::to_string(j));
  header.push_back("PN");
  CsvTable rt(header);
  for (std::size_t m = 0; m < avg.realizations.size(); ++m) {
    const auto& r = avg.realizations[m];
    auto row = rt.row();
    row << m;
    for (double v : r.values) row << mhz(v);
    for (double v : r.p1) row << v;
    row << r.P_N;
  }
  CsvTable st({"target", "sigma_relative", "sigma_MHz", "N", "M", "PN_avg", "PN_stderr", "P1_avg", "P1_stderr",
               "DN_avg", "DN_stderr", "PN_homogeneous", "DN_homogeneous"});
  st.row() << o.target << o.sigma << mhz(spec.sigma) << N << o.M << avg.avg_PN << avg.se_PN << avg.avg_P1
           << avg.se_P1 << avg.avg_DN << avg.se_DN << base.avg_PN << base.avg_DN;
  run.emit("realizations", rt);
  run.emit("summary", st);
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Cavity-synchronized single-photon source simulator"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  app.fallthrough();

  Common common;
  app.add_option("--config", common.config_path, "INI configuration file");
  app.add_option("--preset", common.preset, "Built-in parameter set")->check(CLI::IsMember({"A", "B", "C", "D"}));
  app.add_option("--out", common.out_dir, "Output directory")->capture_default_str();
  app.add_option("--seed", common.seed, "Random seed (overrides SEED and the config)");
  app.add_option("--threads", common.threads, "Worker threads (overrides THREADS and the config)");
  app.add_option("--qubits", common.qubits, "Resize the qubit array, copying qubit 0");

  auto* derive_cmd = app.add_subcommand("derive", "Derived parameters and regime diagnostics");

  DynamicsOpts dyn;
  auto* dyn_cmd = app.add_subcommand("dynamics", "Qubit populations and cavity field versus time");
  dyn_cmd->add_option("--model", dyn.model, "effective, full or both")->capture_default_str();
  dyn_cmd->add_option("--frame", dyn.frame, "Full-model frame: rwa or lab")->capture_default_str();
  dyn_cmd->add_option("--t-final", dyn.t_final, "End time in us");
  dyn_cmd->add_option("--samples", dyn.samples, "Number of output samples")->capture_default_str();
  dyn_cmd->add_option("--cutoff", dyn.cutoff, "Fluctuation-mode Fock cutoff")->capture_default_str();

  int n_c = 2;
  auto* count_cmd = app.add_subcommand("counting", "Photon-number statistics by the counter method");
  count_cmd->add_option("--n-c", n_c, "Counter truncation")->capture_default_str();

  TrajOpts traj;
  auto* traj_cmd = app.add_subcommand("trajectories", "Quantum-jump ensemble");
  traj_cmd->add_option("--M", traj.M, "Number of trajectories")->capture_default_str();
  traj_cmd->add_option("--t-final", traj.t_final, "End time in us");
  traj_cmd->add_option("--samples", traj.samples, "Population samples (0: none)")->capture_default_str();
  traj_cmd->add_flag("--jumps", traj.jumps, "Write the full jump log");

  CorrOpts corr;
  auto* corr_cmd = app.add_subcommand("correlations", "HBT and HOM second-order correlations");
  corr_cmd->add_option("--kind", corr.kind, "hbt, hom or both")->capture_default_str();
  corr_cmd->add_option("--pulses", corr.pulses, "Pulses in the train")->capture_default_str();
  corr_cmd->add_option("--n-tau", corr.n_tau, "Delay samples for G(tau) curves (0: zero delay only)");
  corr_cmd->add_option("--n-on", corr.n_on, "Grid intervals per pulse")->capture_default_str();
  corr_cmd->add_option("--n-off", corr.n_off, "Grid intervals between pulses")->capture_default_str();
  corr_cmd->add_option("--ordering", corr.ordering, "HOM operator ordering")->capture_default_str();
  corr_cmd->add_flag("!--no-check", corr.check, "Skip the grid-doubling check");

  ScalingCliOpts sc;
  auto* scale_cmd = app.add_subcommand("scaling", "Demultiplexing error versus N and epsilon fit");
  scale_cmd->add_option("--n-max", sc.n_max, "Largest N")->capture_default_str();
  scale_cmd->add_option("--n-c", sc.n_c, "Counter truncation")->capture_default_str();
  scale_cmd->add_flag("--decoupled", sc.decoupled, "Drop cavity-mediated interactions");
  scale_cmd->add_option("--extrapolate", sc.extrapolate, "N values for the labelled extrapolation")->delimiter(',');

  DisorderCliOpts dis;
  auto* dis_cmd = app.add_subcommand("disorder", "Disorder-averaged photon statistics");
  dis_cmd->add_option("--target", dis.target, "omega_q, g, gamma, gamma_phi or gamma_loss")->capture_default_str();
  dis_cmd->add_option("--sigma", dis.sigma, "Relative standard deviation")->capture_default_str();
  dis_cmd->add_option("--M", dis.M, "Number of realizations")->capture_default_str();
  dis_cmd->add_option("--n-c", dis.n_c, "Counter truncation")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    std::ostringstream o, e2;
    const int code = app.exit(e, o, e2);
    out << o.str();
    err << e2.str();
    return code == 0 ? 0 : 2;
  }

  try {
    CLI::App* sub = app.get_subcommands().front();
    Run run(sub->get_name(), common, out);
    if (sub == derive_cmd) cmd_derive(run, out);
    else if (sub == dyn_cmd) cmd_dynamics(run, dyn);
    else if (sub == count_cmd) cmd_counting(run, n_c);
    else if (sub == traj_cmd) cmd_trajectories(run, traj);
    else if (sub == corr_cmd) cmd_correlations(run, corr);
    else if (sub == scale_cmd) cmd_scaling(run, sc);
    else if (sub == dis_cmd) cmd_disorder(run, dis);
    run.finish();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const DimensionError& e) {
    err << "dimension error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace cavsync
