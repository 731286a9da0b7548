#include "cavsync/model.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>

#include "cavsync/integrator.hpp"

namespace cavsync {

namespace {

constexpr double kPi = 3.14159265358979323846;

double mean(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

void require_list(const std::vector<double>& v, int n, const char* name, bool nonneg) {
  if (static_cast<int>(v.size()) != n) {
    throw ConfigError(std::string(name) + ": expected " + std::to_string(n) + " values, got " + std::to_string(v.size()));
  }
  for (double x : v) {
    if (!std::isfinite(x)) throw ConfigError(std::string(name) + ": non-finite value");
    if (nonneg && x < 0.0) throw ConfigError(std::string(name) + ": must be non-negative");
  }
}

// Effective-model detuning of qubit j from its cavity-shifted resonance.
double residual_detuning(const PhysicalParams& p, const DerivedParams& d, int j) {
  const auto ju = static_cast<std::size_t>(j);
  if (p.compensate) return p.nominal_omega_q() - p.omega_q[ju];
  return p.delta(j) - d.delta_cm[ju];
}

}  // namespace

double PhysicalParams::nominal_omega_q() const { return omega_q_nominal ? *omega_q_nominal : mean(omega_q); }

void PhysicalParams::validate() const {
  if (n_qubits < 1) throw ConfigError("n_qubits: must be at least 1");
  for (auto [value, name] : {std::pair{kappa, "kappa"}, {Omega0, "Omega0"}}) {
    if (!std::isfinite(value) || value < 0.0) throw ConfigError(std::string(name) + ": must be finite and non-negative");
  }
  if (!std::isfinite(omega_c) || !std::isfinite(omega_d)) throw ConfigError("omega_c/omega_d: non-finite value");
  require_list(g, n_qubits, "g", true);
  require_list(omega_q, n_qubits, "omega_q", false);
  require_list(gamma, n_qubits, "gamma", true);
  require_list(gamma_loss, n_qubits, "gamma_loss", true);
  require_list(gamma_phi, n_qubits, "gamma_phi", true);
}

PhysicalParams PhysicalParams::replicated(int n) const {
  PhysicalParams out = *this;
  out.n_qubits = n;
  for (auto* v : {&out.g, &out.omega_q, &out.gamma, &out.gamma_loss, &out.gamma_phi}) {
    const double first = v->empty() ? 0.0 : v->front();
    v->assign(static_cast<std::size_t>(n), first);
  }
  return out;
}

PhysicalParams preset(char name, int n_qubits) {
  double gam = 0, loss = 0, phi = 0;
  switch (name) {
    case 'A': gam = 0.4; break;
    case 'B': gam = 0.4; loss = 0.001; phi = 0.001; break;
    case 'C': gam = 1.0; loss = 0.005; phi = 0.01; break;
    case 'D': gam = 3.0; loss = 0.05; phi = 0.1; break;
    default: throw ConfigError(std::string("preset: unknown name '") + name + "'");
  }
  PhysicalParams p;
  p.n_qubits = n_qubits;
  p.kappa = kTwoPi * 400.0;
  p.Omega0 = kTwoPi * 40000.0;
  p.omega_d = kTwoPi * 6000.0;
  p.omega_c = p.omega_d - kTwoPi * 50.0;
  const auto n = static_cast<std::size_t>(n_qubits);
  p.g.assign(n, kTwoPi * 0.2);
  p.gamma.assign(n, kTwoPi * gam);
  p.gamma_loss.assign(n, kTwoPi * loss);
  p.gamma_phi.assign(n, kTwoPi * phi);
  p.omega_q.assign(n, 0.0);
  const DerivedParams d = derive([&] {
    PhysicalParams q = p;
    q.omega_q.assign(n, p.omega_d);
    return q;
  }());
  for (std::size_t j = 0; j < n; ++j) p.omega_q[j] = p.omega_d - d.delta_cm[j];
  return p;
}

double PulseShape::operator()(double t) const {
  if (t < 0.0) return 0.0;
  if (kind == PulseKind::Square) return t < T ? 1.0 : 0.0;
  return 0.5 * std::tanh(t / tau_r) * (2.0 - std::tanh(T / tau_r) - std::tanh((t - T) / tau_r));
}

double PulseShape::support_end() const { return kind == PulseKind::Square ? T : T + 15.0 * tau_r; }

double PulseSchedule::operator()(double t) const {
  if (count <= 1 || period <= 0.0) return shape(t);
  if (t < 0.0) return 0.0;
  const double k = std::floor(t / period);
  if (k >= count) return 0.0;
  return shape(t - k * period);
}

std::vector<double> PulseSchedule::breakpoints() const {
  std::vector<double> out;
  if (shape.kind != PulseKind::Square || !std::isfinite(shape.T)) return out;
  const int n = (count <= 1 || period <= 0.0) ? 1 : count;
  for (int k = 0; k < n; ++k) {
    out.push_back(k * period);
    out.push_back(k * period + shape.T);
  }
  return out;
}

DerivedParams derive(const PhysicalParams& p) {
  p.validate();
  const double Delta = p.Delta();
  const double den = 0.25 * p.kappa * p.kappa + Delta * Delta;
  if (den <= 0.0) throw ConfigError("derive: kappa and Delta are both zero");
  DerivedParams d;
  d.alpha_ss_abs = p.Omega0 / std::sqrt(den);
  d.phi = std::atan2(2.0 * Delta, p.kappa) - 0.5 * kPi;
  const auto n = static_cast<std::size_t>(p.n_qubits);
  d.Omega_cm.resize(n);
  d.delta_cm.resize(n);
  d.gamma_cm.resize(n);
  d.J_cm.assign(n, std::vector<double>(n, 0.0));
  for (std::size_t j = 0; j < n; ++j) {
    d.Omega_cm[j] = d.alpha_ss_abs * p.g[j];
    d.delta_cm[j] = p.g[j] * p.g[j] * Delta / den;
    d.gamma_cm[j] = p.g[j] * p.g[j] * p.kappa / den;
    for (std::size_t l = 0; l < n; ++l) d.J_cm[j][l] = p.g[j] * p.g[l] * Delta / den;
  }
  const double om = mean(d.Omega_cm);
  d.T_pi = om > 0.0 ? kPi / (2.0 * om) : std::numeric_limits<double>::infinity();
  return d;
}

bool RegimeReport::all_pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const RegimeCheck& c) { return c.pass; });
}

RegimeReport validate_regime(const PhysicalParams& p) {
  const DerivedParams d = derive(p);
  auto worst = [&](auto&& f) {
    double m = 0.0;
    for (int j = 0; j < p.n_qubits; ++j) m = std::max(m, f(static_cast<std::size_t>(j)));
    return m;
  };
  auto ratio = [](double a, double b) {
    if (b == 0.0) return a == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    return std::abs(a) / b;
  };
  RegimeReport r;
  r.checks.push_back({"gamma/Omega_cm", worst([&](auto j) { return ratio(p.gamma[j], d.Omega_cm[j]); })});
  double jmax = 0.0;
  for (std::size_t j = 0; j < d.J_cm.size(); ++j) {
    for (std::size_t l = 0; l < d.J_cm.size(); ++l) {
      if (j != l) jmax = std::max(jmax, ratio(d.J_cm[j][l], p.gamma[j]));
    }
  }
  if (p.n_qubits == 1) jmax = ratio(d.delta_cm[0], p.gamma[0]);
  r.checks.push_back({"J_cm/gamma", jmax});
  r.checks.push_back({"gamma_cm/gamma", worst([&](auto j) { return ratio(d.gamma_cm[j], p.gamma[j]); })});
  r.checks.push_back({"gamma_loss/gamma", worst([&](auto j) { return ratio(p.gamma_loss[j], p.gamma[j]); })});
  r.checks.push_back({"gamma_phi/gamma", worst([&](auto j) { return ratio(p.gamma_phi[j], p.gamma[j]); })});
  r.checks.push_back({"|delta-delta_cm|/Omega_cm", worst([&](auto j) {
                        return ratio(residual_detuning(p, d, static_cast<int>(j)), d.Omega_cm[j]);
                      })});
  for (auto& c : r.checks) c.pass = c.value <= c.threshold;
  return r;
}

AlphaSolution::AlphaSolution(const PhysicalParams& p, const PulseSchedule& pulse, double t_end, double rtol,
                             double atol)
    : t_end_(t_end) {
  if (!(t_end > 0.0)) throw ConfigError("integrate_alpha: end time must be positive");
  const cplx lambda(0.5 * p.kappa, p.omega_c);
  const double Omega0 = p.Omega0, wd = p.omega_d;
  auto rhs = [&](double t, const Vector& y, Vector& dy) {
    dy.resize(1);
    dy[0] = -lambda * y[0] - 2.0 * kI * Omega0 * pulse(t) * std::cos(wd * t);
  };
  OdeOptions opt;
  opt.rtol = rtol;
  opt.atol = atol;
  // Keep several steps per drive period so the dense output stays accurate.
  if (wd > 0.0) opt.max_step = kTwoPi / wd / 4.0;
  std::vector<double> cuts{0.0};
  for (double b : pulse.breakpoints()) {
    if (b > 0.0 && b < t_end) cuts.push_back(b);
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  cuts.push_back(t_end);
  Vector y = Vector::Zero(1);
  Dopri5 stepper(rhs, opt);
  for (std::size_t s = 0; s + 1 < cuts.size(); ++s) {
    stepper.start(cuts[s], cuts[s + 1], y);
    while (stepper.step()) {
      Step st{stepper.t_prev(), stepper.t() - stepper.t_prev(), {}};
      for (int k = 0; k < 5; ++k) st.r[k] = stepper.dense_coefficients()[k][0];
      steps_.push_back(st);
    }
    y = stepper.y();
  }
}

cplx AlphaSolution::operator()(double t) const {
  if (t <= 0.0 || steps_.empty()) return 0.0;
  if (t > t_end_ * (1.0 + 1e-12)) throw Error("AlphaSolution: time beyond the integrated window");
  auto it = std::upper_bound(steps_.begin(), steps_.end(), t, [](double v, const Step& s) { return v < s.t0; });
  const Step& s = *std::prev(it);
  const double th = std::clamp((t - s.t0) / s.h, 0.0, 1.0);
  const double th1 = 1.0 - th;
  return s.r[0] + th * (s.r[1] + th1 * (s.r[2] + th * (s.r[3] + th1 * s.r[4])));
}

std::vector<cplx> integrate_alpha(const PhysicalParams& params, const PulseSchedule& pulse,
                                  const std::vector<double>& t_grid) {
  if (!std::is_sorted(t_grid.begin(), t_grid.end())) throw ConfigError("integrate_alpha: t_grid must be increasing");
  std::vector<cplx> out(t_grid.size(), 0.0);
  if (t_grid.empty() || t_grid.back() <= 0.0) return out;
  const AlphaSolution sol(params, pulse, t_grid.back());
  for (std::size_t i = 0; i < t_grid.size(); ++i) out[i] = sol(t_grid[i]);
  return out;
}

cplx alpha_closed_form(const PhysicalParams& p, double T, double t) {
  if (t <= 0.0) return 0.0;
  const cplx lambda(0.5 * p.kappa, p.omega_c);
  const double wd = p.omega_d;
  auto on = [&](double s) {
    const cplx decay = std::exp(-lambda * s);
    return -kI * p.Omega0 *
           ((std::exp(kI * wd * s) - decay) / (lambda + kI * wd) + (std::exp(-kI * wd * s) - decay) / (lambda - kI * wd));
  };
  if (t < T) return on(t);
  return on(T) * std::exp(-lambda * (t - T));
}

SparseOp to_sparse(const Matrix& m) {
  SparseOp s = m.sparseView(cplx(0.0, 0.0), 0.0);
  s.makeCompressed();
  return s;
}

ComplexOperator GeneratorSpec::hamiltonian_at(double t) const {
  Matrix h = Matrix(h_static);
  for (const auto& term : h_driven) h += term.envelope(t) * Matrix(term.op);
  return {layout, std::move(h), true};
}

ComplexOperator GeneratorSpec::jump_operator(std::size_t q) const { return {layout, Matrix(jumps.at(q).op), false}; }

std::vector<ComplexOperator> GeneratorSpec::jump_operators() const {
  std::vector<ComplexOperator> out;
  for (std::size_t q = 0; q < jumps.size(); ++q) out.push_back(jump_operator(q));
  return out;
}

int GeneratorSpec::channel_index(ChannelKind k, int qubit) const {
  for (std::size_t q = 0; q < jumps.size(); ++q) {
    if (jumps[q].kind == k && jumps[q].qubit == qubit) return static_cast<int>(q);
  }
  throw Error("GeneratorSpec: no such jump channel");
}

ComplexOperator GeneratorSpec::sigma_minus(int j) const {
  if (j < 0 || j >= n_qubits) throw DimensionError("GeneratorSpec: qubit index out of range");
  return embed_operator(local::sigma_minus(), first_qubit_site + j, layout);
}

ComplexOperator GeneratorSpec::excitation(int j) const {
  if (j < 0 || j >= n_qubits) throw DimensionError("GeneratorSpec: qubit index out of range");
  return embed_operator(local::excited_projector(), first_qubit_site + j, layout, true);
}

DensityState GeneratorSpec::ground_state() const {
  std::vector<int> levels(static_cast<std::size_t>(layout.subsystems()), 0);
  for (int j = 0; j < n_qubits; ++j) levels[static_cast<std::size_t>(first_qubit_site + j)] = 1;
  return DensityState::basis(layout, levels);
}

namespace {

void add_qubit_channels(GeneratorSpec& gen, const PhysicalParams& p) {
  const int n = p.n_qubits;
  std::vector<SparseOp> sm;
  for (int j = 0; j < n; ++j) sm.push_back(to_sparse(gen.sigma_minus(j).entries()));
  auto rate = [](double r) { return std::sqrt(std::max(r, 0.0)); };
  for (int j = 0; j < n; ++j) {
    gen.jumps.push_back({ChannelKind::Antenna, j, "antenna" + std::to_string(j), rate(p.gamma[j]) * sm[j]});
  }
  for (int j = 0; j < n; ++j) {
    gen.jumps.push_back({ChannelKind::Loss, j, "loss" + std::to_string(j), rate(p.gamma_loss[j]) * sm[j]});
  }
  for (int j = 0; j < n; ++j) {
    SparseOp proj = SparseOp(sm[j].adjoint()) * sm[j];
    gen.jumps.push_back({ChannelKind::Dephasing, j, "dephasing" + std::to_string(j), rate(2.0 * p.gamma_phi[j]) * proj});
  }
  for (auto& ch : gen.jumps) {
    ch.op.prune(cplx(0.0, 0.0));
    ch.op.makeCompressed();
  }
}

SparseOp embedded(const GeneratorSpec& gen, const Matrix& local, int site) {
  return to_sparse(embed_operator(local, site, gen.layout).entries());
}

}  // namespace

GeneratorSpec build_effective(const PhysicalParams& p, const PulseSchedule& pulse, const EffectiveOptions& options) {
  const DerivedParams d = derive(p);
  const int n = p.n_qubits;
  GeneratorSpec gen;
  gen.kind = GeneratorKind::EffectiveRWA;
  gen.layout = HilbertLayout(std::vector<int>(static_cast<std::size_t>(n), 2));
  gen.n_qubits = n;
  gen.first_qubit_site = 0;
  const Eigen::Index dim = gen.layout.total_dim();

  std::vector<SparseOp> sm, sz, sx;
  for (int j = 0; j < n; ++j) {
    sm.push_back(embedded(gen, local::sigma_minus(), j));
    sz.push_back(embedded(gen, local::sigma_z(), j));
    sx.push_back(embedded(gen, local::sigma_x(), j));
  }
  SparseOp h(dim, dim);
  for (int j = 0; j < n; ++j) h += (-0.5 * residual_detuning(p, d, j)) * sz[j];
  if (!options.decoupled) {
    for (int j = 0; j < n; ++j) {
      for (int l = 0; l < j; ++l) {
        const double J = d.J_cm[static_cast<std::size_t>(j)][static_cast<std::size_t>(l)];
        SparseOp hop = SparseOp(sm[j].adjoint()) * sm[l];
        h += J * (hop + SparseOp(hop.adjoint()));
      }
    }
  }
  h.prune(cplx(0.0, 0.0));
  gen.h_static = h;

  SparseOp drive(dim, dim);
  for (int j = 0; j < n; ++j) drive += d.Omega_cm[static_cast<std::size_t>(j)] * sx[j];
  drive.prune(cplx(0.0, 0.0));
  gen.h_driven.push_back({drive, [pulse](double t) { return pulse(t); }});
  gen.breakpoints = pulse.breakpoints();

  add_qubit_channels(gen, p);
  SparseOp coll(dim, dim);
  if (!options.decoupled) {
    for (int j = 0; j < n; ++j) coll += std::sqrt(d.gamma_cm[static_cast<std::size_t>(j)]) * sm[j];
  }
  coll.prune(cplx(0.0, 0.0));
  gen.jumps.push_back({ChannelKind::Collective, -1, "collective", coll});
  return gen;
}

GeneratorSpec build_full_displaced(const PhysicalParams& p, const PulseSchedule& pulse, int fluc_cutoff, FullFrame frame,
                                   double t_end) {
  if (fluc_cutoff < 2) throw ConfigError("fluc_cutoff: must be at least 2");
  if (frame == FullFrame::LabNonRWA && p.n_qubits > 2) {
    throw ConfigError("n_qubits: the lab-frame full model is limited to two qubits");
  }
  const DerivedParams d = derive(p);
  const int n = p.n_qubits;
  GeneratorSpec gen;
  gen.kind = GeneratorKind::FullDisplaced;
  gen.frame = frame;
  std::vector<int> dims{fluc_cutoff};
  dims.insert(dims.end(), static_cast<std::size_t>(n), 2);
  gen.layout = HilbertLayout(dims);
  gen.n_qubits = n;
  gen.first_qubit_site = 1;
  const Eigen::Index dim = gen.layout.total_dim();

  const SparseOp a = embedded(gen, local::annihilation(fluc_cutoff), 0);
  const SparseOp ad = SparseOp(a.adjoint());
  const SparseOp na = ad * a;
  std::vector<SparseOp> sm, sz, sx;
  for (int j = 0; j < n; ++j) {
    sm.push_back(embedded(gen, local::sigma_minus(), j + 1));
    sz.push_back(embedded(gen, local::sigma_z(), j + 1));
    sx.push_back(embedded(gen, local::sigma_x(), j + 1));
  }
  // Drive detuning of each qubit; under compensation it sits on its cavity-shifted resonance.
  std::vector<double> delta(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    const auto ju = static_cast<std::size_t>(j);
    delta[ju] = p.compensate ? d.delta_cm[ju] + (p.nominal_omega_q() - p.omega_q[ju]) : p.delta(j);
  }

  SparseOp h(dim, dim);
  SparseOp drive(dim, dim);
  if (frame == FullFrame::RotatingRWA) {
    h += (-p.Delta()) * na;
    for (int j = 0; j < n; ++j) {
      const auto ju = static_cast<std::size_t>(j);
      h += (-0.5 * delta[ju]) * sz[j];
      SparseOp x = ad * sm[j];
      h += p.g[ju] * (x + SparseOp(x.adjoint()));
      drive += d.Omega_cm[ju] * sx[j];
    }
    drive.prune(cplx(0.0, 0.0));
    gen.h_driven.push_back({drive, [pulse](double t) { return pulse(t); }});
  } else {
    if (!(t_end > 0.0)) throw ConfigError("build_full_displaced: lab frame needs a positive end time");
    h += p.omega_c * na;
    const SparseOp quad = a + ad;
    for (int j = 0; j < n; ++j) {
      const auto ju = static_cast<std::size_t>(j);
      h += (0.5 * (p.omega_d - delta[ju])) * sz[j];
      h += p.g[ju] * SparseOp(quad * sx[j]);
      drive += p.g[ju] * sx[j];
    }
    drive.prune(cplx(0.0, 0.0));
    auto alpha = std::make_shared<AlphaSolution>(p, pulse, t_end);
    gen.h_driven.push_back({drive, [alpha](double t) { return 2.0 * (*alpha)(t).real(); }});
  }
  h.prune(cplx(0.0, 0.0));
  gen.h_static = h;
  gen.breakpoints = pulse.breakpoints();

  add_qubit_channels(gen, p);
  SparseOp cav = std::sqrt(p.kappa) * a;
  cav.prune(cplx(0.0, 0.0));
  gen.jumps.push_back({ChannelKind::Cavity, -1, "cavity", cav});
  return gen;
}

PulseShape optimize_smooth_pulse(const PhysicalParams& params, double tau_r) {
  if (!(tau_r > 0.0)) throw ConfigError("tau_r: must be positive");
  const double target = derive(params).T_pi;
  if (!std::isfinite(target)) throw ConfigError("optimize_smooth_pulse: no cavity-mediated drive");
  auto area = [&](double T) {
    const PulseShape s = PulseShape::smooth(T, tau_r);
    const double end = s.support_end();
    const std::size_t n = 4000;
    const double h = end / static_cast<double>(n);
    double acc = s(0.0) + s(end);
    for (std::size_t i = 1; i < n; ++i) acc += (i % 2 ? 4.0 : 2.0) * s(h * static_cast<double>(i));
    return acc * h / 3.0;
  };
  double lo = 0.0, hi = target + 20.0 * tau_r;
  for (int it = 0; it < 200 && hi - lo > 1e-14 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (area(mid) < target ? lo : hi) = mid;
  }
  return PulseShape::smooth(0.5 * (lo + hi), tau_r);
}

}  // namespace cavsync
