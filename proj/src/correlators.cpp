#include "cavsync/correlators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cavsync/parallel.hpp"

namespace cavsync {

void PulseTrainSpec::validate() const {
  if (n_pulses < 1) throw ConfigError("n_pulses: at least one pulse required");
  if (!(R > 0.0)) throw ConfigError("R: repetition rate must be positive");
  if (!(period() > pulse.support_end())) throw ConfigError("R: period must exceed the pulse duration");
}

PulseTrainSpec default_train(const PhysicalParams& params, int n_pulses) {
  const DerivedParams d = derive(params);
  const double gamma = std::accumulate(params.gamma.begin(), params.gamma.end(), 0.0) / params.n_qubits;
  if (!(gamma > 0.0)) throw ConfigError("gamma: must be positive for a pulse train");
  return {n_pulses, gamma / 15.0, PulseShape::square(d.T_pi)};
}

std::vector<double> CorrelationGrid::times(const PulseTrainSpec& train, double t_end) const {
  if (n_on < 1 || n_off < 1) throw ConfigError("correlation grid: counts must be positive");
  const double P = train.period();
  const double on = train.pulse.support_end();
  std::vector<double> out;
  for (int k = 0; k * P < t_end; ++k) {
    const double base = k * P;
    if (k < train.n_pulses) {
      for (int i = 0; i < n_on; ++i) out.push_back(base + on * i / n_on);
      for (int i = 0; i < n_off; ++i) out.push_back(base + on + (P - on) * i / n_off);
    } else {
      for (int i = 0; i < n_off; ++i) out.push_back(base + P * i / n_off);
    }
  }
  while (!out.empty() && out.back() >= t_end) out.pop_back();
  out.push_back(t_end);
  return out;
}

double trapezoid(const std::vector<double>& x, const std::vector<double>& y) {
  double acc = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i) acc += 0.5 * (x[i] - x[i - 1]) * (y[i] + y[i - 1]);
  return acc;
}

TwoTimeTable two_time(const GeneratorSpec& gen, const DensityState& rho0, const ComplexOperator& A,
                      const ComplexOperator& B, const ComplexOperator& C, const ComplexOperator& D,
                      const std::vector<double>& t_grid, const std::function<std::vector<double>(double)>& tau_of,
                      const OdeOptions& options, int threads) {
  for (const ComplexOperator* op : {&A, &B, &C, &D}) {
    if (!(op->layout() == gen.layout)) throw DimensionError("two_time: operator layout mismatch");
  }
  if (!(rho0.layout() == gen.layout)) throw DimensionError("two_time: state layout mismatch");
  if (t_grid.empty()) return {};
  if (!std::is_sorted(t_grid.begin(), t_grid.end()) || t_grid.front() < 0.0) {
    throw ConfigError("two_time: t grid must be sorted and non-negative");
  }
  const LindbladKernel kernel(gen);
  const Eigen::Index d = kernel.dim();

  std::vector<Matrix> states(t_grid.size());
  Matrix rho = rho0.rho();
  propagate(
      kernel, rho, 0.0, std::max(t_grid.back(), 0.0), t_grid,
      [&](std::size_t i, double, const Eigen::Ref<const Matrix>& m) { states[i] = m; }, options, true);

  const Matrix bc_t = (B.entries() * C.entries()).transpose();
  TwoTimeTable table;
  table.t = t_grid;
  table.tau.resize(t_grid.size());
  table.value.resize(t_grid.size());
  parallel_for(t_grid.size(), threads, [&](std::size_t i) {
    const double t = t_grid[i];
    std::vector<double> taus = tau_of(t);
    if (taus.empty()) return;
    std::vector<double> abs_times(taus.size());
    for (std::size_t k = 0; k < taus.size(); ++k) abs_times[k] = t + taus[k];
    abs_times.back() = std::max(abs_times.back(), t);
    Matrix x = D.entries() * states[i] * A.entries();
    std::vector<cplx> vals(taus.size(), 0.0);
    if (taus.back() <= 0.0) {
      vals.assign(taus.size(), bc_t.cwiseProduct(x).sum());
    } else {
      propagate(
          kernel, x, t, abs_times.back(), abs_times,
          [&](std::size_t k, double, const Eigen::Ref<const Matrix>& m) { vals[k] = bc_t.cwiseProduct(m).sum(); },
          options, false);
    }
    (void)d;
    table.tau[i] = std::move(taus);
    table.value[i] = std::move(vals);
  });
  return table;
}

namespace {

struct Correlator {
  Matrix a, b, c, d;  // <a(t) b(t+tau) c(t+tau) d(t)>
};

struct ZeroDelayParts {
  double numerator = 0.0;
  double max_imag = 0.0;
  double min_integrand = 0.0;
};

std::vector<double> window(const std::vector<double>& grid, double lo, double hi) {
  std::vector<double> out{0.0};
  for (double g : grid) {
    if (g > lo && g < hi) out.push_back(g - lo);
  }
  out.push_back(hi - lo);
  return out;
}

// One-sided numerator integral per pulse over tau in [0, 1/(2R)].
ZeroDelayParts zero_delay_numerator(const GeneratorSpec& gen, const PulseTrainSpec& train, const Correlator& corr,
                                    const G2Options& opt, const CorrelationGrid& grid) {
  const double P = train.period();
  const double tau_max = 0.5 * P;
  const double t_end = train.n_pulses * P;
  const std::vector<double> t_grid = grid.times(train, t_end);
  const std::vector<double> abs_grid = grid.times(train, t_end + tau_max);
  auto tau_of = [&](double t) { return window(abs_grid, t, t + tau_max); };
  const ComplexOperator A(gen.layout, corr.a), B(gen.layout, corr.b), C(gen.layout, corr.c), D(gen.layout, corr.d);
  const TwoTimeTable table = two_time(gen, gen.ground_state(), A, B, C, D, t_grid, tau_of, opt.ode, opt.threads);
  ZeroDelayParts parts;
  std::vector<double> inner(t_grid.size());
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    std::vector<double> re(table.value[i].size());
    for (std::size_t k = 0; k < re.size(); ++k) {
      re[k] = table.value[i][k].real();
      parts.max_imag = std::max(parts.max_imag, std::abs(table.value[i][k].imag()));
      parts.min_integrand = std::min(parts.min_integrand, re[k]);
    }
    inner[i] = trapezoid(table.tau[i], re);
  }
  parts.numerator = trapezoid(t_grid, inner) / train.n_pulses;
  return parts;
}

// Emission integral of <op> over the first half period.
double first_period_emission(const GeneratorSpec& gen, const PulseTrainSpec& train, const Matrix& number,
                             const G2Options& opt, const CorrelationGrid& grid) {
  const double half = 0.5 * train.period();
  const std::vector<double> ts = window(grid.times(train, half), 0.0, half);
  const LindbladKernel kernel(gen);
  Matrix rho = gen.ground_state().rho();
  const Matrix nt = number.transpose();
  std::vector<double> vals(ts.size());
  propagate(
      kernel, rho, 0.0, half, ts,
      [&](std::size_t i, double, const Eigen::Ref<const Matrix>& m) { vals[i] = nt.cwiseProduct(m).sum().real(); },
      opt.ode, true);
  return trapezoid(ts, vals);
}

void check_train(const GeneratorSpec& gen, const PulseTrainSpec& train) {
  if (gen.kind != GeneratorKind::EffectiveRWA) throw Error("correlators: effective generator required");
  train.validate();
}

Matrix antenna(const GeneratorSpec& gen, int j) {
  if (j < 0 || j >= gen.n_qubits) throw DimensionError("correlators: channel index out of range");
  return Matrix(gen.jumps[static_cast<std::size_t>(gen.channel_index(ChannelKind::Antenna, j))].op);
}

template <class Eval>
G2Result with_convergence(const G2Options& opt, Eval&& eval) {
  G2Result r = eval(opt.grid);
  if (opt.check_convergence) {
    const G2Result fine = eval(opt.grid.doubled());
    r.refined_value = fine.value;
    r.convergence = std::abs(fine.value - r.value) / std::max(std::abs(fine.value), 1e-300);
  }
  return r;
}

}  // namespace

G2Result g2_hbt_zero(const GeneratorSpec& gen, const PulseTrainSpec& train, int j, const G2Options& options) {
  check_train(gen, train);
  const Matrix c = antenna(gen, j);
  const Matrix cd = c.adjoint();
  return with_convergence(options, [&](const CorrelationGrid& grid) {
    const ZeroDelayParts parts = zero_delay_numerator(gen, train, {cd, cd, c, c}, options, grid);
    const double emission = first_period_emission(gen, train, cd * c, options, grid);
    G2Result r;
    // Symmetric in tau, so the two-sided window is twice the one-sided integral.
    r.numerator = 2.0 * parts.numerator;
    r.denominator = emission * emission;
    r.value = r.numerator / r.denominator;
    r.max_imag = parts.max_imag;
    r.min_integrand = parts.min_integrand;
    return r;
  });
}

G2Result g2_hom_zero(const GeneratorSpec& gen, const PulseTrainSpec& train, int j, int l, const G2Options& options) {
  check_train(gen, train);
  if (j == l) throw ConfigError("g2_hom_zero: channels must differ");
  const Matrix cj = antenna(gen, j), cl = antenna(gen, l);
  const Matrix xi1 = (cj + cl) / std::sqrt(2.0);
  const Matrix xi2 = (cj - cl) / std::sqrt(2.0);
  const Matrix n1 = xi1.adjoint() * xi1, n2 = xi2.adjoint() * xi2;
  return with_convergence(options, [&](const CorrelationGrid& grid) {
    auto ordered = [&](const Matrix& first, const Matrix& second) {
      return zero_delay_numerator(gen, train, {first.adjoint(), second.adjoint(), second, first}, options, grid);
    };
    G2Result r;
    ZeroDelayParts parts;
    switch (options.ordering) {
      case HomOrdering::AntisymmetricFirst:
        parts = ordered(xi2, xi1);
        r.numerator = 2.0 * parts.numerator;
        break;
      case HomOrdering::SymmetricFirst:
        parts = ordered(xi1, xi2);
        r.numerator = 2.0 * parts.numerator;
        break;
      case HomOrdering::Symmetrized: {
        const ZeroDelayParts a = ordered(xi2, xi1), b = ordered(xi1, xi2);
        r.numerator = a.numerator + b.numerator;
        parts.max_imag = std::max(a.max_imag, b.max_imag);
        parts.min_integrand = std::min(a.min_integrand, b.min_integrand);
        break;
      }
    }
    r.denominator = first_period_emission(gen, train, n1, options, grid) *
                    first_period_emission(gen, train, n2, options, grid);
    r.value = r.numerator / r.denominator;
    r.max_imag = parts.max_imag;
    r.min_integrand = parts.min_integrand;
    return r;
  });
}

namespace {

std::vector<CurvePoint> curve(const GeneratorSpec& gen, const PulseTrainSpec& train, const Correlator& corr,
                              std::size_t n_tau, const G2Options& opt) {
  if (n_tau < 2) throw ConfigError("curve: at least two delay samples required");
  const double P = train.period();
  const double tau_max = (train.n_pulses - 1) * P + 0.5 * P;
  const std::vector<double> t_grid = opt.grid.times(train, P);
  const std::vector<double> taus = linspace(0.0, tau_max, n_tau);
  const ComplexOperator A(gen.layout, corr.a), B(gen.layout, corr.b), C(gen.layout, corr.c), D(gen.layout, corr.d);
  const TwoTimeTable table =
      two_time(gen, gen.ground_state(), A, B, C, D, t_grid, [&](double) { return taus; }, opt.ode, opt.threads);
  std::vector<CurvePoint> out(n_tau);
  std::vector<double> column(t_grid.size());
  for (std::size_t k = 0; k < n_tau; ++k) {
    for (std::size_t i = 0; i < t_grid.size(); ++i) column[i] = table.value[i][k].real();
    out[k] = {taus[k], trapezoid(t_grid, column)};
  }
  return out;
}

}  // namespace

std::vector<CurvePoint> g2_hbt_curve(const GeneratorSpec& gen, const PulseTrainSpec& train, int j, std::size_t n_tau,
                                     const G2Options& options) {
  check_train(gen, train);
  const Matrix c = antenna(gen, j);
  return curve(gen, train, {c.adjoint(), c.adjoint(), c, c}, n_tau, options);
}

std::vector<CurvePoint> g2_hom_curve(const GeneratorSpec& gen, const PulseTrainSpec& train, int j, int l,
                                     std::size_t n_tau, const G2Options& options) {
  check_train(gen, train);
  if (j == l) throw ConfigError("g2_hom_curve: channels must differ");
  const Matrix cj = antenna(gen, j), cl = antenna(gen, l);
  const Matrix xi1 = (cj + cl) / std::sqrt(2.0);
  const Matrix xi2 = (cj - cl) / std::sqrt(2.0);
  Correlator corr{xi2.adjoint(), xi1.adjoint(), xi1, xi2};
  if (options.ordering == HomOrdering::SymmetricFirst) corr = {xi1.adjoint(), xi2.adjoint(), xi2, xi1};
  return curve(gen, train, corr, n_tau, options);
}

}  // namespace cavsync
