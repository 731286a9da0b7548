#include "cavsync/integrator.hpp"

#include <algorithm>
#include <cmath>

namespace cavsync {

namespace {

constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784, a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200, e6 = 22.0 / 525,
                 e7 = -1.0 / 40;
constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

}  // namespace

std::vector<double> linspace(double a, double b, std::size_t n) {
  std::vector<double> out(n);
  if (n == 1) {
    out[0] = a;
    return out;
  }
  for (std::size_t i = 0; i < n; ++i) out[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
  out.back() = b;
  return out;
}

Dopri5::Dopri5(Rhs rhs, OdeOptions options) : rhs_(std::move(rhs)), opt_(options) {}

double Dopri5::clamp_time(double t) const {
  if (b_ <= a_) return t;
  const double lo = std::nextafter(a_, b_);
  const double hi = std::nextafter(b_, a_);
  if (lo > hi) return t;
  return std::clamp(t, lo, hi);
}

void Dopri5::eval(double t, const Vector& y, Vector& dy) {
  rhs_(clamp_time(t), y, dy);
  if (!dy.allFinite()) throw NumericError("integrator: non-finite derivative at t = " + std::to_string(t));
}

double Dopri5::error_norm(const Vector& err, const Vector& y0, const Vector& y1) const {
  double acc = 0.0;
  const Eigen::Index n = err.size();
  for (Eigen::Index i = 0; i < n; ++i) {
    const double sc = opt_.atol + opt_.rtol * std::max(std::abs(y0[i]), std::abs(y1[i]));
    const double r = std::abs(err[i]) / sc;
    acc += r * r;
  }
  return std::sqrt(acc / static_cast<double>(std::max<Eigen::Index>(n, 1)));
}

double Dopri5::initial_step() {
  // Hairer-Wanner starting step heuristic.
  const double span = b_ - a_;
  if (opt_.h_init > 0) return std::min(opt_.h_init, span);
  auto scaled = [&](const Vector& v) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      const double sc = opt_.atol + opt_.rtol * std::abs(y_[i]);
      acc += std::norm(v[i]) / (sc * sc);
    }
    return std::sqrt(acc / static_cast<double>(std::max<Eigen::Index>(v.size(), 1)));
  };
  const double dnf = scaled(k1_);
  const double dny = scaled(y_);
  double h = (dnf <= 1e-10 || dny <= 1e-10) ? 1e-6 * span : 0.01 * dny / dnf;
  h = std::min({h, opt_.max_step, span});
  ytmp_ = y_ + h * k1_;
  eval(t_ + h, ytmp_, k2_);
  Vector diff = (k2_ - k1_);
  const double der2 = scaled(diff) / h;
  const double der12 = std::max(der2, dnf);
  const double h1 = der12 <= 1e-15 ? std::max(1e-6 * span, h * 1e-3) : std::pow(0.01 / der12, 0.2);
  return std::min({100 * h, h1, opt_.max_step, span});
}

void Dopri5::start(double a, double b, const Vector& y0) {
  a_ = a;
  b_ = b;
  t_ = a;
  t_prev_ = a;
  y_ = y0;
  y_prev_ = y0;
  const Eigen::Index n = y0.size();
  for (Vector* v : {&k1_, &k2_, &k3_, &k4_, &k5_, &k6_, &k7_, &ytmp_, &ynew_, &err_}) v->resize(n);
  for (auto& r : rcont_) r.resize(n);
  eval(t_, y_, k1_);
  have_k1_ = true;
  h_ = (b > a) ? initial_step() : 0.0;
}

bool Dopri5::step() {
  if (t_ >= b_) return false;
  const double span = b_ - a_;
  const double min_h = 16.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(t_), std::abs(b_));
  for (;;) {
    if (++total_ > opt_.max_steps) throw NumericError("integrator: step budget exhausted");
    double h = std::min(h_, opt_.max_step);
    bool last = false;
    if (t_ + h >= b_ || (b_ - (t_ + h)) < 1e-12 * span) {
      h = b_ - t_;
      last = true;
    }
    if (h < min_h && !last) throw NumericError("integrator: step size underflow at t = " + std::to_string(t_));

    ytmp_ = y_ + h * (a21 * k1_);
    eval(t_ + c2 * h, ytmp_, k2_);
    ytmp_ = y_ + h * (a31 * k1_ + a32 * k2_);
    eval(t_ + c3 * h, ytmp_, k3_);
    ytmp_ = y_ + h * (a41 * k1_ + a42 * k2_ + a43 * k3_);
    eval(t_ + c4 * h, ytmp_, k4_);
    ytmp_ = y_ + h * (a51 * k1_ + a52 * k2_ + a53 * k3_ + a54 * k4_);
    eval(t_ + c5 * h, ytmp_, k5_);
    ytmp_ = y_ + h * (a61 * k1_ + a62 * k2_ + a63 * k3_ + a64 * k4_ + a65 * k5_);
    eval(t_ + h, ytmp_, k6_);
    ynew_ = y_ + h * (a71 * k1_ + a73 * k3_ + a74 * k4_ + a75 * k5_ + a76 * k6_);
    const double t_new = last ? b_ : t_ + h;
    eval(t_new, ynew_, k7_);
    err_ = h * (e1 * k1_ + e3 * k3_ + e4 * k4_ + e5 * k5_ + e6 * k6_ + e7 * k7_);
    const double err = error_norm(err_, y_, ynew_);
    if (!std::isfinite(err)) throw NumericError("integrator: non-finite error estimate");

    if (err <= 1.0) {
      rcont_[0] = y_;
      rcont_[1] = ynew_ - y_;
      rcont_[2] = h * k1_ - rcont_[1];
      rcont_[3] = rcont_[1] - h * k7_ - rcont_[2];
      rcont_[4] = h * (d1 * k1_ + d3 * k3_ + d4 * k4_ + d5 * k5_ + d6 * k6_ + d7 * k7_);
      y_prev_.swap(y_);
      y_.swap(ynew_);
      k1_.swap(k7_);
      t_prev_ = t_;
      t_ = t_new;
      ++accepted_;
      const double fac = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
      h_ = h * fac;
      return true;
    }
    ++rejected_;
    h_ = h * std::clamp(0.9 * std::pow(err, -0.2), 0.2, 1.0);
  }
}

void Dopri5::fixed_step(double t, const Vector& y, double h, Vector& out) {
  Vector k1(y.size()), k2(y.size()), k3(y.size()), k4(y.size()), k5(y.size()), k6(y.size()), tmp(y.size());
  eval(t, y, k1);
  tmp = y + h * (a21 * k1);
  eval(t + c2 * h, tmp, k2);
  tmp = y + h * (a31 * k1 + a32 * k2);
  eval(t + c3 * h, tmp, k3);
  tmp = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
  eval(t + c4 * h, tmp, k4);
  tmp = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
  eval(t + c5 * h, tmp, k5);
  tmp = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
  eval(t + h, tmp, k6);
  out = y + h * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
}

void Dopri5::dense(double t, Vector& out) const {
  const double h = t_ - t_prev_;
  if (h <= 0.0) {
    out = y_;
    return;
  }
  const double th = (t - t_prev_) / h;
  const double th1 = 1.0 - th;
  out = rcont_[0] + th * (rcont_[1] + th1 * (rcont_[2] + th * (rcont_[3] + th1 * rcont_[4])));
}

void integrate(const Dopri5::Rhs& rhs, Vector& y, double t0, double tf, const std::vector<double>& breakpoints,
               const std::vector<double>& samples, const std::function<void(std::size_t, double, const Vector&)>& observer,
               const OdeOptions& options, std::size_t* steps) {
  if (!(tf >= t0)) throw Error("integrate: tf must not precede t0");
  std::vector<double> cuts{t0};
  for (double b : breakpoints) {
    if (b > t0 && b < tf) cuts.push_back(b);
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  cuts.push_back(tf);

  std::size_t next = 0;
  while (next < samples.size() && samples[next] < t0) ++next;
  while (next < samples.size() && samples[next] == t0) {
    if (observer) observer(next, t0, y);
    ++next;
  }
  Dopri5 stepper(rhs, options);
  Vector tmp;
  std::size_t total = 0;
  for (std::size_t s = 0; s + 1 < cuts.size(); ++s) {
    const double a = cuts[s], b = cuts[s + 1];
    if (b <= a) continue;
    stepper.start(a, b, y);
    while (stepper.step()) {
      while (next < samples.size() && samples[next] <= stepper.t()) {
        if (observer) {
          if (samples[next] == stepper.t()) {
            observer(next, samples[next], stepper.y());
          } else {
            stepper.dense(samples[next], tmp);
            observer(next, samples[next], tmp);
          }
        }
        ++next;
      }
    }
    y = stepper.y();
  }
  total = stepper.accepted();
  if (steps) *steps = total;
}

LindbladKernel::LindbladKernel(const GeneratorSpec& gen) : dim_(gen.layout.total_dim()), breakpoints_(gen.breakpoints) {
  SparseOp damping(dim_, dim_);
  for (const auto& ch : gen.jumps) {
    jumps_.push_back(ch.op);
    jumps_adj_.push_back(SparseOp(ch.op.adjoint()));
    damping += SparseOp(ch.op.adjoint() * ch.op);
  }
  k0_ = gen.h_static - cplx(0.0, 0.5) * damping;
  k0_.prune(cplx(0.0, 0.0));
  for (const auto& term : gen.h_driven) {
    driven_.push_back(term.op);
    envelopes_.push_back(term.envelope);
  }
}

void LindbladKernel::drift(double t, const Eigen::Ref<const Matrix>& x, Eigen::Ref<Matrix> out, bool hermitian) const {
  Matrix kx = k0_ * x;
  for (std::size_t k = 0; k < driven_.size(); ++k) {
    const double env = envelopes_[k](t);
    if (env != 0.0) kx.noalias() += env * (driven_[k] * x);
  }
  if (hermitian) {
    out = -kI * (kx - kx.adjoint());
  } else {
    // X K^† = (K X^†)^†
    const Matrix xa = x.adjoint();
    Matrix kxa = k0_ * xa;
    for (std::size_t k = 0; k < driven_.size(); ++k) {
      const double env = envelopes_[k](t);
      if (env != 0.0) kxa.noalias() += env * (driven_[k] * xa);
    }
    out = -kI * (kx - kxa.adjoint());
  }
}

void LindbladKernel::add_sandwich(std::size_t q, const Eigen::Ref<const Matrix>& x, Eigen::Ref<Matrix> out) const {
  const Matrix cx = jumps_[q] * x;
  out.noalias() += cx * jumps_adj_[q];
}

void LindbladKernel::apply(double t, const Eigen::Ref<const Matrix>& x, Eigen::Ref<Matrix> out, bool hermitian) const {
  drift(t, x, out, hermitian);
  for (std::size_t q = 0; q < jumps_.size(); ++q) add_sandwich(q, x, out);
}

void LindbladKernel::effective_apply(double t, const Vector& psi, Vector& out) const {
  out.noalias() = k0_ * psi;
  for (std::size_t k = 0; k < driven_.size(); ++k) {
    const double env = envelopes_[k](t);
    if (env != 0.0) out.noalias() += env * (driven_[k] * psi);
  }
}

OdeOptions EvolutionSpec::ode() const {
  OdeOptions o;
  o.rtol = rel_tol;
  o.atol = abs_tol;
  o.max_step = max_step;
  return o;
}

const std::vector<cplx>& ObservableSeries::channel(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return values[i];
  }
  throw Error("ObservableSeries: no channel named " + name);
}

namespace {

void check_spec(const EvolutionSpec& spec) {
  if (!(spec.t0 < spec.tf)) throw ConfigError("evolve: t0 must be below tf");
  if (!std::is_sorted(spec.samples.begin(), spec.samples.end())) throw ConfigError("evolve: samples must be sorted");
  for (double s : spec.samples) {
    if (s < spec.t0 || s > spec.tf) throw ConfigError("evolve: sample outside [t0, tf]");
  }
}

Dopri5::Rhs density_rhs(const LindbladKernel& kernel) {
  const Eigen::Index d = kernel.dim();
  return [&kernel, d](double t, const Vector& y, Vector& dy) {
    Eigen::Map<const Matrix> x(y.data(), d, d);
    Eigen::Map<Matrix> out(dy.data(), d, d);
    kernel.apply(t, x, out, true);
  };
}

void check_trace(const Matrix& rho, double t) {
  const double drift = std::abs(rho.trace() - 1.0);
  if (drift > 1e-8) {
    throw NumericError("evolve: trace drift " + std::to_string(drift) + " at t = " + std::to_string(t));
  }
}

}  // namespace

EvolutionResult evolve(const GeneratorSpec& gen, const DensityState& rho0, const EvolutionSpec& spec) {
  if (!(rho0.layout() == gen.layout)) throw DimensionError("evolve: state layout does not match generator");
  check_spec(spec);
  const LindbladKernel kernel(gen);
  const Eigen::Index d = kernel.dim();
  Vector y = Eigen::Map<const Vector>(rho0.rho().data(), d * d);
  EvolutionResult result;
  result.snapshots.reserve(spec.samples.size());
  integrate(
      density_rhs(kernel), y, spec.t0, spec.tf, gen.breakpoints, spec.samples,
      [&](std::size_t, double t, const Vector& v) {
        Matrix m = Eigen::Map<const Matrix>(v.data(), d, d);
        check_trace(m, t);
        result.snapshots.emplace_back(gen.layout, std::move(m));
      },
      spec.ode(), &result.steps);
  Matrix fin = Eigen::Map<const Matrix>(y.data(), d, d);
  check_trace(fin, spec.tf);
  result.final_state = DensityState(gen.layout, std::move(fin));
  return result;
}

ObservableSeries evolve_observables(const GeneratorSpec& gen, const DensityState& rho0, const EvolutionSpec& spec,
                                    const std::vector<std::pair<std::string, ComplexOperator>>& ops) {
  if (!(rho0.layout() == gen.layout)) throw DimensionError("evolve_observables: state layout does not match generator");
  check_spec(spec);
  for (const auto& [name, op] : ops) {
    if (!(op.layout() == gen.layout)) throw DimensionError("evolve_observables: layout mismatch for " + name);
  }
  const LindbladKernel kernel(gen);
  const Eigen::Index d = kernel.dim();
  ObservableSeries series;
  series.times = spec.samples;
  for (const auto& [name, op] : ops) {
    series.names.push_back(name);
    series.values.emplace_back(spec.samples.size());
  }
  Vector y = Eigen::Map<const Vector>(rho0.rho().data(), d * d);
  integrate(
      density_rhs(kernel), y, spec.t0, spec.tf, gen.breakpoints, spec.samples,
      [&](std::size_t i, double t, const Vector& v) {
        Eigen::Map<const Matrix> rho(v.data(), d, d);
        check_trace(rho, t);
        for (std::size_t k = 0; k < ops.size(); ++k) {
          series.values[k][i] = ops[k].second.entries().transpose().cwiseProduct(rho).sum();
        }
      },
      spec.ode());
  return series;
}

void propagate(const LindbladKernel& kernel, Matrix& x, double t0, double t1, const std::vector<double>& samples,
               const std::function<void(std::size_t, double, const Eigen::Ref<const Matrix>&)>& observer,
               const OdeOptions& options, bool hermitian) {
  const Eigen::Index d = kernel.dim();
  Vector y = Eigen::Map<const Vector>(x.data(), d * d);
  auto rhs = [&kernel, d, hermitian](double t, const Vector& v, Vector& dv) {
    Eigen::Map<const Matrix> m(v.data(), d, d);
    Eigen::Map<Matrix> out(dv.data(), d, d);
    kernel.apply(t, m, out, hermitian);
  };
  integrate(
      rhs, y, t0, t1, kernel.breakpoints(), samples,
      [&](std::size_t i, double t, const Vector& v) {
        if (observer) observer(i, t, Eigen::Map<const Matrix>(v.data(), d, d));
      },
      options);
  x = Eigen::Map<const Matrix>(y.data(), d, d);
}

}  // namespace cavsync
