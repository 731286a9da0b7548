#pragma once

#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "cavsync/algebra.hpp"
#include "cavsync/model.hpp"

namespace cavsync {

struct OdeOptions {
  double rtol = 1e-8;
  double atol = 1e-10;
  double max_step = std::numeric_limits<double>::infinity();
  double h_init = 0.0;  // 0 selects the starting step automatically
  std::size_t max_steps = 50'000'000;
};

/// Dormand-Prince 5(4) stepper on a flat complex vector, with the 4th-order continuous extension.
///
/// The stepper works inside one smooth segment [a, b]. Right-hand-side times are
/// nudged one ulp into the open segment so one-sided limits of piecewise-defined
/// drives are respected at the segment ends.
class Dopri5 {
 public:
  using Rhs = std::function<void(double t, const Vector& y, Vector& dy)>;

  Dopri5(Rhs rhs, OdeOptions options);

  void start(double a, double b, const Vector& y0);
  // Advance by one accepted step, never past b. Returns false once t == b.
  bool step();
  // Single step of size h from (t, y) without error control.
  void fixed_step(double t, const Vector& y, double h, Vector& out);
  // Continuous extension on the last accepted step, t in [t_prev, t].
  void dense(double t, Vector& out) const;

  double t() const { return t_; }
  double t_prev() const { return t_prev_; }
  const Vector& y() const { return y_; }
  const Vector& y_prev() const { return y_prev_; }
  std::size_t accepted() const { return accepted_; }
  std::size_t rejected() const { return rejected_; }
  // Coefficients of the continuous extension on the last step (5 vectors).
  const Vector* dense_coefficients() const { return rcont_; }

 private:
  double clamp_time(double t) const;
  void eval(double t, const Vector& y, Vector& dy);
  double initial_step();
  double error_norm(const Vector& err, const Vector& y0, const Vector& y1) const;

  Rhs rhs_;
  OdeOptions opt_;
  double a_ = 0, b_ = 0, t_ = 0, t_prev_ = 0, h_ = 0;
  Vector y_, y_prev_, k1_, k2_, k3_, k4_, k5_, k6_, k7_, ytmp_, ynew_, err_;
  Vector rcont_[5];
  std::size_t accepted_ = 0, rejected_ = 0, total_ = 0;
  bool have_k1_ = false;
};

/// Integrate across [t0, tf] split at `breakpoints`; `observer(t, y)` fires at every sample time.
void integrate(const Dopri5::Rhs& rhs, Vector& y, double t0, double tf, const std::vector<double>& breakpoints,
               const std::vector<double>& samples, const std::function<void(std::size_t, double, const Vector&)>& observer,
               const OdeOptions& options, std::size_t* steps = nullptr);

/// Compiled Lindblad superoperator: X -> -i(K X - X K^†) + sum_q c_q X c_q^†, K = H - (i/2) sum c^†c.
class LindbladKernel {
 public:
  explicit LindbladKernel(const GeneratorSpec& gen);

  Eigen::Index dim() const { return dim_; }
  std::size_t n_jumps() const { return jumps_.size(); }
  const std::vector<double>& breakpoints() const { return breakpoints_; }

  // out = -i(K(t) X - X K(t)^†); `hermitian` promises X = X^†.
  void drift(double t, const Eigen::Ref<const Matrix>& x, Eigen::Ref<Matrix> out, bool hermitian) const;
  // out += c_q X c_q^†
  void add_sandwich(std::size_t q, const Eigen::Ref<const Matrix>& x, Eigen::Ref<Matrix> out) const;
  void apply(double t, const Eigen::Ref<const Matrix>& x, Eigen::Ref<Matrix> out, bool hermitian) const;
  // K(t) psi
  void effective_apply(double t, const Vector& psi, Vector& out) const;
  const SparseOp& jump(std::size_t q) const { return jumps_[q]; }

 private:
  Eigen::Index dim_ = 0;
  SparseOp k0_;
  std::vector<SparseOp> driven_;
  std::vector<std::function<double(double)>> envelopes_;
  std::vector<SparseOp> jumps_, jumps_adj_;
  std::vector<double> breakpoints_;
};

struct EvolutionSpec {
  double t0 = 0.0;
  double tf = 1.0;
  std::vector<double> samples;
  double rel_tol = 1e-8;
  double abs_tol = 1e-10;
  double max_step = std::numeric_limits<double>::infinity();

  OdeOptions ode() const;
};

struct EvolutionResult {
  DensityState final_state;
  std::vector<DensityState> snapshots;
  std::size_t steps = 0;
};

struct ObservableSeries {
  std::vector<double> times;
  std::vector<std::string> names;
  std::vector<std::vector<cplx>> values;  // [channel][sample]

  const std::vector<cplx>& channel(const std::string& name) const;
};

EvolutionResult evolve(const GeneratorSpec& gen, const DensityState& rho0, const EvolutionSpec& spec);

ObservableSeries evolve_observables(const GeneratorSpec& gen, const DensityState& rho0, const EvolutionSpec& spec,
                                    const std::vector<std::pair<std::string, ComplexOperator>>& ops);

/// Propagate an arbitrary (not necessarily Hermitian or unit-trace) operator under the generator.
void propagate(const LindbladKernel& kernel, Matrix& x, double t0, double t1, const std::vector<double>& samples,
               const std::function<void(std::size_t, double, const Eigen::Ref<const Matrix>&)>& observer,
               const OdeOptions& options, bool hermitian);

std::vector<double> linspace(double a, double b, std::size_t n);

}  // namespace cavsync
