#pragma once

#include <functional>
#include <vector>

#include "cavsync/integrator.hpp"
#include "cavsync/model.hpp"

namespace cavsync {

struct PulseTrainSpec {
  int n_pulses = 1;
  double R = 0.0;  // repetition rate; period 1/R
  PulseShape pulse;

  double period() const { return 1.0 / R; }
  PulseSchedule schedule() const { return {pulse, n_pulses, period()}; }
  void validate() const;
};

/// Default train for a parameter set: square pi-pulse, R = mean(gamma)/15.
PulseTrainSpec default_train(const PhysicalParams& params, int n_pulses = 1);

/// Piecewise-uniform sampling: `n_on` intervals across each pulse, `n_off` intervals across the rest of a period.
struct CorrelationGrid {
  int n_on = 60;
  int n_off = 240;

  CorrelationGrid doubled() const { return {2 * n_on, 2 * n_off}; }
  // Sample times covering [0, t_end], refined inside every pulse of the train.
  std::vector<double> times(const PulseTrainSpec& train, double t_end) const;
};

struct TwoTimeTable {
  std::vector<double> t;
  std::vector<std::vector<double>> tau;   // per t
  std::vector<std::vector<cplx>> value;   // per t, per tau
};

/// <A(t) B(t+tau) C(t+tau) D(t)> via the regression theorem.
/// `tau_of(t)` gives the (sorted, starting at 0) delays sampled for each t.
TwoTimeTable two_time(const GeneratorSpec& gen, const DensityState& rho0, const ComplexOperator& A,
                      const ComplexOperator& B, const ComplexOperator& C, const ComplexOperator& D,
                      const std::vector<double>& t_grid, const std::function<std::vector<double>(double)>& tau_of,
                      const OdeOptions& options = {}, int threads = 1);

enum class HomOrdering { AntisymmetricFirst, SymmetricFirst, Symmetrized };

struct G2Options {
  CorrelationGrid grid;
  bool check_convergence = true;
  int threads = 1;
  HomOrdering ordering = HomOrdering::AntisymmetricFirst;
  OdeOptions ode{1e-9, 1e-12};
};

struct G2Result {
  double value = 0.0;
  double numerator = 0.0;
  double denominator = 0.0;
  double max_imag = 0.0;        // largest imaginary residue of the integrand
  double min_integrand = 0.0;   // most negative real integrand value
  double refined_value = 0.0;   // value on the doubled grid (if checked)
  double convergence = 0.0;     // |refined - value| / |refined|
};

/// Zero-delay HBT value of antenna j. `gen` must carry the pulse train.
G2Result g2_hbt_zero(const GeneratorSpec& gen, const PulseTrainSpec& train, int j, const G2Options& options = {});
/// Zero-delay HOM value of antennas j and l after a balanced beam splitter.
G2Result g2_hom_zero(const GeneratorSpec& gen, const PulseTrainSpec& train, int j, int l,
                     const G2Options& options = {});

struct CurvePoint {
  double tau;
  double value;
};

/// Unnormalised G(tau) = integral over the first period of the two-time correlator, tau in [0, tau_max].
std::vector<CurvePoint> g2_hbt_curve(const GeneratorSpec& gen, const PulseTrainSpec& train, int j,
                                     std::size_t n_tau, const G2Options& options = {});
std::vector<CurvePoint> g2_hom_curve(const GeneratorSpec& gen, const PulseTrainSpec& train, int j, int l,
                                     std::size_t n_tau, const G2Options& options = {});

double trapezoid(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace cavsync
