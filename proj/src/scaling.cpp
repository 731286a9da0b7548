#include "cavsync/scaling.hpp"

#include <cmath>
#include <random>

#include "cavsync/parallel.hpp"

namespace cavsync {

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Moments {
  double mean = 0.0, se = 0.0;
};

Moments moments(const std::vector<double>& x) {
  Moments m;
  const double n = static_cast<double>(x.size());
  if (x.empty()) return m;
  for (double v : x) m.mean += v;
  m.mean /= n;
  if (x.size() > 1) {
    double ss = 0.0;
    for (double v : x) ss += (v - m.mean) * (v - m.mean);
    m.se = std::sqrt(ss / (n - 1.0) / n);
  }
  return m;
}

void require_homogeneous(const PhysicalParams& p) {
  for (const auto* v : {&p.g, &p.gamma}) {
    for (double x : *v) {
      if (x != v->front()) throw Error("epsilon_analytic: homogeneous couplings and decay rates required");
    }
  }
}

double epsilon_shape(const PhysicalParams& p) {
  const double g = p.g.front(), gam = p.gamma.front();
  if (!(gam > 0.0)) throw Error("epsilon_analytic: gamma must be positive");
  const double den = 0.25 * p.kappa * p.kappa + p.Delta() * p.Delta();
  return std::pow(g, 4) / (gam * gam) * p.kappa / std::pow(den, 1.5);
}

}  // namespace

std::vector<DnPoint> dn_curve(const PhysicalParams& params, int N_max, const ScalingOptions& options) {
  if (N_max < 1) throw ConfigError("N_max: must be at least 1");
  const double gamma = params.gamma.at(0);
  if (!(gamma > 0.0)) throw ConfigError("gamma: must be positive");
  std::vector<DnPoint> out(static_cast<std::size_t>(N_max));
  parallel_for(out.size(), options.threads, [&](std::size_t i) {
    const int N = static_cast<int>(i) + 1;
    const PhysicalParams p = params.replicated(N);
    const GeneratorSpec gen =
        build_effective(p, PulseShape::square(derive(p).T_pi), EffectiveOptions{options.decoupled});
    const CountingState st = count_photons(gen, CounterConfig{options.n_c, {}}, options.t_final_gamma / gamma,
                                           options.counting);
    const PhotonStats stats = read_stats(st);
    check_overflow(stats, options.n_c, options.counting.overflow_limit);
    DnPoint pt;
    pt.N = N;
    pt.P_N = stats.p_all_one;
    const double prod = stats.product_p1();
    pt.P_1 = std::pow(prod, 1.0 / N);
    pt.D_N = N == 1 ? 0.0 : pt.P_N / prod - 1.0;
    pt.overflow = stats.overflow;
    out[i] = pt;
  });
  return out;
}

FitResult fit_epsilon(const std::vector<std::pair<int, double>>& curve, double max_dn) {
  std::size_t eligible = 0;
  for (const auto& [N, D] : curve) eligible += N >= 2;
  if (eligible < 2) throw Error("fit_epsilon: at least two points with N >= 2 required");
  FitResult fit;
  fit.max_dn = max_dn;
  double sxy = 0.0, sxx = 0.0;
  for (const auto& [N, D] : curve) {
    if (N < 2) continue;
    if (!(D < max_dn)) {
      fit.valid = false;
      continue;
    }
    const double x = static_cast<double>(N) * (N - 1);
    sxy += x * D;
    sxx += x * x;
    fit.used.push_back(N);
  }
  if (fit.used.empty()) throw Error("fit_epsilon: every point lies outside the validity region");
  fit.epsilon = sxy / sxx;
  for (const auto& [N, D] : curve) fit.residuals.push_back(D - fit.epsilon * N * (N - 1.0));
  return fit;
}

double epsilon_analytic(const PhysicalParams& params, double prefactor) {
  require_homogeneous(params);
  return prefactor * epsilon_shape(params);
}

double refit_prefactor(const std::vector<std::pair<PhysicalParams, double>>& fitted) {
  if (fitted.empty()) throw Error("refit_prefactor: no data");
  // Relative least squares: minimise sum (c s_i / e_i - 1)^2.
  double num = 0.0, den = 0.0;
  for (const auto& [p, eps] : fitted) {
    require_homogeneous(p);
    const double r = epsilon_shape(p) / eps;
    num += r;
    den += r * r;
  }
  return num / den;
}

double generation_rate(double P_N, double R) {
  if (!(R > 0.0)) throw ConfigError("R: must be positive");
  return R * P_N;
}

double extrapolate_PN(double P_1, double epsilon, int N) {
  return std::pow(P_1, N) * (1.0 + epsilon * N * (N - 1.0));
}

DisorderTarget parse_disorder_target(const std::string& name) {
  if (name == "omega_q") return DisorderTarget::OmegaQ;
  if (name == "g") return DisorderTarget::G;
  if (name == "gamma") return DisorderTarget::Gamma;
  if (name == "gamma_phi") return DisorderTarget::GammaPhi;
  if (name == "gamma_loss") return DisorderTarget::GammaLoss;
  throw ConfigError("disorder target: unknown parameter '" + name + "'");
}

std::string to_string(DisorderTarget target) {
  switch (target) {
    case DisorderTarget::OmegaQ: return "omega_q";
    case DisorderTarget::G: return "g";
    case DisorderTarget::Gamma: return "gamma";
    case DisorderTarget::GammaPhi: return "gamma_phi";
    case DisorderTarget::GammaLoss: return "gamma_loss";
  }
  return "unknown";
}

PhysicalParams sample_disorder(const PhysicalParams& base, const DisorderSpec& spec, std::uint64_t index) {
  if (!(spec.sigma >= 0.0)) throw ConfigError("sigma: must be non-negative");
  PhysicalParams out = base;
  std::vector<double>* field = nullptr;
  bool positive = true;
  switch (spec.target) {
    case DisorderTarget::OmegaQ:
      field = &out.omega_q;
      positive = false;
      out.omega_q_nominal = base.nominal_omega_q();
      break;
    case DisorderTarget::G: field = &out.g; break;
    case DisorderTarget::Gamma: field = &out.gamma; break;
    case DisorderTarget::GammaPhi: field = &out.gamma_phi; break;
    case DisorderTarget::GammaLoss: field = &out.gamma_loss; break;
  }
  if (spec.sigma == 0.0) return out;
  std::seed_seq seq{static_cast<std::uint32_t>(spec.seed), static_cast<std::uint32_t>(spec.seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32), 0x6469u};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> normal(0.0, spec.sigma);
  for (double& y : *field) {
    const double y0 = y;
    int attempts = 0;
    do {
      if (++attempts > 100) throw NumericError("sample_disorder: resample budget exhausted");
      y = y0 + normal(rng);
    } while (positive && y < 0.0);
  }
  return out;
}

DisorderAverages disorder_average(const PhysicalParams& base, const DisorderSpec& spec, int N,
                                  const ScalingOptions& options) {
  if (N < 1) throw ConfigError("N: must be at least 1");
  if (spec.M < 1) throw ConfigError("M: at least one realization required");
  const PhysicalParams homogeneous = base.replicated(N);
  const double gamma = homogeneous.gamma.at(0);
  if (!(gamma > 0.0)) throw ConfigError("gamma: must be positive");
  // Pulse length and window are fixed by the nominal parameters.
  const double T = derive(homogeneous).T_pi;
  const double t_f = options.t_final_gamma / gamma;

  DisorderAverages avg;
  avg.N = N;
  avg.realizations.resize(spec.M);
  parallel_for(spec.M, options.threads, [&](std::size_t m) {
    const PhysicalParams p = sample_disorder(homogeneous, spec, m);
    const GeneratorSpec gen = build_effective(p, PulseShape::square(T), EffectiveOptions{options.decoupled});
    const PhotonStats stats = read_stats(count_photons(gen, CounterConfig{options.n_c, {}}, t_f, options.counting));
    check_overflow(stats, options.n_c, options.counting.overflow_limit);
    DisorderRealization r;
    switch (spec.target) {
      case DisorderTarget::OmegaQ: r.values = p.omega_q; break;
      case DisorderTarget::G: r.values = p.g; break;
      case DisorderTarget::Gamma: r.values = p.gamma; break;
      case DisorderTarget::GammaPhi: r.values = p.gamma_phi; break;
      case DisorderTarget::GammaLoss: r.values = p.gamma_loss; break;
    }
    for (const auto& pn : stats.p_n) r.p1.push_back(pn[1]);
    r.P_N = stats.p_all_one;
    avg.realizations[m] = std::move(r);
  });

  std::vector<double> pn, p1;
  for (const auto& r : avg.realizations) {
    pn.push_back(r.P_N);
    double s = 0.0;
    for (double x : r.p1) s += x;
    p1.push_back(s / static_cast<double>(r.p1.size()));
  }
  const Moments a = moments(pn), b = moments(p1);
  avg.avg_PN = a.mean;
  avg.se_PN = a.se;
  avg.avg_P1 = b.mean;
  avg.se_P1 = b.se;
  avg.avg_DN = avg.avg_PN / std::pow(avg.avg_P1, N) - 1.0;
  // Delta method with the sample covariance of (P_N, P_1).
  double cov = 0.0;
  const double M = static_cast<double>(spec.M);
  if (spec.M > 1) {
    for (std::size_t m = 0; m < spec.M; ++m) cov += (pn[m] - a.mean) * (p1[m] - b.mean);
    cov /= (M - 1.0) * M;
  }
  const double da = 1.0 / std::pow(b.mean, N);
  const double db = -N * a.mean / std::pow(b.mean, N + 1);
  avg.se_DN = std::sqrt(std::max(0.0, da * da * a.se * a.se + db * db * b.se * b.se + 2.0 * da * db * cov));
  return avg;
}

double pe_coupling_disorder(double x) { return 1.0 - 0.25 * kPi * kPi * x * x; }

double pe_frequency_disorder(double x) { return 1.0 - 0.25 * x * x; }

}  // namespace cavsync
