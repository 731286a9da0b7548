#include "cavsync/trajectories.hpp"

#include <algorithm>
#include <cmath>

#include "cavsync/integrator.hpp"
#include "cavsync/output.hpp"
#include "cavsync/parallel.hpp"

namespace cavsync {

TrajectoryRng::TrajectoryRng(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  engine_.seed(seq);
}

double TrajectoryRng::uniform() {
  // 53 random bits, shifted half a unit so 0 and 1 never occur.
  return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

std::vector<int> JumpLog::antenna_counts(std::size_t m) const {
  std::vector<int> counts(static_cast<std::size_t>(n_qubits), 0);
  for (const auto& ev : trajectories.at(m)) {
    const auto c = static_cast<std::size_t>(ev.channel);
    if (kinds[c] == ChannelKind::Antenna) ++counts[static_cast<std::size_t>(qubits[c])];
  }
  return counts;
}

void JumpLog::write_csv(std::ostream& out) const {
  out << "trajectory,time,channel_label\n";
  for (std::size_t m = 0; m < trajectories.size(); ++m) {
    for (const auto& ev : trajectories[m]) {
      out << m << ',' << format_number(ev.time) << ',' << labels[static_cast<std::size_t>(ev.channel)] << '\n';
    }
  }
}

Estimate binomial_estimate(std::size_t hits, std::size_t total) {
  if (total == 0) throw Error("binomial_estimate: empty ensemble");
  const double p = static_cast<double>(hits) / static_cast<double>(total);
  return {p, std::sqrt(p * (1.0 - p) / static_cast<double>(total))};
}

Estimate estimate_PN(const JumpLog& log) {
  if (log.trajectories.empty()) throw Error("estimate_PN: empty log");
  std::size_t hits = 0;
  for (std::size_t m = 0; m < log.trajectories.size(); ++m) {
    const auto counts = log.antenna_counts(m);
    if (std::all_of(counts.begin(), counts.end(), [](int c) { return c == 1; })) ++hits;
  }
  return binomial_estimate(hits, log.trajectories.size());
}

std::vector<std::vector<Estimate>> estimate_Pn(const JumpLog& log, int n_max) {
  if (log.trajectories.empty()) throw Error("estimate_Pn: empty log");
  const auto nq = static_cast<std::size_t>(log.n_qubits);
  std::vector<std::vector<std::size_t>> hits(nq, std::vector<std::size_t>(static_cast<std::size_t>(n_max + 1), 0));
  for (std::size_t m = 0; m < log.trajectories.size(); ++m) {
    const auto counts = log.antenna_counts(m);
    for (std::size_t j = 0; j < nq; ++j) {
      if (counts[j] <= n_max) ++hits[j][static_cast<std::size_t>(counts[j])];
    }
  }
  std::vector<std::vector<Estimate>> out(nq);
  for (std::size_t j = 0; j < nq; ++j) {
    for (std::size_t h : hits[j]) out[j].push_back(binomial_estimate(h, log.trajectories.size()));
  }
  return out;
}

JumpLog without_dephasing(const JumpLog& log) {
  JumpLog out = log;
  for (auto& traj : out.trajectories) {
    std::erase_if(traj, [&](const JumpEvent& ev) {
      return log.kinds[static_cast<std::size_t>(ev.channel)] == ChannelKind::Dephasing;
    });
  }
  return out;
}

namespace {

struct TrajectoryResult {
  std::vector<JumpEvent> events;
  std::vector<double> excited;  // [sample * n_qubits + j]
};

class TrajectoryEngine {
 public:
  TrajectoryEngine(const GeneratorSpec& gen, const TrajectoryConfig& cfg) : gen_(gen), cfg_(cfg), kernel_(gen) {
    const Eigen::Index d = gen.layout.total_dim();
    excited_mask_.assign(static_cast<std::size_t>(gen.n_qubits), std::vector<char>(static_cast<std::size_t>(d), 0));
    for (int j = 0; j < gen.n_qubits; ++j) {
      const Eigen::Index stride = gen.layout.stride(gen.first_qubit_site + j);
      for (Eigen::Index i = 0; i < d; ++i) {
        if ((i / stride) % 2 == 0) excited_mask_[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] = 1;
      }
    }
    std::vector<int> levels = cfg.initial_levels;
    if (levels.empty()) {
      levels.assign(static_cast<std::size_t>(gen.layout.subsystems()), 0);
      for (int j = 0; j < gen.n_qubits; ++j) levels[static_cast<std::size_t>(gen.first_qubit_site + j)] = 1;
    }
    Eigen::Index idx = 0;
    for (int s = 0; s < gen.layout.subsystems(); ++s) idx += levels[static_cast<std::size_t>(s)] * gen.layout.stride(s);
    ground_index_ = idx;
    cuts_.push_back(0.0);
    for (double b : gen.breakpoints) {
      if (b > 0.0 && b < cfg.t_f) cuts_.push_back(b);
    }
    std::sort(cuts_.begin(), cuts_.end());
    cuts_.erase(std::unique(cuts_.begin(), cuts_.end()), cuts_.end());
    cuts_.push_back(cfg.t_f);
  }

  TrajectoryResult run(std::size_t index) const {
    TrajectoryRng rng(cfg_.seed, index);
    TrajectoryResult res;
    const std::size_t nq = static_cast<std::size_t>(gen_.n_qubits);
    res.excited.assign(cfg_.sample_times.size() * nq, 0.0);
    const Eigen::Index d = gen_.layout.total_dim();
    Vector psi = Vector::Zero(d);
    psi[ground_index_] = 1.0;

    auto rhs = [this](double t, const Vector& y, Vector& dy) {
      kernel_.effective_apply(t, y, dy);
      dy *= -kI;
    };
    OdeOptions opt;
    opt.rtol = cfg_.rtol;
    opt.atol = cfg_.atol;
    Dopri5 stepper(rhs, opt);

    std::size_t next_sample = 0;
    auto record = [&](double t, const Vector& v) {
      while (next_sample < cfg_.sample_times.size() && cfg_.sample_times[next_sample] <= t) {
        const double ts = cfg_.sample_times[next_sample];
        Vector tmp;
        const Vector* state = &v;
        if (ts != t) {
          stepper.dense(ts, tmp);
          state = &tmp;
        }
        const double norm = state->squaredNorm();
        for (std::size_t j = 0; j < nq; ++j) {
          double acc = 0.0;
          for (Eigen::Index i = 0; i < d; ++i) {
            if (excited_mask_[j][static_cast<std::size_t>(i)]) acc += std::norm((*state)[i]);
          }
          res.excited[next_sample * nq + j] = acc / norm;
        }
        ++next_sample;
      }
    };
    // Samples at t = 0.
    while (next_sample < cfg_.sample_times.size() && cfg_.sample_times[next_sample] <= 0.0) {
      for (std::size_t j = 0; j < nq; ++j) {
        res.excited[next_sample * nq + j] = excited_mask_[j][static_cast<std::size_t>(ground_index_)] ? 1.0 : 0.0;
      }
      ++next_sample;
    }

    double threshold = rng.uniform();
    double t = 0.0;
    Vector probe, jumped;
    for (std::size_t s = 0; s + 1 < cuts_.size(); ++s) {
      const double b = cuts_[s + 1];
      if (b <= t) continue;
      stepper.start(t, b, psi);
      while (stepper.step()) {
        if (stepper.y().squaredNorm() > threshold) {
          record(stepper.t(), stepper.y());
          continue;
        }
        // Locate the norm crossing on the continuous extension.
        double lo = stepper.t_prev(), hi = stepper.t();
        const double tol = cfg_.norm_tol * std::max(std::abs(hi), stepper.t() - stepper.t_prev());
        while (hi - lo > tol) {
          const double mid = 0.5 * (lo + hi);
          stepper.dense(mid, probe);
          (probe.squaredNorm() > threshold ? lo : hi) = mid;
        }
        const double tj = hi;
        // Samples before the jump use the pre-jump branch.
        while (next_sample < cfg_.sample_times.size() && cfg_.sample_times[next_sample] < tj) {
          record(cfg_.sample_times[next_sample], [&] {
            stepper.dense(cfg_.sample_times[next_sample], probe);
            return probe;
          }());
        }
        // Re-step from the start of the step straight to the jump time.
        if (tj > stepper.t_prev()) {
          stepper.fixed_step(stepper.t_prev(), stepper.y_prev(), tj - stepper.t_prev(), probe);
        } else {
          probe = stepper.y_prev();
        }
        double total = 0.0;
        std::vector<double> weights(kernel_.n_jumps());
        for (std::size_t q = 0; q < kernel_.n_jumps(); ++q) {
          if (kernel_.jump(q).nonZeros() == 0) continue;
          weights[q] = (kernel_.jump(q) * probe).squaredNorm();
          total += weights[q];
        }
        if (!(total > 0.0)) throw NumericError("trajectory: norm underflow, no channel can fire");
        const double u = rng.uniform() * total;
        std::size_t q = 0;
        double acc = 0.0;
        for (std::size_t k = 0; k < weights.size(); ++k) {
          if (weights[k] == 0.0) continue;
          acc += weights[k];
          q = k;
          if (u < acc) break;
        }
        jumped = kernel_.jump(q) * probe;
        psi = jumped / std::sqrt(weights[q]);
        res.events.push_back({tj, static_cast<int>(q)});
        threshold = rng.uniform();
        t = tj;
        stepper.start(t, b, psi);
      }
      psi = stepper.y();
      t = b;
    }
    return res;
  }

 private:
  const GeneratorSpec& gen_;
  const TrajectoryConfig& cfg_;
  LindbladKernel kernel_;
  std::vector<std::vector<char>> excited_mask_;
  Eigen::Index ground_index_ = 0;
  std::vector<double> cuts_;
};

}  // namespace

EnsembleResult run_ensemble(const GeneratorSpec& gen, const TrajectoryConfig& cfg) {
  if (gen.kind != GeneratorKind::EffectiveRWA) throw Error("run_ensemble: effective generator required");
  if (cfg.M < 1) throw ConfigError("M: at least one trajectory required");
  if (!(cfg.t_f > 0.0)) throw ConfigError("t_f: must be positive");
  if (!std::is_sorted(cfg.sample_times.begin(), cfg.sample_times.end())) {
    throw ConfigError("sample_times: must be sorted");
  }
  if (!cfg.sample_times.empty() && (cfg.sample_times.front() < 0.0 || cfg.sample_times.back() > cfg.t_f)) {
    throw ConfigError("sample_times: must lie in [0, t_f]");
  }
  if (!cfg.initial_levels.empty()) {
    if (cfg.initial_levels.size() != static_cast<std::size_t>(gen.layout.subsystems())) {
      throw DimensionError("initial_levels: one level per subsystem required");
    }
    for (int s = 0; s < gen.layout.subsystems(); ++s) {
      const int l = cfg.initial_levels[static_cast<std::size_t>(s)];
      if (l < 0 || l >= gen.layout.dims()[static_cast<std::size_t>(s)]) throw ConfigError("initial_levels: level out of range");
    }
  }
  const TrajectoryEngine engine(gen, cfg);
  std::vector<TrajectoryResult> results(cfg.M);
  parallel_for(cfg.M, cfg.threads, [&](std::size_t m) { results[m] = engine.run(m); });

  EnsembleResult out;
  JumpLog& log = out.log;
  log.n_qubits = gen.n_qubits;
  for (const auto& ch : gen.jumps) {
    log.kinds.push_back(ch.kind);
    log.qubits.push_back(ch.qubit);
    log.labels.push_back(ch.label);
  }
  log.trajectories.reserve(cfg.M);
  for (auto& r : results) log.trajectories.push_back(std::move(r.events));

  EnsembleStats& st = out.stats;
  st.M = cfg.M;
  int n_max = 2;
  for (std::size_t m = 0; m < cfg.M; ++m) {
    for (int c : log.antenna_counts(m)) n_max = std::max(n_max, c);
  }
  st.p_n = estimate_Pn(log, n_max);
  st.p_all = estimate_PN(log);
  st.times = cfg.sample_times;
  const auto nq = static_cast<std::size_t>(gen.n_qubits);
  st.excited.assign(nq, std::vector<Estimate>(cfg.sample_times.size()));
  for (std::size_t s = 0; s < cfg.sample_times.size(); ++s) {
    for (std::size_t j = 0; j < nq; ++j) {
      double sum = 0.0, ss = 0.0;
      for (const auto& r : results) sum += r.excited[s * nq + j];
      const double M = static_cast<double>(cfg.M);
      const double mean = sum / M;
      for (const auto& r : results) ss += (r.excited[s * nq + j] - mean) * (r.excited[s * nq + j] - mean);
      const double var = cfg.M > 1 ? ss / (M - 1.0) : 0.0;
      st.excited[j][s] = {mean, std::sqrt(var / M)};
    }
  }
  return out;
}

}  // namespace cavsync
