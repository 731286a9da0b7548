#include "cavsync/counting.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace cavsync {

namespace {

SparseOp sparse_kron(const SparseOp& a, const SparseOp& b) {
  std::vector<Eigen::Triplet<cplx>> trips;
  trips.reserve(static_cast<std::size_t>(a.nonZeros() * b.nonZeros()));
  for (Eigen::Index i = 0; i < a.outerSize(); ++i) {
    for (SparseOp::InnerIterator ia(a, i); ia; ++ia) {
      for (Eigen::Index k = 0; k < b.outerSize(); ++k) {
        for (SparseOp::InnerIterator ib(b, k); ib; ++ib) {
          trips.emplace_back(ia.row() * b.rows() + ib.row(), ia.col() * b.cols() + ib.col(), ia.value() * ib.value());
        }
      }
    }
  }
  SparseOp out(a.rows() * b.rows(), a.cols() * b.cols());
  out.setFromTriplets(trips.begin(), trips.end());
  return out;
}

SparseOp sparse_identity(Eigen::Index n) {
  SparseOp id(n, n);
  id.setIdentity();
  return id;
}

std::size_t ipow(std::size_t base, std::size_t e) {
  std::size_t r = 1;
  for (std::size_t i = 0; i < e; ++i) r *= base;
  return r;
}

void check_extended_cap(Eigen::Index system_dim, int n_c, std::size_t counted) {
  const std::size_t total = static_cast<std::size_t>(system_dim) * ipow(static_cast<std::size_t>(n_c + 1), counted);
  if (total > HilbertLayout::kDefaultCap) {
    throw DimensionError("counting: extended dimension " + std::to_string(total) + " exceeds cap of " +
                         std::to_string(HilbertLayout::kDefaultCap));
  }
}

}  // namespace

std::vector<int> CounterConfig::resolved(int n_qubits) const {
  if (n_c < 1) throw ConfigError("n_c: must be at least 1");
  std::vector<int> out = counted;
  if (out.empty()) {
    out.resize(static_cast<std::size_t>(n_qubits));
    std::iota(out.begin(), out.end(), 0);
  }
  for (int j : out) {
    if (j < 0 || j >= n_qubits) throw ConfigError("counted: qubit index out of range");
  }
  return out;
}

GeneratorSpec build_counting_generator(const GeneratorSpec& gen, const CounterConfig& cfg) {
  const std::vector<int> counted = cfg.resolved(gen.n_qubits);
  check_extended_cap(gen.layout.total_dim(), cfg.n_c, counted.size());
  const int dc = cfg.n_c + 1;

  GeneratorSpec ext = gen;
  std::vector<int> dims = gen.layout.dims();
  dims.insert(dims.end(), counted.size(), dc);
  ext.layout = HilbertLayout(dims);
  const Eigen::Index cdim = static_cast<Eigen::Index>(ipow(static_cast<std::size_t>(dc), counted.size()));
  const SparseOp idc = sparse_identity(cdim);
  auto lift = [&](const SparseOp& op) { return sparse_kron(op, idc); };

  ext.h_static = lift(gen.h_static);
  for (auto& term : ext.h_driven) term.op = lift(term.op);
  const SparseOp shift = to_sparse(local::counter_shift(dc));
  for (auto& ch : ext.jumps) {
    ch.op = lift(ch.op);
    if (ch.kind != ChannelKind::Antenna) continue;
    const auto it = std::find(counted.begin(), counted.end(), ch.qubit);
    if (it == counted.end()) continue;
    const auto k = static_cast<std::size_t>(it - counted.begin());
    // Counter register k inside the counter block.
    const SparseOp left = sparse_identity(static_cast<Eigen::Index>(ipow(static_cast<std::size_t>(dc), k)));
    const SparseOp right =
        sparse_identity(static_cast<Eigen::Index>(ipow(static_cast<std::size_t>(dc), counted.size() - k - 1)));
    const SparseOp s = sparse_kron(sparse_identity(gen.layout.total_dim()), sparse_kron(sparse_kron(left, shift), right));
    ch.op = SparseOp(ch.op * s);
    ch.label += "+counter";
  }
  return ext;
}

CountingState::CountingState(HilbertLayout system, int n_c, std::vector<int> counted)
    : system_(std::move(system)), n_c_(n_c), counted_(std::move(counted)) {
  const std::size_t n = ipow(static_cast<std::size_t>(n_c_ + 1), counted_.size());
  const Eigen::Index d = system_.total_dim();
  blocks_.assign(n, Matrix::Zero(d, d));
}

std::vector<int> CountingState::record(std::size_t sector) const {
  std::vector<int> digits(counted_.size());
  const auto base = static_cast<std::size_t>(n_c_ + 1);
  for (std::size_t k = counted_.size(); k-- > 0;) {
    digits[k] = static_cast<int>(sector % base);
    sector /= base;
  }
  return digits;
}

std::size_t CountingState::sector_index(std::span<const int> rec) const {
  if (rec.size() != counted_.size()) throw DimensionError("CountingState: record length mismatch");
  std::size_t idx = 0;
  for (int digit : rec) {
    if (digit < 0 || digit > n_c_) throw DimensionError("CountingState: counter level out of range");
    idx = idx * static_cast<std::size_t>(n_c_ + 1) + static_cast<std::size_t>(digit);
  }
  return idx;
}

double CountingState::joint(std::span<const int> pattern) const {
  return blocks_[sector_index(pattern)].trace().real();
}

DensityState CountingState::reduced() const {
  Matrix sum = Matrix::Zero(system_.total_dim(), system_.total_dim());
  for (const auto& b : blocks_) sum += b;
  return {system_, std::move(sum)};
}

DensityState CountingState::extended() const {
  std::vector<int> dims = system_.dims();
  dims.insert(dims.end(), counted_.size(), n_c_ + 1);
  HilbertLayout layout(dims);
  const Eigen::Index d = system_.total_dim();
  const auto c = static_cast<Eigen::Index>(blocks_.size());
  Matrix rho = Matrix::Zero(layout.total_dim(), layout.total_dim());
  // Index = system_index * c + counter_index.
  for (Eigen::Index s = 0; s < c; ++s) {
    const Matrix& b = blocks_[static_cast<std::size_t>(s)];
    for (Eigen::Index j = 0; j < d; ++j) {
      for (Eigen::Index i = 0; i < d; ++i) rho(i * c + s, j * c + s) = b(i, j);
    }
  }
  return {layout, std::move(rho)};
}

double PhotonStats::mean_p1() const {
  double acc = 0.0;
  for (const auto& p : p_n) acc += p.size() > 1 ? p[1] : 0.0;
  return p_n.empty() ? 0.0 : acc / static_cast<double>(p_n.size());
}

double PhotonStats::product_p1() const {
  double acc = 1.0;
  for (const auto& p : p_n) acc *= p.size() > 1 ? p[1] : 0.0;
  return acc;
}

CountingState count_photons(const GeneratorSpec& gen, const CounterConfig& cfg, double t_f,
                            const CountingOptions& options, const std::vector<double>& samples,
                            const std::function<void(std::size_t, double, const CountingState&)>& observer) {
  if (!(t_f > 0.0)) throw ConfigError("count_photons: t_f must be positive");
  const std::vector<int> counted = cfg.resolved(gen.n_qubits);
  check_extended_cap(gen.layout.total_dim(), cfg.n_c, counted.size());

  const LindbladKernel kernel(gen);
  CountingState state(gen.layout, cfg.n_c, counted);
  const std::size_t ns = state.sectors();
  const Eigen::Index d = gen.layout.total_dim();
  const Eigen::Index block = d * d;

  std::vector<std::size_t> counted_channel;
  std::vector<char> is_counted(gen.jumps.size(), 0);
  for (int j : counted) {
    const auto q = static_cast<std::size_t>(gen.channel_index(ChannelKind::Antenna, j));
    counted_channel.push_back(q);
    is_counted[q] = 1;
  }
  std::vector<std::size_t> free_channels;
  for (std::size_t q = 0; q < gen.jumps.size(); ++q) {
    if (!is_counted[q] && gen.jumps[q].op.nonZeros() > 0) free_channels.push_back(q);
  }
  // prev[k][s]: sector whose channel-k counter is one below that of s (cyclic).
  std::vector<std::vector<std::size_t>> prev(counted.size(), std::vector<std::size_t>(ns));
  for (std::size_t s = 0; s < ns; ++s) {
    const std::vector<int> rec = state.record(s);
    for (std::size_t k = 0; k < counted.size(); ++k) {
      std::vector<int> r = rec;
      r[k] = (r[k] + cfg.n_c) % (cfg.n_c + 1);
      prev[k][s] = state.sector_index(r);
    }
  }
  std::vector<char> active(counted.size());
  for (std::size_t k = 0; k < counted.size(); ++k) active[k] = gen.jumps[counted_channel[k]].op.nonZeros() > 0;

  auto rhs = [&](double t, const Vector& y, Vector& dy) {
    for (std::size_t s = 0; s < ns; ++s) {
      Eigen::Map<const Matrix> x(y.data() + static_cast<Eigen::Index>(s) * block, d, d);
      Eigen::Map<Matrix> out(dy.data() + static_cast<Eigen::Index>(s) * block, d, d);
      kernel.drift(t, x, out, true);
      for (std::size_t q : free_channels) kernel.add_sandwich(q, x, out);
      for (std::size_t k = 0; k < counted.size(); ++k) {
        if (!active[k]) continue;
        Eigen::Map<const Matrix> src(y.data() + static_cast<Eigen::Index>(prev[k][s]) * block, d, d);
        kernel.add_sandwich(counted_channel[k], src, out);
      }
    }
  };

  Vector y = Vector::Zero(static_cast<Eigen::Index>(ns) * block);
  {
    const DensityState g0 = gen.ground_state();
    Eigen::Map<Matrix>(y.data(), d, d) = g0.rho();
  }
  auto unpack = [&](const Vector& v, CountingState& st) {
    for (std::size_t s = 0; s < ns; ++s) {
      st.block(s) = Eigen::Map<const Matrix>(v.data() + static_cast<Eigen::Index>(s) * block, d, d);
    }
  };
  OdeOptions ode;
  ode.rtol = options.rtol;
  ode.atol = options.atol;
  integrate(
      rhs, y, 0.0, t_f, gen.breakpoints, samples,
      [&](std::size_t i, double t, const Vector& v) {
        if (!observer) return;
        CountingState snap(gen.layout, cfg.n_c, counted);
        unpack(v, snap);
        observer(i, t, snap);
      },
      ode);
  unpack(y, state);
  double trace = 0.0;
  for (std::size_t s = 0; s < ns; ++s) trace += state.block(s).trace().real();
  if (std::abs(trace - 1.0) > 1e-8) throw NumericError("count_photons: trace drift " + std::to_string(trace - 1.0));
  return state;
}

namespace {

// Counts of N_c + 2 wrap onto level 1. Extrapolate the tail geometrically from the two top levels.
double aliased_weight(const std::vector<std::vector<double>>& p_n) {
  double worst = 0.0;
  for (const auto& p : p_n) {
    const std::size_t top = p.size() - 1;
    if (top < 2 || !(p[top - 1] > 0.0)) continue;
    const double r = std::min(1.0, p[top] / p[top - 1]);
    worst = std::max(worst, p[top] * r * r);
  }
  return worst;
}

}  // namespace

PhotonStats read_stats(const CountingState& state) {
  PhotonStats stats;
  stats.channels = state.counted();
  const std::size_t m = state.counted().size();
  stats.p_n.assign(m, std::vector<double>(static_cast<std::size_t>(state.n_c() + 1), 0.0));
  for (std::size_t s = 0; s < state.sectors(); ++s) {
    const double p = state.block(s).trace().real();
    const std::vector<int> rec = state.record(s);
    bool all_one = true;
    for (std::size_t k = 0; k < m; ++k) {
      stats.p_n[k][static_cast<std::size_t>(rec[k])] += p;
      all_one = all_one && rec[k] == 1;
    }
    if (all_one) stats.p_all_one += p;
  }
  for (const auto& p : stats.p_n) stats.overflow = std::max(stats.overflow, p.back());
  stats.aliased = aliased_weight(stats.p_n);
  return stats;
}

double joint_probability(const DensityState& rho_ext, int n_counters, std::span<const int> pattern) {
  const HilbertLayout& layout = rho_ext.layout();
  if (static_cast<int>(pattern.size()) != n_counters) throw DimensionError("joint_probability: pattern length");
  const int first = layout.subsystems() - n_counters;
  if (first < 0) throw DimensionError("joint_probability: too many counters for layout");
  Eigen::Index cdim = 1;
  for (int k = first; k < layout.subsystems(); ++k) cdim *= layout.dim(k);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < layout.total_dim(); ++i) {
    Eigen::Index c = i % cdim;
    bool match = true;
    for (int k = layout.subsystems() - 1; k >= first; --k) {
      const int digit = static_cast<int>(c % layout.dim(k));
      c /= layout.dim(k);
      match = match && digit == pattern[static_cast<std::size_t>(k - first)];
    }
    if (match) acc += rho_ext.rho()(i, i).real();
  }
  return acc;
}

PhotonStats read_stats(const DensityState& rho_ext, int n_counters, const std::vector<int>& channel_qubits) {
  const HilbertLayout& layout = rho_ext.layout();
  const int first = layout.subsystems() - n_counters;
  if (first < 1) throw DimensionError("read_stats: layout has no system part");
  if (static_cast<int>(channel_qubits.size()) != n_counters) throw DimensionError("read_stats: channel list length");
  PhotonStats stats;
  stats.channels = channel_qubits;
  const int dc = layout.dim(first);
  stats.p_n.assign(static_cast<std::size_t>(n_counters), std::vector<double>(static_cast<std::size_t>(dc), 0.0));
  Eigen::Index cdim = 1;
  for (int k = first; k < layout.subsystems(); ++k) cdim *= layout.dim(k);
  for (Eigen::Index i = 0; i < layout.total_dim(); ++i) {
    const double p = rho_ext.rho()(i, i).real();
    Eigen::Index c = i % cdim;
    bool all_one = true;
    for (int k = layout.subsystems() - 1; k >= first; --k) {
      const int digit = static_cast<int>(c % layout.dim(k));
      c /= layout.dim(k);
      stats.p_n[static_cast<std::size_t>(k - first)][static_cast<std::size_t>(digit)] += p;
      all_one = all_one && digit == 1;
    }
    if (all_one) stats.p_all_one += p;
  }
  for (const auto& p : stats.p_n) stats.overflow = std::max(stats.overflow, p.back());
  stats.aliased = aliased_weight(stats.p_n);
  return stats;
}

void check_overflow(const PhotonStats& stats, int n_c, double limit) {
  if (n_c >= 2 && stats.aliased > limit) {
    throw NumericError("counting: estimated weight wrapped onto the one-photon level is " +
                       std::to_string(stats.aliased) + " (top level " + std::to_string(stats.overflow) +
                       "); increase N_c");
  }
}

double demux_error(double p_n, double p_1, int n) {
  if (!(p_1 > 0.0) || p_1 > 1.0 + 1e-12) throw Error("demux_error: P_1 must lie in (0, 1]");
  if (n < 1) throw Error("demux_error: N must be positive");
  return p_n / std::pow(p_1, n) - 1.0;
}

}  // namespace cavsync
