#include "cavsync/algebra.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include <Eigen/Eigenvalues>

namespace cavsync {

namespace {

void require_same_layout(const HilbertLayout& a, const HilbertLayout& b, const char* what) {
  if (!(a == b)) throw DimensionError(std::string(what) + ": layout mismatch");
}

double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

}  // namespace

HilbertLayout::HilbertLayout(std::vector<int> subsystem_dims, std::size_t cap) : dims_(std::move(subsystem_dims)) {
  if (dims_.empty()) throw DimensionError("HilbertLayout: no subsystems");
  std::size_t total = 1;
  for (int d : dims_) {
    if (d < 1) throw DimensionError("HilbertLayout: subsystem dimensions must be positive");
    total *= static_cast<std::size_t>(d);
    if (total > cap) {
      throw DimensionError("HilbertLayout: total dimension exceeds cap of " + std::to_string(cap));
    }
  }
  total_ = static_cast<Eigen::Index>(total);
}

Eigen::Index HilbertLayout::stride(int site) const {
  Eigen::Index s = 1;
  for (std::size_t k = static_cast<std::size_t>(site) + 1; k < dims_.size(); ++k) s *= dims_[k];
  return s;
}

ComplexOperator::ComplexOperator(HilbertLayout layout, Matrix entries, bool hermitian)
    : layout_(std::move(layout)), entries_(std::move(entries)), hermitian_(hermitian) {
  if (entries_.rows() != layout_.total_dim() || entries_.cols() != layout_.total_dim()) {
    throw DimensionError("ComplexOperator: entries do not match layout dimension");
  }
  if (hermitian_) {
    // Absolute tolerance, scaled up for operators carrying large frequencies.
    const double scale = std::max(1.0, max_abs(entries_));
    if (max_abs(entries_ - entries_.adjoint()) > kHermitianTol * scale) {
      throw Error("ComplexOperator: operator flagged Hermitian is not Hermitian");
    }
  }
}

ComplexOperator ComplexOperator::adjoint() const { return {layout_, entries_.adjoint(), hermitian_}; }

ComplexOperator operator+(const ComplexOperator& a, const ComplexOperator& b) {
  require_same_layout(a.layout_, b.layout_, "operator+");
  return {a.layout_, a.entries_ + b.entries_, a.hermitian_ && b.hermitian_};
}

ComplexOperator operator-(const ComplexOperator& a, const ComplexOperator& b) {
  require_same_layout(a.layout_, b.layout_, "operator-");
  return {a.layout_, a.entries_ - b.entries_, a.hermitian_ && b.hermitian_};
}

ComplexOperator operator*(const ComplexOperator& a, const ComplexOperator& b) {
  require_same_layout(a.layout_, b.layout_, "operator*");
  return {a.layout_, a.entries_ * b.entries_, false};
}

ComplexOperator operator*(cplx s, const ComplexOperator& a) {
  return {a.layout_, s * a.entries_, a.hermitian_ && s.imag() == 0.0};
}

ComplexOperator operator*(double s, const ComplexOperator& a) { return {a.layout_, s * a.entries_, a.hermitian_}; }

ComplexOperator identity(const HilbertLayout& layout) {
  return {layout, Matrix::Identity(layout.total_dim(), layout.total_dim()), true};
}

ComplexOperator zero_operator(const HilbertLayout& layout, bool hermitian) {
  return {layout, Matrix::Zero(layout.total_dim(), layout.total_dim()), hermitian};
}

DensityState::DensityState(HilbertLayout layout, Matrix rho) : layout_(std::move(layout)), rho_(std::move(rho)) {
  if (rho_.rows() != layout_.total_dim() || rho_.cols() != layout_.total_dim()) {
    throw DimensionError("DensityState: matrix does not match layout dimension");
  }
}

DensityState DensityState::pure(const HilbertLayout& layout, const Vector& psi) {
  if (psi.size() != layout.total_dim()) throw DimensionError("DensityState::pure: vector size mismatch");
  return {layout, psi * psi.adjoint()};
}

DensityState DensityState::basis(const HilbertLayout& layout, std::span<const int> levels) {
  if (static_cast<int>(levels.size()) != layout.subsystems()) {
    throw DimensionError("DensityState::basis: one level per subsystem required");
  }
  Eigen::Index idx = 0;
  for (int s = 0; s < layout.subsystems(); ++s) {
    if (levels[s] < 0 || levels[s] >= layout.dim(s)) throw DimensionError("DensityState::basis: level out of range");
    idx += levels[s] * layout.stride(s);
  }
  Matrix rho = Matrix::Zero(layout.total_dim(), layout.total_dim());
  rho(idx, idx) = 1.0;
  return {layout, std::move(rho)};
}

double DensityState::hermiticity_error() const { return max_abs(rho_ - rho_.adjoint()); }

double DensityState::min_eigenvalue() const {
  const Matrix herm = 0.5 * (rho_ + rho_.adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix> solver(herm, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

void DensityState::check(double tol) const {
  const double trace_err = std::abs(trace() - 1.0);
  if (trace_err > tol) throw NumericError("DensityState: trace drift " + std::to_string(trace_err));
  const double herm_err = hermiticity_error();
  if (herm_err > tol) throw NumericError("DensityState: Hermiticity drift " + std::to_string(herm_err));
}

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

ComplexOperator embed_operator(const Matrix& local, int site, const HilbertLayout& layout, bool hermitian) {
  if (site < 0 || site >= layout.subsystems()) throw DimensionError("embed_operator: site out of range");
  if (local.rows() != layout.dim(site) || local.cols() != layout.dim(site)) {
    throw DimensionError("embed_operator: local dimension does not match subsystem " + std::to_string(site));
  }
  const Eigen::Index inner = layout.stride(site);
  const Eigen::Index outer = layout.total_dim() / (inner * layout.dim(site));
  const Matrix left = Matrix::Identity(outer, outer);
  const Matrix right = Matrix::Identity(inner, inner);
  return {layout, kron(kron(left, local), right), hermitian};
}

ComplexOperator embed_operator(const ComplexOperator& local, int site, const HilbertLayout& layout) {
  return embed_operator(local.entries(), site, layout, local.hermitian());
}

Matrix lindblad_rhs(const ComplexOperator& hamiltonian, std::span<const ComplexOperator> jumps,
                    const DensityState& rho) {
  require_same_layout(hamiltonian.layout(), rho.layout(), "lindblad_rhs");
  if (!hamiltonian.hermitian()) throw Error("lindblad_rhs: Hamiltonian must be flagged Hermitian");
  const Matrix& r = rho.rho();
  const Matrix& h = hamiltonian.entries();
  Matrix out = -kI * (h * r - r * h);
  for (const auto& c : jumps) {
    require_same_layout(c.layout(), rho.layout(), "lindblad_rhs");
    const Matrix& m = c.entries();
    const Matrix cdc = m.adjoint() * m;
    out.noalias() += m * r * m.adjoint();
    out.noalias() -= 0.5 * (cdc * r + r * cdc);
  }
  return out;
}

DensityState partial_trace(const DensityState& rho, std::vector<int> keep) {
  const HilbertLayout& layout = rho.layout();
  if (keep.empty()) throw Error("partial_trace: keep set is empty");
  std::sort(keep.begin(), keep.end());
  keep.erase(std::unique(keep.begin(), keep.end()), keep.end());
  for (int k : keep) {
    if (k < 0 || k >= layout.subsystems()) throw DimensionError("partial_trace: subsystem index out of range");
  }
  const int n = layout.subsystems();
  std::vector<int> kept_dims;
  std::vector<char> is_kept(static_cast<std::size_t>(n), 0);
  for (int k : keep) {
    kept_dims.push_back(layout.dim(k));
    is_kept[static_cast<std::size_t>(k)] = 1;
  }
  HilbertLayout reduced(kept_dims, static_cast<std::size_t>(layout.total_dim()));

  // Map every full basis index to (kept index, traced index).
  const Eigen::Index dim = layout.total_dim();
  std::vector<Eigen::Index> kept_idx(static_cast<std::size_t>(dim)), traced_idx(static_cast<std::size_t>(dim));
  std::vector<int> digits(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < dim; ++i) {
    Eigen::Index rem = i;
    for (int s = n - 1; s >= 0; --s) {
      digits[static_cast<std::size_t>(s)] = static_cast<int>(rem % layout.dim(s));
      rem /= layout.dim(s);
    }
    Eigen::Index ki = 0, ti = 0;
    for (int s = 0; s < n; ++s) {
      if (is_kept[static_cast<std::size_t>(s)]) {
        ki = ki * layout.dim(s) + digits[static_cast<std::size_t>(s)];
      } else {
        ti = ti * layout.dim(s) + digits[static_cast<std::size_t>(s)];
      }
    }
    kept_idx[static_cast<std::size_t>(i)] = ki;
    traced_idx[static_cast<std::size_t>(i)] = ti;
  }

  Matrix out = Matrix::Zero(reduced.total_dim(), reduced.total_dim());
  const Matrix& r = rho.rho();
  for (Eigen::Index j = 0; j < dim; ++j) {
    for (Eigen::Index i = 0; i < dim; ++i) {
      if (traced_idx[static_cast<std::size_t>(i)] == traced_idx[static_cast<std::size_t>(j)]) {
        out(kept_idx[static_cast<std::size_t>(i)], kept_idx[static_cast<std::size_t>(j)]) += r(i, j);
      }
    }
  }
  return {reduced, std::move(out)};
}

cplx expectation(const ComplexOperator& op, const DensityState& rho) {
  require_same_layout(op.layout(), rho.layout(), "expectation");
  // Tr(A rho) without forming the product.
  return (op.entries().transpose().cwiseProduct(rho.rho())).sum();
}

namespace local {

Matrix sigma_minus() {
  Matrix m = Matrix::Zero(2, 2);
  m(1, 0) = 1.0;  // |g><e|
  return m;
}

Matrix sigma_plus() { return sigma_minus().transpose(); }

Matrix sigma_z() {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 0) = 1.0;
  m(1, 1) = -1.0;
  return m;
}

Matrix sigma_x() { return sigma_minus() + sigma_plus(); }

Matrix excited_projector() { return projector(2, 0); }

Matrix annihilation(int dim) {
  Matrix m = Matrix::Zero(dim, dim);
  for (int n = 1; n < dim; ++n) m(n - 1, n) = std::sqrt(static_cast<double>(n));
  return m;
}

Matrix counter_shift(int dim) {
  Matrix m = Matrix::Zero(dim, dim);
  for (int n = 0; n + 1 < dim; ++n) m(n + 1, n) = 1.0;
  m(0, dim - 1) = 1.0;
  return m;
}

Matrix projector(int dim, int level) {
  Matrix m = Matrix::Zero(dim, dim);
  m(level, level) = 1.0;
  return m;
}

}  // namespace local

}  // namespace cavsync
