#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "cavsync/errors.hpp"

namespace cavsync {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

inline constexpr cplx kI{0.0, 1.0};

/// Ordered tensor-product structure of a composite Hilbert space.
///
/// Subsystem 0 is the most significant factor in the Kronecker ordering, so a
/// basis index is `i = i_0 * (d_1 * ... * d_{n-1}) + ... + i_{n-1}`.
class HilbertLayout {
 public:
  static constexpr std::size_t kDefaultCap = 4096;

  HilbertLayout() = default;
  explicit HilbertLayout(std::vector<int> subsystem_dims, std::size_t cap = kDefaultCap);

  const std::vector<int>& dims() const noexcept { return dims_; }
  int subsystems() const noexcept { return static_cast<int>(dims_.size()); }
  int dim(int site) const { return dims_.at(static_cast<std::size_t>(site)); }
  Eigen::Index total_dim() const noexcept { return total_; }

  // Product of the dimensions of the subsystems after `site`.
  Eigen::Index stride(int site) const;

  friend bool operator==(const HilbertLayout& a, const HilbertLayout& b) { return a.dims_ == b.dims_; }

 private:
  std::vector<int> dims_;
  Eigen::Index total_ = 1;
};

/// Dense operator on a layout. Operators flagged Hermitian are checked on construction.
class ComplexOperator {
 public:
  static constexpr double kHermitianTol = 1e-12;

  ComplexOperator() = default;
  ComplexOperator(HilbertLayout layout, Matrix entries, bool hermitian = false);

  const HilbertLayout& layout() const noexcept { return layout_; }
  const Matrix& entries() const noexcept { return entries_; }
  bool hermitian() const noexcept { return hermitian_; }

  ComplexOperator adjoint() const;

  friend ComplexOperator operator+(const ComplexOperator& a, const ComplexOperator& b);
  friend ComplexOperator operator-(const ComplexOperator& a, const ComplexOperator& b);
  friend ComplexOperator operator*(const ComplexOperator& a, const ComplexOperator& b);
  friend ComplexOperator operator*(cplx s, const ComplexOperator& a);
  friend ComplexOperator operator*(double s, const ComplexOperator& a);

 private:
  HilbertLayout layout_;
  Matrix entries_;
  bool hermitian_ = false;
};

ComplexOperator identity(const HilbertLayout& layout);
ComplexOperator zero_operator(const HilbertLayout& layout, bool hermitian = true);

/// Density matrix with its layout.
class DensityState {
 public:
  DensityState() = default;
  DensityState(HilbertLayout layout, Matrix rho);

  static DensityState pure(const HilbertLayout& layout, const Vector& psi);
  // Product basis state |i_0 i_1 ...><i_0 i_1 ...|.
  static DensityState basis(const HilbertLayout& layout, std::span<const int> levels);

  const HilbertLayout& layout() const noexcept { return layout_; }
  const Matrix& rho() const noexcept { return rho_; }
  Matrix& rho() noexcept { return rho_; }

  cplx trace() const { return rho_.trace(); }
  double hermiticity_error() const;
  // Diagnostic only; evolution never projects onto the positive cone.
  double min_eigenvalue() const;
  // Throws NumericError when trace or Hermiticity drift beyond `tol`.
  void check(double tol = 1e-8) const;

 private:
  HilbertLayout layout_;
  Matrix rho_;
};

Matrix kron(const Matrix& a, const Matrix& b);

/// identity ⊗ ... ⊗ local ⊗ ... ⊗ identity with `local` at `site`.
ComplexOperator embed_operator(const ComplexOperator& local, int site, const HilbertLayout& layout);
ComplexOperator embed_operator(const Matrix& local, int site, const HilbertLayout& layout, bool hermitian = false);

/// -i[H, rho] + sum_q (c_q rho c_q^† - {c_q^† c_q, rho}/2), with rates folded into c_q.
Matrix lindblad_rhs(const ComplexOperator& hamiltonian, std::span<const ComplexOperator> jumps,
                    const DensityState& rho);

DensityState partial_trace(const DensityState& rho, std::vector<int> keep);

cplx expectation(const ComplexOperator& op, const DensityState& rho);

// Local operators. Qubit basis is (|e>, |g>) = (0, 1).
namespace local {
Matrix sigma_minus();
Matrix sigma_plus();
Matrix sigma_z();
Matrix sigma_x();
Matrix excited_projector();
Matrix annihilation(int dim);
// Cyclic raising operator |n+1><n| + |0><n_max| on a register of dimension n_max + 1.
Matrix counter_shift(int dim);
Matrix projector(int dim, int level);
}  // namespace local

}  // namespace cavsync
