#pragma once

#include <random>

#include "cavsync/algebra.hpp"

namespace testing {

using cavsync::cplx;
using cavsync::Matrix;

inline Matrix random_matrix(Eigen::Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> d;
  Matrix m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) m(i, j) = cplx(d(rng), d(rng));
  }
  return m;
}

inline Matrix random_hermitian(Eigen::Index n, std::mt19937_64& rng) {
  Matrix m = random_matrix(n, rng);
  return 0.5 * (m + m.adjoint());
}

inline Matrix random_density(Eigen::Index n, std::mt19937_64& rng) {
  Matrix m = random_matrix(n, rng);
  Matrix rho = m * m.adjoint();
  return rho / rho.trace();
}

// Column-major vectorised Lindblad superoperator, built independently of the library.
inline Matrix liouvillian(const Matrix& h, const std::vector<Matrix>& jumps) {
  const Eigen::Index n = h.rows();
  const Matrix id = Matrix::Identity(n, n);
  auto kron = [](const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      for (Eigen::Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
    return out;
  };
  Matrix l = cplx(0, -1) * (kron(id, h) - kron(h.transpose(), id));
  for (const auto& c : jumps) {
    const Matrix cc = c.adjoint() * c;
    l += kron(c.conjugate(), c) - 0.5 * kron(id, cc) - 0.5 * kron(cc.transpose(), id);
  }
  return l;
}

inline Matrix vec_apply(const Matrix& l, const Matrix& rho) {
  const Eigen::Index n = rho.rows();
  Eigen::VectorXcd v = Eigen::Map<const Eigen::VectorXcd>(rho.data(), n * n);
  Eigen::VectorXcd r = l * v;
  return Eigen::Map<const Matrix>(r.data(), n, n);
}

}  // namespace testing
