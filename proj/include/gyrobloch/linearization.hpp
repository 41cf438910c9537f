#pragma once

#include <memory>

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include "gyrobloch/assembly.hpp"

namespace gyrobloch {

using RealVector = Eigen::VectorXd;
using ComplexSparse = Eigen::SparseMatrix<Complex>;

/// J x for x = (x1, x2): (x2, -x1).
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> apply_j(
    const Eigen::MatrixBase<Derived>& x) {
  const Eigen::Index n = x.size() / 2;
  Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> out(x.size());
  out.head(n) = x.tail(n);
  out.tail(n) = -x.head(n);
  return out;
}

/// Sparse LU of Q(sigma) = sigma^2 M + sigma G + K. Solves with Q(-sigma)
/// use the transpose, since Q(-sigma) = Q(sigma)^T for real M, G, K with the
/// gyroscopic symmetries.
class QuadraticFactorization {
 public:
  QuadraticFactorization(const PencilMatrices& pencil, Complex sigma);

  bool ok() const { return ok_; }
  Complex shift() const { return sigma_; }
  ComplexVector solve(const ComplexVector& b) const;
  ComplexVector solve_transposed(const ComplexVector& b) const;

 private:
  Complex sigma_;
  Eigen::SparseLU<ComplexSparse, Eigen::COLAMDOrdering<int>> lu_;
  bool ok_ = false;
};

/// Hamiltonian form W y = mu y of the gyroscopic problem, with
/// W = F1^{-1} H F2^{-1}, H = [[0, -K], [M, 0]], S = F1 F2 = [[M, G], [0, M]],
/// F1 = [[I, G/2], [0, M]], F2 = [[M, G/2], [0, I]]. Nothing 2N x 2N is formed.
class HamiltonianLinearization {
 public:
  explicit HamiltonianLinearization(const PencilMatrices& pencil);

  const PencilMatrices& pencil() const { return *pencil_; }
  Eigen::Index size() const { return 2 * pencil_->n_dofs(); }

  /// W z (one solve with M).
  ComplexVector apply_w(const ComplexVector& z) const;
  RealVector apply_w(const RealVector& z) const;

  /// (W - sigma)^{-1} b given a factorization of Q(sigma) or of Q(-sigma)
  /// (then solved through the transpose).
  ComplexVector solve_shifted(const QuadraticFactorization& q, bool negated,
                              const ComplexVector& b) const;

  /// Dense blocks for small-instance checks.
  Eigen::MatrixXd dense_h() const;
  Eigen::MatrixXd dense_s() const;
  Eigen::MatrixXd dense_w() const;
  static Eigen::MatrixXd dense_j(Eigen::Index n);

 private:
  const PencilMatrices* pencil_;
  Eigen::SimplicialLDLT<SparseMatrix> mass_solver_;
};

/// Standard linearization A x = mu B x with A = [[0, I], [-K, -G]],
/// B = diag(I, M), x = (u, mu u).
struct StandardLinearization {
  const PencilMatrices* pencil = nullptr;

  Eigen::Index size() const { return 2 * pencil->n_dofs(); }
  ComplexVector apply_a(const ComplexVector& x) const;
  ComplexVector apply_b(const ComplexVector& x) const;
  /// (A - sigma B)^{-1} B x using a factorization of Q(sigma).
  ComplexVector shift_invert(const QuadraticFactorization& q, const ComplexVector& x) const;

  Eigen::MatrixXd dense_a() const;
  Eigen::MatrixXd dense_b() const;
};

StandardLinearization linearize_standard(const PencilMatrices& pencil);

/// R = (W - mu0)^{-1} (W + mu0)^{-1} (W - conj mu0)^{-1} (W + conj mu0)^{-1},
/// a real skew-Hamiltonian operator. Each application costs one solve with
/// Q(mu0) and one with its transpose.
class ShiftedOperator {
 public:
  ShiftedOperator(const HamiltonianLinearization& lin, Complex mu0);

  bool ok() const { return factorization_.ok(); }
  Complex shift() const { return mu0_; }
  RealVector apply(const RealVector& b) const;
  /// Eigenvalue of R belonging to eigenvalue mu of W.
  Complex transform(Complex mu) const;
  long applications() const { return applications_; }

 private:
  /// (W - s)^{-1} (W - conj s)^{-1} b for s = +mu0 (negated = false) or -mu0.
  RealVector pair_resolvent(bool negated, const RealVector& b) const;

  const HamiltonianLinearization* lin_;
  Complex mu0_;
  QuadraticFactorization factorization_;
  mutable long applications_ = 0;
};

}  // namespace gyrobloch
