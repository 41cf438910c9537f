#include "gyrobloch/linearization.hpp"

#include <cmath>

#include "gyrobloch/error.hpp"

namespace gyrobloch {

namespace {

bool all_finite(const ComplexVector& v) { return v.allFinite(); }

}  // namespace

QuadraticFactorization::QuadraticFactorization(const PencilMatrices& pencil, Complex sigma)
    : sigma_(sigma) {
  const ComplexSparse q = (sigma * sigma) * pencil.M.cast<Complex>() +
                          sigma * pencil.G.cast<Complex>() + pencil.K.cast<Complex>();
  lu_.analyzePattern(q);
  lu_.factorize(q);
  ok_ = lu_.info() == Eigen::Success;
  if (ok_) {
    // A numerically singular Q(sigma) can factor "successfully"; probe it.
    const ComplexVector probe = ComplexVector::Ones(q.rows());
    ok_ = all_finite(lu_.solve(probe));
  }
}

ComplexVector QuadraticFactorization::solve(const ComplexVector& b) const {
  return lu_.solve(b);
}

ComplexVector QuadraticFactorization::solve_transposed(const ComplexVector& b) const {
  // SparseLU's transpose view is non-const in Eigen 3.4.
  auto& lu = const_cast<Eigen::SparseLU<ComplexSparse, Eigen::COLAMDOrdering<int>>&>(lu_);
  return lu.transpose().solve(b);
}

HamiltonianLinearization::HamiltonianLinearization(const PencilMatrices& pencil)
    : pencil_(&pencil) {
  mass_solver_.compute(pencil.M);
  if (mass_solver_.info() != Eigen::Success) {
    throw SolverError("mass matrix is not positive definite");
  }
}

ComplexVector HamiltonianLinearization::apply_w(const ComplexVector& z) const {
  const Eigen::Index n = pencil_->n_dofs();
  const auto& p = *pencil_;
  const ComplexVector z2 = z.tail(n);
  const ComplexVector t = z.head(n) - 0.5 * (p.G * z2);
  ComplexVector w1(n);
  w1.real() = mass_solver_.solve(RealVector(t.real()));
  w1.imag() = mass_solver_.solve(RealVector(t.imag()));
  ComplexVector out(2 * n);
  out.head(n) = -(p.K * z2) - 0.5 * (p.G * w1);
  out.tail(n) = w1;
  return out;
}

RealVector HamiltonianLinearization::apply_w(const RealVector& z) const {
  const Eigen::Index n = pencil_->n_dofs();
  const auto& p = *pencil_;
  const RealVector w1 = mass_solver_.solve(RealVector(z.head(n) - 0.5 * (p.G * z.tail(n))));
  RealVector out(2 * n);
  out.head(n) = -(p.K * z.tail(n)) - 0.5 * (p.G * w1);
  out.tail(n) = w1;
  return out;
}

ComplexVector HamiltonianLinearization::solve_shifted(const QuadraticFactorization& q,
                                                      bool negated,
                                                      const ComplexVector& b) const {
  const Eigen::Index n = pencil_->n_dofs();
  const auto& p = *pencil_;
  const Complex sigma = negated ? -q.shift() : q.shift();
  const SparseMatrix& mass = p.M;
  const SparseMatrix& gyro = p.G;

  // c = F1 b; solve (H - sigma S) y = c; return F2 y.
  const ComplexVector c1 = b.head(n) + 0.5 * (gyro * b.tail(n));
  const ComplexVector c2 = mass * b.tail(n);
  const ComplexVector rhs = -(c1 + sigma * c2);
  const ComplexVector y2 = negated ? q.solve_transposed(rhs) : q.solve(rhs);

  ComplexVector x(2 * n);
  x.head(n) = c2 + sigma * (mass * y2) + 0.5 * (gyro * y2);
  x.tail(n) = y2;
  return x;
}

Eigen::MatrixXd HamiltonianLinearization::dense_h() const {
  const Eigen::Index n = pencil_->n_dofs();
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  h.topRightCorner(n, n) = -Eigen::MatrixXd(pencil_->K);
  h.bottomLeftCorner(n, n) = Eigen::MatrixXd(pencil_->M);
  return h;
}

Eigen::MatrixXd HamiltonianLinearization::dense_s() const {
  const Eigen::Index n = pencil_->n_dofs();
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  s.topLeftCorner(n, n) = Eigen::MatrixXd(pencil_->M);
  s.topRightCorner(n, n) = Eigen::MatrixXd(pencil_->G);
  s.bottomRightCorner(n, n) = Eigen::MatrixXd(pencil_->M);
  return s;
}

Eigen::MatrixXd HamiltonianLinearization::dense_w() const {
  const Eigen::Index n = pencil_->n_dofs();
  const Eigen::MatrixXd m(pencil_->M);
  const Eigen::MatrixXd g(pencil_->G);
  Eigen::MatrixXd f1 = Eigen::MatrixXd::Identity(2 * n, 2 * n);
  f1.topRightCorner(n, n) = 0.5 * g;
  f1.bottomRightCorner(n, n) = m;
  Eigen::MatrixXd f2 = Eigen::MatrixXd::Identity(2 * n, 2 * n);
  f2.topLeftCorner(n, n) = m;
  f2.topRightCorner(n, n) = 0.5 * g;
  const Eigen::MatrixXd hf2 = f2.transpose().partialPivLu().solve(dense_h().transpose());
  return f1.partialPivLu().solve(hf2.transpose());
}

Eigen::MatrixXd HamiltonianLinearization::dense_j(Eigen::Index n) {
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  j.topRightCorner(n, n).setIdentity();
  j.bottomLeftCorner(n, n) = -Eigen::MatrixXd::Identity(n, n);
  return j;
}

StandardLinearization linearize_standard(const PencilMatrices& pencil) {
  return StandardLinearization{&pencil};
}

ComplexVector StandardLinearization::apply_a(const ComplexVector& x) const {
  const Eigen::Index n = pencil->n_dofs();
  ComplexVector out(2 * n);
  out.head(n) = x.tail(n);
  out.tail(n) = -(pencil->K * x.head(n)) - pencil->G * x.tail(n);
  return out;
}

ComplexVector StandardLinearization::apply_b(const ComplexVector& x) const {
  const Eigen::Index n = pencil->n_dofs();
  ComplexVector out(2 * n);
  out.head(n) = x.head(n);
  out.tail(n) = pencil->M * x.tail(n);
  return out;
}

ComplexVector StandardLinearization::shift_invert(const QuadraticFactorization& q,
                                                  const ComplexVector& x) const {
  const Eigen::Index n = pencil->n_dofs();
  const Complex sigma = q.shift();
  const ComplexVector c1 = x.head(n);
  const ComplexVector c2 = pencil->M * x.tail(n);
  const ComplexVector rhs =
      -(c2 + pencil->G * c1 + sigma * (pencil->M * c1));
  ComplexVector out(2 * n);
  out.head(n) = q.solve(rhs);
  out.tail(n) = c1 + sigma * out.head(n);
  return out;
}

Eigen::MatrixXd StandardLinearization::dense_a() const {
  const Eigen::Index n = pencil->n_dofs();
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  a.topRightCorner(n, n).setIdentity();
  a.bottomLeftCorner(n, n) = -Eigen::MatrixXd(pencil->K);
  a.bottomRightCorner(n, n) = -Eigen::MatrixXd(pencil->G);
  return a;
}

Eigen::MatrixXd StandardLinearization::dense_b() const {
  const Eigen::Index n = pencil->n_dofs();
  Eigen::MatrixXd b = Eigen::MatrixXd::Identity(2 * n, 2 * n);
  b.bottomRightCorner(n, n) = Eigen::MatrixXd(pencil->M);
  return b;
}

ShiftedOperator::ShiftedOperator(const HamiltonianLinearization& lin, Complex mu0)
    : lin_(&lin), mu0_(mu0), factorization_(lin.pencil(), mu0) {}

RealVector ShiftedOperator::pair_resolvent(bool negated, const RealVector& b) const {
  const Complex sigma = negated ? -mu0_ : mu0_;
  const ComplexVector x = lin_->solve_shifted(factorization_, negated, b.cast<Complex>());
  if (sigma.imag() != 0.0) {
    // (W - s)^{-1} - (W - conj s)^{-1} = (s - conj s)(W - s)^{-1}(W - conj s)^{-1},
    // and the conj-s solve of a real vector is the conjugate of the s solve.
    return x.imag() / sigma.imag();
  }
  // Real shift: the pair collapses to (W - s)^{-2}.
  const ComplexVector x2 = lin_->solve_shifted(factorization_, negated, x);
  return x2.real();
}

RealVector ShiftedOperator::apply(const RealVector& b) const {
  ++applications_;
  return pair_resolvent(false, pair_resolvent(true, b));
}

Complex ShiftedOperator::transform(Complex mu) const {
  const Complex mu2 = mu * mu;
  const Complex a = mu0_ * mu0_;
  return 1.0 / ((mu2 - a) * (mu2 - std::conj(a)));
}

}  // namespace gyrobloch
