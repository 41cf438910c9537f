#include <doctest.h>

#include <algorithm>
#include <random>

#include <Eigen/Eigenvalues>

#include "gyrobloch/error.hpp"
#include "gyrobloch/krylov.hpp"
#include "gyrobloch/linearization.hpp"
#include "oracles.hpp"

using namespace gyrobloch;

namespace {

std::vector<Complex> sorted_by_modulus(std::vector<Complex> v) {
  std::sort(v.begin(), v.end(), [](Complex a, Complex b) {
    if (std::abs(a) != std::abs(b)) return std::abs(a) > std::abs(b);
    return a.imag() > b.imag();
  });
  return v;
}

const auto accept_all = [](const RitzPair&) { return true; };

}  // namespace

TEST_CASE("swapping Schur entries keeps the factorization") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> d;
  Eigen::MatrixXcd t = Eigen::MatrixXcd::Zero(6, 6);
  for (int i = 0; i < 6; ++i)
    for (int j = i; j < 6; ++j) t(i, j) = Complex(d(rng), d(rng));
  Eigen::MatrixXcd u = Eigen::HouseholderQR<Eigen::MatrixXcd>(Eigen::MatrixXcd::Random(6, 6))
                           .householderQ();
  const Eigen::MatrixXcd a = u * t * u.adjoint();
  const Eigen::VectorXcd diag = t.diagonal();
  for (int k : {0, 2, 4, 1}) {
    const Complex upper = t(k, k);
    const Complex lower = t(k + 1, k + 1);
    swap_schur_entries(t, u, k);
    CHECK(t(k, k) == lower);
    CHECK(t(k + 1, k + 1) == upper);
    CHECK((u * t * u.adjoint() - a).norm() <= 1e-13 * a.norm());
    CHECK((u.adjoint() * u - Eigen::MatrixXcd::Identity(6, 6)).norm() <= 1e-14);
    CHECK(t.triangularView<Eigen::StrictlyLower>().toDenseMatrix().norm() == 0.0);
  }
}

TEST_CASE("complex Krylov-Schur finds the dominant eigenvalues") {
  const int n = 200;
  std::mt19937_64 rng(2);
  std::normal_distribution<double> d;
  Eigen::VectorXcd lambda(n);
  for (int i = 0; i < n; ++i) lambda(i) = Complex(d(rng), d(rng)) * (1.0 / (1.0 + i));
  const Eigen::MatrixXcd q =
      Eigen::HouseholderQR<Eigen::MatrixXcd>(Eigen::MatrixXcd::Random(n, n)).householderQ();
  const Eigen::MatrixXcd a = q * lambda.asDiagonal() * q.adjoint();

  KrylovOptions<Complex> opt;
  opt.n_wanted = 5;
  opt.screen_tolerance = 1e-10;
  const KrylovOutcome out = krylov_schur<Complex>(
      [&](const Eigen::VectorXcd& x) -> Eigen::VectorXcd { return a * x; }, n, opt, accept_all);
  REQUIRE(out.converged);
  REQUIRE(out.wanted.size() == 5);
  const auto exact = sorted_by_modulus({lambda.data(), lambda.data() + n});
  for (int i = 0; i < 5; ++i) {
    CHECK(std::abs(out.wanted[i].value - exact[i]) <= 1e-9 * std::abs(exact[i]));
    const auto& x = out.wanted[i].vector;
    CHECK((a * x - out.wanted[i].value * x).norm() <= 1e-8 * x.norm());
  }
}

TEST_CASE("real Krylov-Schur returns closed conjugate pairs") {
  const int n = 120;
  std::mt19937_64 rng(3);
  std::normal_distribution<double> d;
  // Block-diagonal 2x2 rotations-scalings, similarity by an orthogonal Q.
  Eigen::MatrixXd blocks = Eigen::MatrixXd::Zero(n, n);
  std::vector<Complex> exact;
  for (int i = 0; i < n; i += 2) {
    const double scale = 1.0 / (1.0 + i);
    const double re = d(rng) * scale;
    const double im = (i % 4 == 0) ? d(rng) * scale : 0.0;
    if (im != 0.0) {
      blocks(i, i) = re;
      blocks(i + 1, i + 1) = re;
      blocks(i, i + 1) = im;
      blocks(i + 1, i) = -im;
      exact.emplace_back(re, im);
      exact.emplace_back(re, -im);
    } else {
      blocks(i, i) = re;
      blocks(i + 1, i + 1) = -0.9 * re;
      exact.emplace_back(re, 0.0);
      exact.emplace_back(-0.9 * re, 0.0);
    }
  }
  const Eigen::MatrixXd q =
      Eigen::HouseholderQR<Eigen::MatrixXd>(Eigen::MatrixXd::Random(n, n)).householderQ();
  const Eigen::MatrixXd a = q * blocks * q.transpose();
  exact = sorted_by_modulus(exact);

  KrylovOptions<double> opt;
  opt.n_wanted = 7;
  opt.screen_tolerance = 1e-10;
  const KrylovOutcome out = krylov_schur<double>(
      [&](const Eigen::VectorXd& x) -> Eigen::VectorXd { return a * x; }, n, opt, accept_all);
  REQUIRE(out.converged);
  for (const auto& pair : out.wanted) {
    CHECK(oracle::distance_to_set(pair.value, exact) <= 1e-9 * std::abs(pair.value));
    if (pair.value.imag() != 0.0) {
      // The conjugate is present as well.
      bool found = false;
      for (const auto& other : out.wanted) found = found || other.value == std::conj(pair.value);
      CHECK(found);
    }
  }
}

TEST_CASE("isotropic Arnoldi on a skew-Hamiltonian operator") {
  const int n = 40;
  const PencilMatrices p = oracle::random_pencil(n, 21);
  const HamiltonianLinearization lin(p);
  const ShiftedOperator r(lin, Complex(0.3, 0.8));
  REQUIRE(r.ok());

  KrylovOptions<double> opt;
  opt.n_wanted = 4;
  opt.isotropic = true;
  opt.screen_tolerance = 1e-10;
  opt.max_restarts = 100;
  const KrylovOutcome out = krylov_schur<double>(
      [&](const RealVector& x) -> RealVector { return r.apply(x); }, 2 * n, opt, accept_all);
  REQUIRE(out.converged);
  for (double defect : out.isotropy_defects) CHECK(defect <= 1e-10);

  // Each eigenvalue of R is double; the isotropic basis sees it once, so
  // the Ritz values are the distinct dominant transformed eigenvalues.
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(lin.dense_w().cast<Complex>());
  std::vector<Complex> nus;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    nus.push_back(r.transform(es.eigenvalues()(i)));
  }
  for (const auto& pair : out.wanted) {
    CHECK(oracle::distance_to_set(pair.value, nus) <= 1e-8 * std::abs(pair.value));
  }
  for (std::size_t i = 0; i < out.wanted.size(); ++i)
    for (std::size_t j = i + 1; j < out.wanted.size(); ++j)
      CHECK(std::abs(out.wanted[i].value - out.wanted[j].value) >
            1e-6 * std::abs(out.wanted[i].value));
}

TEST_CASE("isotropy defect") {
  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(4, 2);
  v(0, 0) = 1.0;
  v(1, 1) = 1.0;
  CHECK(isotropy_defect(v) == 0.0);
  v(2, 1) = 0.5;  // <v0, J v1> = -0.5
  CHECK(isotropy_defect(v) == 0.5);
}

TEST_CASE("subspace too small") {
  KrylovOptions<double> opt;
  opt.n_wanted = 4;
  const auto op = [](const Eigen::VectorXd& x) -> Eigen::VectorXd { return x; };
  CHECK_THROWS_AS(krylov_schur<double>(op, 4, opt, accept_all), SolverError);
}
