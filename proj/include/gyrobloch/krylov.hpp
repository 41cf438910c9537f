#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "gyrobloch/assembly.hpp"

namespace gyrobloch {

/// Krylov-Schur iteration for the eigenvalues of largest modulus of a
/// linear operator, real or complex.
///
/// In isotropic mode (real scalars, even dimension) every new basis vector is
/// additionally orthogonalized against J times the current basis, keeping
/// span(V) perpendicular to J span(V). This is the restart-stable form of the
/// skew-Hamiltonian Arnoldi process: for a skew-Hamiltonian operator each
/// eigenvalue appears only once in the projected matrix.
template <typename Scalar>
struct KrylovOptions {
  int n_wanted = 6;
  /// Basis size m; 0 selects max(2 * n_wanted + 8, 20).
  int subspace = 0;
  int max_restarts = 50;
  /// Ritz pairs whose estimated relative residual is above this are not
  /// offered to the acceptance test.
  double screen_tolerance = 1e-6;
  bool isotropic = false;
  std::uint64_t seed = 0x5eed;
};

struct RitzPair {
  Complex value;
  ComplexVector vector;
  /// |beta * last component| / |value|.
  double estimate = 0.0;
};

struct KrylovOutcome {
  /// Wanted Ritz pairs, ordered by decreasing |value|; closed under
  /// conjugation for real operators.
  std::vector<RitzPair> wanted;
  std::vector<bool> accepted;
  bool converged = false;
  int restarts = 0;
  long applications = 0;
  /// max |<v_i, J v_j>| over the basis, recorded after every restart
  /// (isotropic mode only).
  std::vector<double> isotropy_defects;
};

template <typename Scalar>
using KrylovOperator = std::function<Eigen::Matrix<Scalar, Eigen::Dynamic, 1>(
    const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>&)>;

/// `accept` decides final convergence of a screened Ritz pair (for example
/// by a residual against the original problem).
template <typename Scalar>
KrylovOutcome krylov_schur(const KrylovOperator<Scalar>& op, Eigen::Index dim,
                           const KrylovOptions<Scalar>& options,
                           const std::function<bool(const RitzPair&)>& accept);

/// max |<v_i, J v_j>| for the columns of V.
double isotropy_defect(const Eigen::MatrixXd& basis);

/// Swap adjacent diagonal entries k, k+1 of a complex upper-triangular T,
/// updating the unitary U so that U T U^H is unchanged.
void swap_schur_entries(Eigen::MatrixXcd& t, Eigen::MatrixXcd& u, Eigen::Index k);

}  // namespace gyrobloch
