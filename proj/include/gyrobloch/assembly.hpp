#pragma once

#include <complex>
#include <iosfwd>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "gyrobloch/material.hpp"
#include "gyrobloch/mesh.hpp"

namespace gyrobloch {

using SparseMatrix = Eigen::SparseMatrix<double>;
using ComplexVector = Eigen::VectorXcd;
using Complex = std::complex<double>;

/// Real gyroscopic triple of mu^2 M + mu G + K, obtained from the Bloch
/// pencil lambda^2 A2 + lambda A1 + A0 by lambda = -i mu:
/// M = A2 (mass), G = i A1 (skew), K = -A0 = omega^2 (eps-weighted mass) - (stiffness).
struct PencilMatrices {
  SparseMatrix M;
  SparseMatrix G;
  SparseMatrix K;
  double omega = 0.0;
  Eigen::Vector2d k_hat = Eigen::Vector2d::UnitX();

  Eigen::Index n_dofs() const { return M.rows(); }
};

struct AssemblyOptions {
  /// Elements cut by the inclusion boundary integrate eps-weighted terms on
  /// 4^interface_levels subtriangles.
  int interface_levels = 2;
};

/// Frequency- and direction-independent pieces of the pencil for one mesh
/// and inclusion geometry. Any (omega, k_hat) pencil is a linear
/// combination of these matrices.
struct PencilBasis {
  SparseMatrix mass;
  SparseMatrix stiffness;
  /// Mass restricted to the background / inclusion region.
  SparseMatrix mass_background;
  SparseMatrix mass_inclusion;
  /// G for k_hat = e1 and k_hat = e2.
  SparseMatrix gyro_x;
  SparseMatrix gyro_y;
  int cut_elements = 0;
};

PencilBasis build_pencil_basis(const PeriodicMesh& mesh, const MaterialModel& model,
                               AssemblyOptions options = {});

/// Fast path: combine precomputed pieces.
PencilMatrices assemble_pencil(const PencilBasis& basis, const MaterialModel& model,
                               double omega, const Eigen::Vector2d& k_hat);

/// Direct element loop with eps evaluated at every quadrature point.
PencilMatrices assemble_pencil(const PeriodicMesh& mesh, const MaterialModel& model,
                               double omega, const Eigen::Vector2d& k_hat,
                               AssemblyOptions options = {});

/// mu^2 M u + mu G u + K u.
ComplexVector apply_pencil(const PencilMatrices& p, Complex mu, const ComplexVector& u);

/// (mu^2 M + mu G + K)^T u, using explicit transposes of the stored matrices.
ComplexVector apply_pencil_transposed(const PencilMatrices& p, Complex mu,
                                      const ComplexVector& u);

/// ||Q(mu) u|| / ||u||.
double pencil_residual(const PencilMatrices& p, Complex mu, const ComplexVector& u);

/// Unit direction (cos theta, sin theta).
Eigen::Vector2d direction(double theta);

/// MatrixMarket coordinate dump (1-based indices).
void write_matrix_market(std::ostream& os, const SparseMatrix& a);

}  // namespace gyrobloch
