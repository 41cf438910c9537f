#pragma once

#include <optional>
#include <string>
#include <vector>

#include "gyrobloch/assembly.hpp"
#include "gyrobloch/linearization.hpp"

namespace gyrobloch {

enum class Algorithm { Shira, Ira, Dense };

std::string to_string(Algorithm a);
Algorithm parse_algorithm(const std::string& name);

struct EigenEntry {
  Complex mu;
  /// lambda = -i mu: the quasimomentum amplitude, k = lambda * k_hat.
  Complex lambda;
  double residual = 0.0;
  /// Synthesized from the Hamiltonian symmetry rather than computed.
  bool mirrored = false;
  std::optional<ComplexVector> eigenvector;
};

struct SolveStats {
  Algorithm algorithm = Algorithm::Shira;
  bool converged = false;
  int restarts = 0;
  long applications = 0;
  int shift_retries = 0;
  /// Largest isotropy defect seen at any restart (Hamiltonian solver only).
  double max_isotropy_defect = 0.0;
  std::vector<double> isotropy_history;
  /// Residuals of the accepted pairs in discovery order.
  std::vector<double> residual_history;
  bool fell_back = false;
};

/// Converged eigenvalues of mu^2 M + mu G + K.
struct Spectrum {
  std::vector<EigenEntry> entries;
  Complex shift;
  SolveStats stats;
  /// Every eigenvalue whose spectral-transform value exceeds this in modulus
  /// has been found (0 for a full dense solve).
  double transform_threshold = 0.0;
};

struct SolverOptions {
  int n_wanted = 24;
  double tol = 1e-9;
  int max_restarts = 50;
  /// 0 selects max(2 * n_wanted + 8, 20).
  int subspace = 0;
  bool keep_vectors = false;
  std::uint64_t seed = 0x5eed;
  /// Retries with a perturbed shift when the factorization is singular.
  int max_shift_retries = 2;
};

/// Structure-preserving shift-invert Krylov solver on the Hamiltonian form.
/// Returns conjugate pairs found by the iteration plus the mirrored -mu.
Spectrum shira_eigs(const HamiltonianLinearization& lin, Complex mu0,
                    const SolverOptions& options);

/// Single-shift shift-invert Krylov solver on the standard linearization;
/// mirrors are added after residual verification.
Spectrum arnoldi_eigs(const PencilMatrices& pencil, Complex mu0, const SolverOptions& options);

/// Full spectrum of the standard linearization (2N <= 2000).
Spectrum dense_eigs(const PencilMatrices& pencil, bool keep_vectors = false);

/// Spectral transform used by the given algorithm at shift mu0.
Complex spectral_transform(Algorithm a, Complex mu0, Complex mu);

/// Roots of u^H (m^2 M + m G + K) u = 0 closest to mu_guess.
Complex rayleigh_refine(const PencilMatrices& pencil, const ComplexVector& u, Complex mu_guess);

/// Residual of the mirrored eigenvalue `which` of an entry computed with
/// eigenvector u: conj uses (conj mu, conj u), neg uses the transposed
/// pencil at -mu, neg_conj the transposed pencil at -conj mu with conj u.
enum class Mirror { Conj, Neg, NegConj };
double mirror_residual(const PencilMatrices& pencil, Complex mu, const ComplexVector& u,
                       Mirror which);

/// Map mu -> lambda = -i mu.
inline Complex to_lambda(Complex mu) { return Complex(0.0, -1.0) * mu; }

}  // namespace gyrobloch
