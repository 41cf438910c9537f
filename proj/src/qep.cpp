#include "gyrobloch/qep.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <memory>

#include <Eigen/Eigenvalues>

#include "gyrobloch/error.hpp"
#include "gyrobloch/krylov.hpp"

namespace gyrobloch {

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::Shira: return "shira";
    case Algorithm::Ira: return "ira";
    case Algorithm::Dense: return "dense";
  }
  return "unknown";
}

Algorithm parse_algorithm(const std::string& name) {
  if (name == "shira") return Algorithm::Shira;
  if (name == "ira") return Algorithm::Ira;
  if (name == "dense") return Algorithm::Dense;
  throw ConfigError("unknown algorithm '" + name + "' (expected shira, ira or dense)");
}

Complex spectral_transform(Algorithm a, Complex mu0, Complex mu) {
  switch (a) {
    case Algorithm::Shira: {
      const Complex s = mu0 * mu0;
      const Complex m2 = mu * mu;
      return 1.0 / ((m2 - s) * (m2 - std::conj(s)));
    }
    case Algorithm::Ira: return 1.0 / (mu - mu0);
    case Algorithm::Dense: return std::numeric_limits<double>::infinity();
  }
  return 0.0;
}

Complex rayleigh_refine(const PencilMatrices& pencil, const ComplexVector& u, Complex mu_guess) {
  const Complex a = u.dot(pencil.M * u);
  const Complex b = u.dot(pencil.G * u);
  const Complex c = u.dot(pencil.K * u);
  if (std::abs(a) == 0.0) return mu_guess;
  const Complex disc = std::sqrt(b * b - 4.0 * a * c);
  // Stable pair of roots.
  const Complex q = -0.5 * (b + (std::real(std::conj(b) * disc) >= 0.0 ? disc : -disc));
  Complex r1 = q / a;
  Complex r2 = (q != Complex(0.0)) ? c / q : r1;
  return std::abs(r1 - mu_guess) <= std::abs(r2 - mu_guess) ? r1 : r2;
}

double mirror_residual(const PencilMatrices& pencil, Complex mu, const ComplexVector& u,
                       Mirror which) {
  const double norm = u.norm();
  if (norm == 0.0) return 0.0;
  switch (which) {
    case Mirror::Conj:
      return apply_pencil(pencil, std::conj(mu), u.conjugate()).norm() / norm;
    case Mirror::Neg:
      return apply_pencil_transposed(pencil, -mu, u).norm() / norm;
    case Mirror::NegConj:
      return apply_pencil_transposed(pencil, -std::conj(mu), u.conjugate()).norm() / norm;
  }
  return 0.0;
}

namespace {

struct Candidate {
  Complex mu;
  ComplexVector u;
  double residual = 0.0;
};

/// Keep whichever of the raw and the refined eigenvalue has the smaller
/// residual.
Candidate finish_candidate(const PencilMatrices& pencil, Complex mu, ComplexVector u) {
  u.normalize();
  const double raw = pencil_residual(pencil, mu, u);
  const Complex refined = rayleigh_refine(pencil, u, mu);
  const double ref = pencil_residual(pencil, refined, u);
  if (ref <= raw) return {refined, std::move(u), ref};
  return {mu, std::move(u), raw};
}

/// A Ritz vector x of R spans part of the W-eigenspace {mu, -mu}. W^2 x = mu^2 x
/// gives mu^2; (W +- mu) x isolates the component belonging to -+mu.
Candidate recover_from_hamiltonian(const HamiltonianLinearization& lin, const ComplexVector& x) {
  const Eigen::Index n = lin.pencil().n_dofs();
  const ComplexVector w = lin.apply_w(x);
  const ComplexVector w2 = lin.apply_w(w);
  const Complex mu2 = x.dot(w2) / x.squaredNorm();
  Complex mu = std::sqrt(mu2);
  ComplexVector plus = w + mu * x;
  ComplexVector minus = w - mu * x;
  ComplexVector e;
  if (plus.norm() >= minus.norm()) {
    e = std::move(plus);
  } else {
    e = std::move(minus);
    mu = -mu;
  }
  // Eigenvectors of W are F2 (mu u, u): the second block is u.
  return finish_candidate(lin.pencil(), mu, e.tail(n));
}

Candidate recover_from_standard(const PencilMatrices& pencil, Complex mu,
                                const ComplexVector& x) {
  const Eigen::Index n = pencil.n_dofs();
  // x = (u, mu u); use whichever block carries more weight.
  ComplexVector u = x.head(n);
  if (std::abs(mu) > 1.0 && x.tail(n).norm() > 0.0) u = x.tail(n) / mu;
  return finish_candidate(pencil, mu, std::move(u));
}

/// Candidates computed during the acceptance tests, reused when the final
/// spectrum is assembled (keyed by the exact Ritz value).
class CandidateCache {
 public:
  explicit CandidateCache(std::size_t capacity) : capacity_(capacity) {}

  const Candidate& store(Complex value, Candidate c) {
    if (items_.size() >= capacity_) items_.pop_front();
    items_.emplace_back(value, std::move(c));
    return items_.back().second;
  }

  template <typename Compute>
  Candidate take(Complex value, Compute&& compute) {
    for (auto it = items_.rbegin(); it != items_.rend(); ++it) {
      if (it->first == value) return std::move(it->second);
    }
    return compute();
  }

 private:
  std::size_t capacity_;
  std::deque<std::pair<Complex, Candidate>> items_;
};

template <typename Factory>
auto factor_with_retries(Complex mu0, int max_retries, int& retries, Factory&& make) {
  Complex shift = mu0;
  for (retries = 0;; ++retries) {
    auto op = make(shift);
    if (op->ok()) return op;
    if (retries >= max_retries) {
      throw SolverError("shift factorization failed after perturbation retries");
    }
    // Nudge off the spectrum, away from the real and imaginary axes.
    shift += Complex(1e-3, 1.7e-3) * std::max(1.0, std::abs(shift));
  }
}

}  // namespace

Spectrum shira_eigs(const HamiltonianLinearization& lin, Complex mu0,
                    const SolverOptions& options) {
  Spectrum spec;
  spec.stats.algorithm = Algorithm::Shira;
  const auto op = factor_with_retries(mu0, options.max_shift_retries, spec.stats.shift_retries,
                                      [&](Complex s) {
                                        return std::make_unique<ShiftedOperator>(lin, s);
                                      });
  spec.shift = op->shift();
  const PencilMatrices& pencil = lin.pencil();

  KrylovOptions<double> ko;
  ko.n_wanted = options.n_wanted;
  ko.subspace = options.subspace;
  ko.max_restarts = options.max_restarts;
  ko.isotropic = true;
  ko.seed = options.seed;

  CandidateCache cache(4 * static_cast<std::size_t>(options.n_wanted) + 8);
  const auto accept = [&](const RitzPair& pair) {
    const Candidate& c = cache.store(pair.value, recover_from_hamiltonian(lin, pair.vector));
    spec.stats.residual_history.push_back(c.residual);
    return c.residual <= options.tol;
  };
  const KrylovOutcome outcome = krylov_schur<double>(
      [&op](const RealVector& b) { return op->apply(b); }, lin.size(), ko, accept);

  spec.stats.converged = outcome.converged;
  spec.stats.restarts = outcome.restarts;
  spec.stats.applications = outcome.applications;
  spec.stats.isotropy_history = outcome.isotropy_defects;
  for (double d : outcome.isotropy_defects) {
    spec.stats.max_isotropy_defect = std::max(spec.stats.max_isotropy_defect, d);
  }

  double threshold = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < outcome.wanted.size(); ++i) {
    if (!outcome.accepted[i]) continue;
    const RitzPair& pair = outcome.wanted[i];
    threshold = std::min(threshold, std::abs(pair.value));
    Candidate c =
        cache.take(pair.value, [&] { return recover_from_hamiltonian(lin, pair.vector); });

    EigenEntry mirror;
    mirror.mu = -c.mu;
    mirror.lambda = to_lambda(mirror.mu);
    mirror.residual = mirror_residual(pencil, c.mu, c.u, Mirror::Neg);
    mirror.mirrored = true;

    EigenEntry entry;
    entry.mu = c.mu;
    entry.lambda = to_lambda(c.mu);
    entry.residual = c.residual;
    if (options.keep_vectors) entry.eigenvector = std::move(c.u);
    spec.entries.push_back(std::move(entry));
    spec.entries.push_back(std::move(mirror));
  }
  spec.transform_threshold = std::isfinite(threshold) ? threshold : 0.0;
  if (!outcome.converged) spec.transform_threshold = std::numeric_limits<double>::infinity();
  return spec;
}

Spectrum arnoldi_eigs(const PencilMatrices& pencil, Complex mu0, const SolverOptions& options) {
  Spectrum spec;
  spec.stats.algorithm = Algorithm::Ira;
  const StandardLinearization lin = linearize_standard(pencil);
  const auto q = factor_with_retries(mu0, options.max_shift_retries, spec.stats.shift_retries,
                                     [&](Complex s) {
                                       return std::make_unique<QuadraticFactorization>(pencil, s);
                                     });
  const Complex sigma = q->shift();
  spec.shift = sigma;

  KrylovOptions<Complex> ko;
  ko.n_wanted = options.n_wanted;
  ko.subspace = options.subspace;
  ko.max_restarts = options.max_restarts;
  ko.seed = options.seed;

  const auto accept = [&](const RitzPair& pair) {
    const Candidate c = recover_from_standard(pencil, sigma + 1.0 / pair.value, pair.vector);
    spec.stats.residual_history.push_back(c.residual);
    return c.residual <= options.tol;
  };
  const KrylovOutcome outcome = krylov_schur<Complex>(
      [&](const ComplexVector& x) { return lin.shift_invert(*q, x); }, lin.size(), ko, accept);

  spec.stats.converged = outcome.converged;
  spec.stats.restarts = outcome.restarts;
  spec.stats.applications = outcome.applications;

  struct Found {
    Complex mu;
    ComplexVector u;
  };
  std::vector<Found> found;
  double threshold = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < outcome.wanted.size(); ++i) {
    if (!outcome.accepted[i]) continue;
    const RitzPair& pair = outcome.wanted[i];
    threshold = std::min(threshold, std::abs(pair.value));
    Candidate c = recover_from_standard(pencil, sigma + 1.0 / pair.value, pair.vector);
    EigenEntry entry;
    entry.mu = c.mu;
    entry.lambda = to_lambda(c.mu);
    entry.residual = c.residual;
    if (options.keep_vectors) entry.eigenvector = c.u;
    spec.entries.push_back(std::move(entry));
    found.push_back({c.mu, std::move(c.u)});
  }

  // Mirrors are not produced by a single-shift iteration; add each one
  // unless the iteration already found it.
  const auto present = [&spec](Complex mu) {
    const double tol = 1e-8 * std::max(1.0, std::abs(mu));
    return std::any_of(spec.entries.begin(), spec.entries.end(),
                       [&](const EigenEntry& e) { return std::abs(e.mu - mu) <= tol; });
  };
  for (const Found& f : found) {
    const std::pair<Complex, Mirror> mirrors[] = {{std::conj(f.mu), Mirror::Conj},
                                                  {-f.mu, Mirror::Neg},
                                                  {-std::conj(f.mu), Mirror::NegConj}};
    for (const auto& [mu, which] : mirrors) {
      if (present(mu)) continue;
      EigenEntry m;
      m.mu = mu;
      m.lambda = to_lambda(mu);
      m.residual = mirror_residual(pencil, f.mu, f.u, which);
      m.mirrored = true;
      spec.entries.push_back(std::move(m));
    }
  }
  spec.transform_threshold = std::isfinite(threshold) ? threshold : 0.0;
  if (!outcome.converged) spec.transform_threshold = std::numeric_limits<double>::infinity();
  return spec;
}

Spectrum dense_eigs(const PencilMatrices& pencil, bool keep_vectors) {
  const Eigen::Index n = pencil.n_dofs();
  if (2 * n > 2000) {
    throw SolverError("dense_eigs: problem of size 2N = " + std::to_string(2 * n) +
                      " exceeds the dense limit 2000");
  }
  const Eigen::MatrixXd m(pencil.M);
  const Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) throw SolverError("mass matrix is not positive definite");

  // B^{-1} A = [[0, I], [-M^{-1} K, -M^{-1} G]].
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  a.topRightCorner(n, n).setIdentity();
  a.bottomLeftCorner(n, n) = -llt.solve(Eigen::MatrixXd(pencil.K));
  a.bottomRightCorner(n, n) = -llt.solve(Eigen::MatrixXd(pencil.G));

  Eigen::EigenSolver<Eigen::MatrixXd> es(a);
  if (es.info() != Eigen::Success) throw SolverError("dense eigensolver failed");

  Spectrum spec;
  spec.stats.algorithm = Algorithm::Dense;
  spec.stats.converged = true;
  const Eigen::MatrixXcd vectors = es.eigenvectors();
  for (Eigen::Index i = 0; i < 2 * n; ++i) {
    const Complex mu = es.eigenvalues()(i);
    const ComplexVector x = vectors.col(i);
    ComplexVector u = x.head(n);
    if (std::abs(mu) > 1.0) u = x.tail(n) / mu;
    u.normalize();
    EigenEntry e;
    e.mu = mu;
    e.lambda = to_lambda(mu);
    e.residual = pencil_residual(pencil, mu, u);
    if (keep_vectors) e.eigenvector = std::move(u);
    spec.entries.push_back(std::move(e));
  }
  return spec;
}

}  // namespace gyrobloch
