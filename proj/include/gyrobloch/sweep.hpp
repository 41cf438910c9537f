#pragma once

#include <optional>
#include <string>
#include <vector>

#include "gyrobloch/assembly.hpp"
#include "gyrobloch/qep.hpp"

namespace gyrobloch {

/// Frequency x direction scan settings. Directions cover 0 <= theta <= pi/4
/// (the irreducible wedge of the square lattice).
struct SweepConfig {
  double omega_lo = 0.0;
  double omega_hi = 0.7;
  double omega_step = 2e-3;
  int theta_count = 17;
  /// Eigenvalue pairs requested per solve (the starting value; grown when the
  /// converged set does not cover the filter window).
  int n_eigs = 24;
  /// Filter |lambda| <= bz_constant / cos(theta).
  double bz_constant = 1.0;
  /// Eigenvalues with |Im lambda| <= gap_threshold count as real.
  double gap_threshold = 1e-6;
  double endpoint_tolerance = 1e-5;

  Algorithm algorithm = Algorithm::Shira;
  /// Shift mu0 = shift_offset + i * shift_target. No target: half the filter
  /// radius times sqrt 2, which balances the transform at lambda = 0 and at
  /// the window edge.
  std::optional<double> shift_target;
  double shift_offset = 0.05;
  double tol = 1e-9;
  int max_restarts = 50;
  /// Retry with the single-shift solver when the structured one fails.
  bool fallback = true;
  /// Also fall back when two converged eigenvalues are closer than this
  /// (0 disables the check).
  double fallback_cluster_diameter = 0.0;
  /// Upper bound on the strip half-width |Im lambda| <= delta that a solve
  /// must cover completely so that the reported margin is exact.
  double margin_cap = 0.05;
  /// Growth limit for n_eigs when coverage is insufficient.
  int max_n_eigs = 120;
  int threads = 1;
  std::uint64_t seed = 0x5eed;

  /// Throws ConfigError listing every violated constraint.
  void validate() const;
  std::vector<double> thetas() const;
  std::vector<double> omegas() const;
};

enum class PointStatus { Ok, Indeterminate };

/// Result for one (omega, theta).
struct PointResult {
  double omega = 0.0;
  double theta = 0.0;
  /// In-window eigenvalues, sorted by (Re lambda, Im lambda).
  std::vector<EigenEntry> filtered;
  /// min |Im lambda| over `filtered` (infinity when empty).
  double min_abs_im = 0.0;
  /// Half-width of the strip |Im lambda| <= covered around the real segment
  /// of the window in which every eigenvalue is known to have been found.
  double covered_strip = 0.0;
  PointStatus status = PointStatus::Ok;
  /// A real eigenvalue lies in the window.
  bool real_hit = false;
  SolveStats stats;
  int n_eigs_used = 0;
  double max_mirror_residual = 0.0;
};

enum class FrequencyClass { Gap, NonGap, Indeterminate };
std::string to_string(FrequencyClass c);

struct FrequencyResult {
  double omega = 0.0;
  /// min over theta of min |Im lambda| among filtered eigenvalues.
  double gap_margin = 0.0;
  FrequencyClass classification = FrequencyClass::NonGap;
};

struct GapInterval {
  double lo = 0.0;
  double hi = 0.0;
  /// Final bisection brackets (non-gap side, gap side) for each endpoint.
  double lo_outside = 0.0;
  double hi_outside = 0.0;
  /// Touches the end of the scanned range: that endpoint is not refined.
  bool open_lo = false;
  bool open_hi = false;
  /// Contains an indeterminate sample.
  bool flagged = false;
};

struct Provenance {
  double h = 0.0;
  int n_per_side = 0;
  int n_dofs = 0;
  std::string model_id;
  std::string config_hash;
};

/// Running statistics over solved points.
struct SolveTally {
  long solves = 0;
  int indeterminate_points = 0;
  double max_isotropy_defect = 0.0;
  double max_mirror_residual = 0.0;

  void add(const PointResult& p);
  void merge(const SolveTally& other);
};

struct GapReport {
  std::vector<PointResult> points;
  std::vector<FrequencyResult> frequencies;
  std::vector<GapInterval> gaps;
  Provenance provenance;
  /// Totals below include the bisection solves.
  int indeterminate_points = 0;
  double max_isotropy_defect = 0.0;
  double max_mirror_residual = 0.0;
  long solves = 0;
};

/// Shared, immutable per-run state: the mesh, model and precomputed pencil
/// pieces. Safe to use from several threads.
class SweepContext {
 public:
  SweepContext(const PeriodicMesh& mesh, const MaterialModel& model, SweepConfig config,
               AssemblyOptions assembly = {});

  const PeriodicMesh& mesh() const { return *mesh_; }
  const MaterialModel& model() const { return *model_; }
  const SweepConfig& config() const { return config_; }
  const PencilBasis& basis() const { return basis_; }

  PencilMatrices pencil(double omega, double theta) const;
  /// Filter radius c / cos(theta).
  double window(double theta) const;
  Complex shift(double theta) const;

 private:
  const PeriodicMesh* mesh_;
  const MaterialModel* model_;
  SweepConfig config_;
  PencilBasis basis_;
};

/// Entries with |lambda| <= c / cos(theta).
std::vector<EigenEntry> filter_bz(const Spectrum& spectrum, double theta, double c);

/// Smallest |transform| over the rectangle |Re lambda| <= radius,
/// |Im lambda| <= strip, taking the Hamiltonian images of each point into
/// account. Every eigenvalue in the rectangle has a transform at least this
/// large.
double coverage_bound(Algorithm a, Complex mu0, double radius, double strip);

/// Solve one (omega, theta) point with retries, fallback and coverage growth.
PointResult solve_point(const SweepContext& ctx, double omega, double theta);

struct GapDecision {
  FrequencyClass classification = FrequencyClass::NonGap;
  double gap_margin = 0.0;
  std::vector<PointResult> points;
};

/// Classify one frequency. With early_exit the remaining directions are
/// skipped once a real eigenvalue is found (theta = 0 and pi/4 go first).
GapDecision is_gap_frequency(const SweepContext& ctx, double omega, bool early_exit = false);

/// Full scan with grouping and endpoint bisection.
GapReport sweep_band_structure(const SweepContext& ctx);

/// Bisect gap endpoints on this context starting from approximate intervals
/// (for example from a coarser mesh). Each endpoint is first bracketed inside
/// +-search around the guess (widened if needed).
std::vector<GapInterval> refine_gaps(const SweepContext& ctx,
                                     const std::vector<GapInterval>& guesses, double search,
                                     SolveTally* tally = nullptr);

/// A frequency sample is indeterminate or a gap endpoint could not be
/// resolved.
bool has_unresolved(const GapReport& report);

/// Continuum eigenvalues for constant eps: for every m with
/// |m1|, |m2| <= m_range the roots of |m + lambda k_hat|^2 = omega^2 eps.
std::vector<Complex> analytic_homogeneous_spectrum(double omega, const Eigen::Vector2d& k_hat,
                                                   double eps, int m_range);

/// Canonical ordering: (Re lambda, Im lambda) lexicographic.
void sort_entries(std::vector<EigenEntry>& entries);

}  // namespace gyrobloch
