#include "gyrobloch/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <sstream>

#include "gyrobloch/error.hpp"
#include "gyrobloch/parallel.hpp"

namespace gyrobloch {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Coverage must beat the solver threshold by this factor, to absorb the
/// sampling of the rectangle.
constexpr double kCoverageSafety = 1.02;

}  // namespace

void SweepConfig::validate() const {
  std::vector<std::string> problems;
  const auto require = [&](bool ok, const std::string& what) {
    if (!ok) problems.push_back(what);
  };
  require(std::isfinite(omega_lo) && std::isfinite(omega_hi) && omega_lo < omega_hi,
          "omega range must satisfy omega_lo < omega_hi");
  require(omega_lo >= 0.0, "omega_lo must be non-negative");
  require(omega_step > 0.0, "omega_step must be positive");
  require(theta_count >= 1, "theta_count must be at least 1");
  require(n_eigs >= 1, "n_eigs must be at least 1");
  require(max_n_eigs >= n_eigs, "max_n_eigs must be at least n_eigs");
  require(bz_constant > 0.0, "bz_constant must be positive");
  require(tol > 0.0, "solver tolerance must be positive");
  require(gap_threshold > tol, "gap_threshold must exceed the solver tolerance");
  require(endpoint_tolerance > 0.0, "endpoint_tolerance must be positive");
  require(!shift_target || *shift_target > 0.0, "shift target must be positive");
  require(shift_offset > 0.0, "shift offset must be positive");
  require(max_restarts >= 0, "max_restarts must be non-negative");
  require(fallback_cluster_diameter >= 0.0, "fallback_cluster_diameter must be non-negative");
  require(margin_cap >= gap_threshold, "margin_cap must be at least gap_threshold");
  require(threads >= 1, "threads must be at least 1");
  if (!problems.empty()) {
    std::ostringstream os;
    os << "invalid sweep configuration:";
    for (const auto& p : problems) os << "\n  - " << p;
    throw ConfigError(os.str());
  }
}

std::vector<double> SweepConfig::thetas() const {
  std::vector<double> out;
  if (theta_count == 1) return {0.0};
  for (int j = 0; j < theta_count; ++j) out.push_back(0.25 * kPi * j / (theta_count - 1));
  return out;
}

std::vector<double> SweepConfig::omegas() const {
  std::vector<double> out;
  const auto count = static_cast<long>(std::floor((omega_hi - omega_lo) / omega_step + 1e-9));
  for (long i = 0; i <= count; ++i) {
    out.push_back(std::min(omega_lo + static_cast<double>(i) * omega_step, omega_hi));
  }
  if (omega_hi - out.back() > 1e-9 * omega_step) out.push_back(omega_hi);
  return out;
}

std::string to_string(FrequencyClass c) {
  switch (c) {
    case FrequencyClass::Gap: return "gap";
    case FrequencyClass::NonGap: return "band";
    case FrequencyClass::Indeterminate: return "indeterminate";
  }
  return "unknown";
}

SweepContext::SweepContext(const PeriodicMesh& mesh, const MaterialModel& model,
                           SweepConfig config, AssemblyOptions assembly)
    : mesh_(&mesh), model_(&model), config_(std::move(config)),
      basis_(build_pencil_basis(mesh, model, assembly)) {
  config_.validate();
  if (!model.valid_range.contains(config_.omega_lo) ||
      !model.valid_range.contains(config_.omega_hi)) {
    std::ostringstream os;
    os << "omega range [" << config_.omega_lo << ", " << config_.omega_hi
       << "] is outside the model's valid range [" << model.valid_range.lo << ", "
       << model.valid_range.hi << "]";
    throw ConfigError(os.str());
  }
}

PencilMatrices SweepContext::pencil(double omega, double theta) const {
  return assemble_pencil(basis_, *model_, omega, direction(theta));
}

double SweepContext::window(double theta) const { return config_.bz_constant / std::cos(theta); }

Complex SweepContext::shift(double theta) const {
  const double target = config_.shift_target ? *config_.shift_target
                                             : window(theta) / std::sqrt(2.0);
  return {config_.shift_offset, target};
}

void sort_entries(std::vector<EigenEntry>& entries) {
  std::sort(entries.begin(), entries.end(), [](const EigenEntry& a, const EigenEntry& b) {
    if (a.lambda.real() != b.lambda.real()) return a.lambda.real() < b.lambda.real();
    return a.lambda.imag() < b.lambda.imag();
  });
}

std::vector<EigenEntry> filter_bz(const Spectrum& spectrum, double theta, double c) {
  const double radius = c / std::cos(theta);
  std::vector<EigenEntry> out;
  for (const auto& e : spectrum.entries) {
    if (std::abs(e.lambda) <= radius) out.push_back(e);
  }
  return out;
}

double coverage_bound(Algorithm a, Complex mu0, double radius, double strip) {
  if (a == Algorithm::Dense) return kInf;
  // |transform| of the best Hamiltonian image of lambda (mu = i lambda).
  const auto value = [&](Complex lambda) {
    const Complex mu = Complex(0.0, 1.0) * lambda;
    double best = 0.0;
    for (const Complex img : {mu, std::conj(mu), -mu, -std::conj(mu)}) {
      best = std::max(best, std::abs(spectral_transform(a, mu0, img)));
    }
    return best;
  };
  double bound = kInf;
  const int nx = 801;
  const int ny = 9;
  for (int i = 0; i < nx; ++i) {
    const double x = -radius + 2.0 * radius * i / (nx - 1);
    for (int j = 0; j < ny; ++j) {
      const double y = -strip + 2.0 * strip * j / (ny - 1);
      bound = std::min(bound, value({x, y}));
    }
  }
  for (int j = 0; j < 8 * ny; ++j) {
    const double y = -strip + 2.0 * strip * j / (8 * ny - 1);
    bound = std::min({bound, value({-radius, y}), value({radius, y})});
  }
  return bound;
}

namespace {

bool has_cluster(const Spectrum& s, double diameter) {
  if (diameter <= 0.0) return false;
  for (std::size_t i = 0; i < s.entries.size(); ++i) {
    for (std::size_t j = i + 1; j < s.entries.size(); ++j) {
      const double d = std::abs(s.entries[i].mu - s.entries[j].mu);
      if (d > 0.0 && d < diameter) return true;
    }
  }
  return false;
}

Spectrum run_solver(Algorithm a, const PencilMatrices& pencil, Complex mu0,
                    const SolverOptions& opt) {
  switch (a) {
    case Algorithm::Shira: {
      const HamiltonianLinearization lin(pencil);
      return shira_eigs(lin, mu0, opt);
    }
    case Algorithm::Ira: return arnoldi_eigs(pencil, mu0, opt);
    case Algorithm::Dense: return dense_eigs(pencil, opt.keep_vectors);
  }
  throw SolverError("unknown algorithm");
}

/// Solver with one perturbed-shift retry and optional fallback. Never throws
/// SolverError; failures come back as a non-converged spectrum.
Spectrum robust_solve(const SweepConfig& cfg, const PencilMatrices& pencil, Complex mu0,
                      const SolverOptions& opt) {
  const auto attempt = [&](Algorithm a, Complex shift) -> std::optional<Spectrum> {
    try {
      return run_solver(a, pencil, shift, opt);
    } catch (const SolverError&) {
      return std::nullopt;
    }
  };

  std::optional<Spectrum> s = attempt(cfg.algorithm, mu0);
  int retries = 0;
  if (!s || !s->stats.converged) {
    ++retries;
    const Complex perturbed(1.5 * mu0.real(), 1.05 * mu0.imag());
    s = attempt(cfg.algorithm, perturbed);
  }
  const bool failed = !s || !s->stats.converged;
  const bool clustered = s && cfg.algorithm == Algorithm::Shira &&
                         has_cluster(*s, cfg.fallback_cluster_diameter);
  if (cfg.fallback && cfg.algorithm == Algorithm::Shira && (failed || clustered)) {
    std::optional<Spectrum> f = attempt(Algorithm::Ira, mu0);
    if (f && (f->stats.converged || failed)) {
      f->stats.fell_back = true;
      if (s) {
        f->stats.max_isotropy_defect = s->stats.max_isotropy_defect;
        f->stats.isotropy_history = s->stats.isotropy_history;
      }
      s = std::move(f);
    }
  }
  if (!s) {
    Spectrum empty;
    empty.shift = mu0;
    empty.stats.algorithm = cfg.algorithm;
    empty.transform_threshold = kInf;
    s = std::move(empty);
  }
  s->stats.shift_retries += retries;
  return *std::move(s);
}

double mirror_check(const PencilMatrices& pencil, const Spectrum& s) {
  double worst = 0.0;
  for (const auto& e : s.entries) {
    if (e.mirrored) {
      worst = std::max(worst, e.residual);
    } else if (e.eigenvector) {
      for (Mirror m : {Mirror::Conj, Mirror::Neg, Mirror::NegConj}) {
        worst = std::max(worst, mirror_residual(pencil, e.mu, *e.eigenvector, m));
      }
    }
  }
  return worst;
}

}  // namespace

PointResult solve_point(const SweepContext& ctx, double omega, double theta) {
  const SweepConfig& cfg = ctx.config();
  PointResult out;
  out.omega = omega;
  out.theta = theta;

  const PencilMatrices pencil = ctx.pencil(omega, theta);
  const double radius = ctx.window(theta);
  const Complex mu0 = ctx.shift(theta);
  const int capacity = static_cast<int>(pencil.n_dofs()) - 2;

  SolverOptions opt;
  opt.tol = cfg.tol;
  opt.max_restarts = cfg.max_restarts;
  opt.seed = cfg.seed;
  opt.keep_vectors = true;
  int n = std::min(cfg.n_eigs, capacity);

  Spectrum s;
  for (;;) {
    opt.n_wanted = n;
    s = robust_solve(cfg, pencil, mu0, opt);
    out.n_eigs_used = n;
    out.filtered = filter_bz(s, theta, cfg.bz_constant);
    out.min_abs_im = kInf;
    for (const auto& e : out.filtered) out.min_abs_im = std::min(out.min_abs_im, std::abs(e.lambda.imag()));
    if (!s.stats.converged) break;

    const Algorithm used = s.stats.fell_back ? Algorithm::Ira : s.stats.algorithm;
    const double want = std::clamp(out.min_abs_im, cfg.gap_threshold, cfg.margin_cap);
    const double needed = kCoverageSafety * s.transform_threshold;
    if (coverage_bound(used, s.shift, radius, want) > needed) {
      out.covered_strip = want;
      break;
    }
    const bool basic = coverage_bound(used, s.shift, radius, cfg.gap_threshold) > needed;
    const int grown = std::min({static_cast<int>(std::ceil(1.5 * n)), cfg.max_n_eigs, capacity});
    if (grown <= n) {
      out.covered_strip = basic ? cfg.gap_threshold : 0.0;
      break;
    }
    n = grown;
  }

  out.stats = s.stats;
  out.max_mirror_residual = mirror_check(pencil, s);
  for (auto& e : out.filtered) e.eigenvector.reset();
  sort_entries(out.filtered);
  out.real_hit = out.min_abs_im <= cfg.gap_threshold;
  const bool complete = s.stats.converged && out.covered_strip >= cfg.gap_threshold;
  out.status = (out.real_hit || complete) ? PointStatus::Ok : PointStatus::Indeterminate;
  return out;
}

namespace {

FrequencyClass classify(const std::vector<PointResult>& points, double& margin) {
  margin = kInf;
  bool indeterminate = false;
  bool real = false;
  for (const auto& p : points) {
    margin = std::min(margin, p.min_abs_im);
    real = real || p.real_hit;
    indeterminate = indeterminate || p.status == PointStatus::Indeterminate;
  }
  if (real) return FrequencyClass::NonGap;
  if (indeterminate) return FrequencyClass::Indeterminate;
  return FrequencyClass::Gap;
}

GapDecision decide(const SweepContext& ctx, double omega, bool early_exit, int threads) {
  std::vector<double> thetas = ctx.config().thetas();
  if (early_exit && thetas.size() > 2) {
    // The symmetry directions first: they decide most band frequencies.
    std::rotate(thetas.begin() + 1, thetas.end() - 1, thetas.end());
  }
  GapDecision d;
  const std::size_t batch = early_exit ? static_cast<std::size_t>(std::max(threads, 1))
                                       : thetas.size();
  for (std::size_t start = 0; start < thetas.size(); start += batch) {
    const std::size_t count = std::min(batch, thetas.size() - start);
    std::vector<PointResult> part(count);
    parallel_for(count, threads,
                 [&](std::size_t i) { part[i] = solve_point(ctx, omega, thetas[start + i]); });
    bool hit = false;
    for (auto& p : part) {
      hit = hit || p.real_hit;
      d.points.push_back(std::move(p));
    }
    if (early_exit && hit) break;
  }
  std::sort(d.points.begin(), d.points.end(),
            [](const PointResult& a, const PointResult& b) { return a.theta < b.theta; });
  d.classification = classify(d.points, d.gap_margin);
  return d;
}

struct Bisection {
  double outside;  // non-gap side
  double inside;   // gap side
  bool flagged = false;
  SolveTally tally;
};

Bisection bisect(const SweepContext& ctx, double outside, double inside, int threads) {
  Bisection b{outside, inside, false, {}};
  while (std::abs(b.inside - b.outside) > ctx.config().endpoint_tolerance) {
    const double mid = 0.5 * (b.inside + b.outside);
    const GapDecision d = decide(ctx, mid, true, threads);
    for (const auto& p : d.points) b.tally.add(p);
    if (d.classification == FrequencyClass::Gap) {
      b.inside = mid;
    } else {
      b.outside = mid;
      b.flagged = b.flagged || d.classification == FrequencyClass::Indeterminate;
    }
  }
  return b;
}

struct EndpointTask {
  std::size_t gap;
  bool lower;
  double outside;
  double inside;
};

void run_endpoint_tasks(const SweepContext& ctx, std::vector<GapInterval>& gaps,
                        const std::vector<EndpointTask>& tasks, SolveTally& tally) {
  std::vector<Bisection> results(tasks.size());
  const int threads = ctx.config().threads;
  // Parallel over endpoints; each bisection runs its directions serially
  // when there are enough endpoints to keep the workers busy.
  const int inner = tasks.size() >= static_cast<std::size_t>(threads) ? 1 : threads;
  parallel_for(tasks.size(), inner == 1 ? threads : 1, [&](std::size_t i) {
    results[i] = bisect(ctx, tasks[i].outside, tasks[i].inside, inner);
  });
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    GapInterval& g = gaps[tasks[i].gap];
    const Bisection& b = results[i];
    const double endpoint = 0.5 * (b.inside + b.outside);
    if (tasks[i].lower) {
      g.lo = endpoint;
      g.lo_outside = b.outside;
    } else {
      g.hi = endpoint;
      g.hi_outside = b.outside;
    }
    g.flagged = g.flagged || b.flagged;
    tally.merge(b.tally);
  }
}

}  // namespace

GapDecision is_gap_frequency(const SweepContext& ctx, double omega, bool early_exit) {
  return decide(ctx, omega, early_exit, ctx.config().threads);
}

GapReport sweep_band_structure(const SweepContext& ctx) {
  const SweepConfig& cfg = ctx.config();
  const std::vector<double> omegas = cfg.omegas();
  const std::vector<double> thetas = cfg.thetas();
  const std::size_t nt = thetas.size();

  GapReport report;
  report.provenance.h = ctx.mesh().h;
  report.provenance.n_per_side = ctx.mesh().n_per_side;
  report.provenance.n_dofs = ctx.mesh().n_dofs;

  report.points.resize(omegas.size() * nt);
  parallel_for(report.points.size(), cfg.threads, [&](std::size_t k) {
    report.points[k] = solve_point(ctx, omegas[k / nt], thetas[k % nt]);
  });
  SolveTally tally;
  for (const auto& p : report.points) tally.add(p);

  for (std::size_t i = 0; i < omegas.size(); ++i) {
    const std::vector<PointResult> row(report.points.begin() + static_cast<long>(i * nt),
                                       report.points.begin() + static_cast<long>((i + 1) * nt));
    FrequencyResult f;
    f.omega = omegas[i];
    f.classification = classify(row, f.gap_margin);
    report.frequencies.push_back(f);
  }

  // Maximal runs of non-band samples that contain at least one gap sample.
  std::vector<EndpointTask> tasks;
  const auto& fr = report.frequencies;
  for (std::size_t i = 0; i < fr.size();) {
    if (fr[i].classification == FrequencyClass::NonGap) {
      ++i;
      continue;
    }
    std::size_t j = i;
    bool any_gap = false;
    bool any_indeterminate = false;
    while (j < fr.size() && fr[j].classification != FrequencyClass::NonGap) {
      any_gap = any_gap || fr[j].classification == FrequencyClass::Gap;
      any_indeterminate = any_indeterminate || fr[j].classification == FrequencyClass::Indeterminate;
      ++j;
    }
    if (any_gap) {
      GapInterval g;
      g.lo = fr[i].omega;
      g.hi = fr[j - 1].omega;
      g.lo_outside = g.lo;
      g.hi_outside = g.hi;
      g.flagged = any_indeterminate;
      g.open_lo = i == 0;
      g.open_hi = j == fr.size();
      const std::size_t index = report.gaps.size();
      if (!g.open_lo) tasks.push_back({index, true, fr[i - 1].omega, fr[i].omega});
      if (!g.open_hi) tasks.push_back({index, false, fr[j].omega, fr[j - 1].omega});
      report.gaps.push_back(g);
    }
    i = j;
  }
  run_endpoint_tasks(ctx, report.gaps, tasks, tally);

  report.solves = tally.solves;
  report.indeterminate_points = tally.indeterminate_points;
  report.max_isotropy_defect = tally.max_isotropy_defect;
  report.max_mirror_residual = tally.max_mirror_residual;
  return report;
}

std::vector<GapInterval> refine_gaps(const SweepContext& ctx,
                                     const std::vector<GapInterval>& guesses, double search,
                                     SolveTally* tally) {
  std::vector<GapInterval> gaps = guesses;
  std::vector<EndpointTask> tasks;
  SolveTally local;
  const auto is_gap = [&](double omega) {
    const GapDecision d = decide(ctx, omega, true, ctx.config().threads);
    for (const auto& p : d.points) local.add(p);
    return d.classification == FrequencyClass::Gap;
  };
  for (std::size_t k = 0; k < gaps.size(); ++k) {
    GapInterval& g = gaps[k];
    const double mid = 0.5 * (g.lo + g.hi);
    // The gap side: step toward the middle of the guess until a gap sample.
    const auto bracket = [&](double guess, double dir) -> std::optional<EndpointTask> {
      double inside = guess - dir * search;
      if ((inside - mid) * dir > 0.0) inside = mid;
      while (!is_gap(inside)) {
        if (inside == mid) return std::nullopt;
        inside -= dir * search;
        if ((inside - mid) * dir > 0.0) inside = mid;
      }
      double outside = guess + dir * search;
      for (int widen = 0; is_gap(outside); ++widen) {
        if (widen > 20) return std::nullopt;
        outside += dir * search;
      }
      return EndpointTask{k, dir < 0.0, outside, inside};
    };
    if (!g.open_lo) {
      if (auto t = bracket(g.lo, -1.0)) tasks.push_back(*t); else g.flagged = true;
    }
    if (!g.open_hi) {
      if (auto t = bracket(g.hi, 1.0)) tasks.push_back(*t); else g.flagged = true;
    }
  }
  run_endpoint_tasks(ctx, gaps, tasks, local);
  if (tally) tally->merge(local);
  return gaps;
}

bool has_unresolved(const GapReport& report) {
  return std::ranges::any_of(report.frequencies,
                             [](const FrequencyResult& f) {
                               return f.classification == FrequencyClass::Indeterminate;
                             }) ||
         std::ranges::any_of(report.gaps, [](const GapInterval& g) { return g.flagged; });
}

void SolveTally::add(const PointResult& p) {
  ++solves;
  if (p.status == PointStatus::Indeterminate) ++indeterminate_points;
  max_isotropy_defect = std::max(max_isotropy_defect, p.stats.max_isotropy_defect);
  max_mirror_residual = std::max(max_mirror_residual, p.max_mirror_residual);
}

void SolveTally::merge(const SolveTally& other) {
  solves += other.solves;
  indeterminate_points += other.indeterminate_points;
  max_isotropy_defect = std::max(max_isotropy_defect, other.max_isotropy_defect);
  max_mirror_residual = std::max(max_mirror_residual, other.max_mirror_residual);
}

std::vector<Complex> analytic_homogeneous_spectrum(double omega, const Eigen::Vector2d& k_hat,
                                                   double eps, int m_range) {
  std::vector<Complex> out;
  for (int m1 = -m_range; m1 <= m_range; ++m1) {
    for (int m2 = -m_range; m2 <= m_range; ++m2) {
      const double mk = m1 * k_hat(0) + m2 * k_hat(1);
      const double disc = mk * mk - (m1 * m1 + m2 * m2) + omega * omega * eps;
      const Complex root = std::sqrt(Complex(disc, 0.0));
      out.push_back(-mk + root);
      out.push_back(-mk - root);
    }
  }
  return out;
}

}  // namespace gyrobloch
