#include <doctest.h>

#include <algorithm>

#include "gyrobloch/error.hpp"
#include "gyrobloch/sweep.hpp"
#include "oracles.hpp"

using namespace gyrobloch;

namespace {

Spectrum spectrum_of(std::initializer_list<Complex> lambdas) {
  Spectrum s;
  for (const Complex l : lambdas) {
    EigenEntry e;
    e.lambda = l;
    e.mu = Complex(0.0, 1.0) * l;
    s.entries.push_back(e);
  }
  return s;
}

SweepConfig quick_config() {
  SweepConfig cfg;
  cfg.n_eigs = 8;
  cfg.theta_count = 5;
  return cfg;
}

bool is_gaussian_integer(Complex z, double tol) {
  return std::abs(z.real() - std::round(z.real())) <= tol &&
         std::abs(z.imag() - std::round(z.imag())) <= tol;
}

}  // namespace

TEST_CASE("Brillouin-zone filter") {
  const Spectrum s = spectrum_of({0.9, 1.1, 0.6, Complex(0.0, 0.95), Complex(1.3, 0.3)});
  auto kept = filter_bz(s, 0.0, 1.0);
  CHECK(kept.size() == 3);
  CHECK(std::none_of(kept.begin(), kept.end(),
                     [](const EigenEntry& e) { return e.lambda == Complex(1.1); }));

  kept = filter_bz(s, kPi / 4, 1.0);  // radius sqrt 2
  CHECK(kept.size() == 5);
  CHECK(filter_bz(spectrum_of({std::sqrt(2.0) * 0.999999}), kPi / 4, 1.0).size() == 1);
  CHECK(filter_bz(spectrum_of({std::sqrt(2.0) * 1.000001}), kPi / 4, 1.0).empty());

  kept = filter_bz(s, 0.0, 0.5);
  CHECK(kept.empty());
}

TEST_CASE("analytic homogeneous spectrum") {
  const auto at_zero = analytic_homogeneous_spectrum(0.0, direction(0.0), 1.0, 3);
  CHECK(at_zero.size() == 2 * 49);
  for (const Complex z : at_zero) CHECK(is_gaussian_integer(z, 1e-14));

  const auto half = analytic_homogeneous_spectrum(0.5, direction(0.0), 1.0, 0);
  REQUIRE(half.size() == 2);
  CHECK(oracle::distance_to_set(0.5, half) < 1e-15);
  CHECK(oracle::distance_to_set(-0.5, half) < 1e-15);

  const auto m1 = analytic_homogeneous_spectrum(0.5, direction(0.0), 1.0, 1);
  CHECK(oracle::distance_to_set(-0.5, m1) < 1e-15);
  CHECK(oracle::distance_to_set(-1.5, m1) < 1e-15);

  // Matches the independent test oracle.
  for (const Complex z : analytic_homogeneous_spectrum(0.37, direction(0.3), 2.0, 3)) {
    CHECK(oracle::distance_to_set(z, oracle::plane_wave_lambdas(0.37, 0.3, 2.0, 3)) < 1e-13);
  }

  // Translation lambda -> lambda + 1 for k_hat = e1, away from the m range edge.
  const int range = 6;
  const auto full = analytic_homogeneous_spectrum(0.43, direction(0.0), 1.7, range);
  for (const Complex z : full) {
    if (std::abs(z.real()) < range - 2.5 && std::abs(z.imag()) < range - 2) {
      CHECK(oracle::distance_to_set(z + 1.0, full) < 1e-12);
    }
  }
}

TEST_CASE("sweep configuration validation") {
  SweepConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.omega_lo = 0.5;
  cfg.omega_hi = 0.4;
  cfg.omega_step = 0.0;
  cfg.theta_count = 0;
  cfg.gap_threshold = 1e-10;
  try {
    cfg.validate();
    FAIL("expected a configuration error");
  } catch (const ConfigError& e) {
    const std::string what = e.what();
    CHECK(what.find("omega_lo < omega_hi") != std::string::npos);
    CHECK(what.find("omega_step") != std::string::npos);
    CHECK(what.find("theta_count") != std::string::npos);
    CHECK(what.find("gap_threshold") != std::string::npos);
  }

  SweepConfig grid;
  grid.omega_lo = 0.0;
  grid.omega_hi = 0.7;
  grid.omega_step = 0.01;
  const auto omegas = grid.omegas();
  CHECK(omegas.size() == 71);
  CHECK(omegas.back() == 0.7);
  grid.omega_step = 0.3;
  CHECK(grid.omegas() == std::vector<double>{0.0, 0.3, 0.6, 0.7});
  grid.theta_count = 17;
  CHECK(grid.thetas().size() == 17);
  CHECK(grid.thetas()[1] == doctest::Approx(kPi / 64));
  CHECK(grid.thetas().back() == doctest::Approx(kPi / 4));
  grid.theta_count = 1;
  CHECK(grid.thetas() == std::vector<double>{0.0});

  const PeriodicMesh mesh = build_structured_mesh(4);
  const MaterialModel model = dobson_model();
  SweepConfig wide;
  wide.omega_hi = 0.9;
  CHECK_THROWS_AS(SweepContext(mesh, model, wide), ConfigError);
}

TEST_CASE("coverage bound is a true lower bound") {
  const PeriodicMesh mesh = build_structured_mesh(5);
  const MaterialModel model = dobson_model();
  const PencilMatrices p = assemble_pencil(mesh, model, 0.3, direction(0.2));
  const Spectrum dense = dense_eigs(p);
  const Complex mu0(0.05, 0.7);
  const double radius = 1.0 / std::cos(0.2);
  for (Algorithm a : {Algorithm::Shira, Algorithm::Ira}) {
    const double bound = coverage_bound(a, mu0, radius, 0.05);
    CHECK(bound > 0.0);
    for (const auto& e : dense.entries) {
      if (std::abs(e.lambda.real()) <= radius && std::abs(e.lambda.imag()) <= 0.05) {
        double best = 0.0;
        for (const Complex img : {e.mu, std::conj(e.mu), -e.mu, -std::conj(e.mu)}) {
          best = std::max(best, std::abs(spectral_transform(a, mu0, img)));
        }
        CHECK(best >= bound * (1.0 - 1e-3));
      }
    }
  }
  CHECK(coverage_bound(Algorithm::Dense, mu0, radius, 0.05) == INFINITY);
}

TEST_CASE("point solve agrees with the dense oracle inside the window") {
  const PeriodicMesh mesh = build_structured_mesh(8);
  const MaterialModel model = rational_model();
  const SweepContext ctx(mesh, model, quick_config());
  for (double theta : {0.0, 0.5}) {
    for (double omega : {0.15, 0.29, 0.5}) {
      CAPTURE(theta);
      CAPTURE(omega);
      const PointResult r = solve_point(ctx, omega, theta);
      REQUIRE(r.status == PointStatus::Ok);
      const Spectrum dense = dense_eigs(ctx.pencil(omega, theta));
      const auto window = filter_bz(dense, theta, 1.0);
      // Every dense in-window eigenvalue in the covered strip is reported.
      std::vector<Complex> found;
      for (const auto& e : r.filtered) found.push_back(e.lambda);
      for (const auto& e : window) {
        if (std::abs(e.lambda.imag()) <= r.covered_strip) {
          CHECK(oracle::distance_to_set(e.lambda, found) < 1e-8);
        }
      }
      double dense_min = INFINITY;
      for (const auto& e : window) dense_min = std::min(dense_min, std::abs(e.lambda.imag()));
      if (dense_min <= r.covered_strip) CHECK(r.min_abs_im == doctest::Approx(dense_min).scale(1e-8));
      // Symmetric report: lambda and -conj(lambda).
      for (const Complex z : found) {
        CHECK(oracle::distance_to_set(-std::conj(z), found) <= 1e-8 * std::max(1.0, std::abs(z)));
      }
      // Gap test in mu form: all in-window mu have a nonzero real part.
      bool all_mu_off_axis = true;
      for (const auto& e : r.filtered) {
        all_mu_off_axis = all_mu_off_axis && std::abs(e.mu.real()) > ctx.config().gap_threshold;
      }
      CHECK(all_mu_off_axis == !r.real_hit);
      CHECK(r.max_mirror_residual <= 10 * ctx.config().tol);
      CHECK(r.stats.max_isotropy_defect <= 1e-10);
    }
  }
}

TEST_CASE("gap decisions") {
  const PeriodicMesh mesh = build_structured_mesh(10);
  const MaterialModel model = dobson_model();
  SweepConfig cfg = quick_config();
  const SweepContext ctx(mesh, model, cfg);

  const GapDecision in_gap = is_gap_frequency(ctx, 0.26);
  CHECK(in_gap.classification == FrequencyClass::Gap);
  CHECK(in_gap.gap_margin > cfg.gap_threshold);
  CHECK(in_gap.points.size() == 5);

  const GapDecision band = is_gap_frequency(ctx, 0.20);
  CHECK(band.classification == FrequencyClass::NonGap);
  CHECK(band.gap_margin <= cfg.gap_threshold);

  const GapDecision zero = is_gap_frequency(ctx, 0.0, true);
  CHECK(zero.classification == FrequencyClass::NonGap);
  CHECK(zero.points.size() == 1);  // early exit after the first direction
  bool saw_zero = false;
  for (const auto& e : zero.points[0].filtered) saw_zero = saw_zero || std::abs(e.lambda) < 1e-6;
  CHECK(saw_zero);

  const PeriodicMesh small = build_structured_mesh(6);
  const MaterialModel air = homogeneous_model(1.0);
  const SweepContext hctx(small, air, cfg);
  for (double omega : {0.05, 0.3, 0.6}) {
    CHECK(is_gap_frequency(hctx, omega).classification == FrequencyClass::NonGap);
  }
}

TEST_CASE("sweep over a narrow range is deterministic and thread-independent") {
  const PeriodicMesh mesh = build_structured_mesh(8);
  const MaterialModel model = dobson_model();
  SweepConfig cfg = quick_config();
  cfg.omega_lo = 0.22;
  cfg.omega_hi = 0.30;
  cfg.omega_step = 0.02;
  cfg.theta_count = 3;
  cfg.endpoint_tolerance = 1e-3;
  const SweepContext serial(mesh, model, cfg);
  cfg.threads = 3;
  const SweepContext threaded(mesh, model, cfg);

  const GapReport a = sweep_band_structure(serial);
  const GapReport b = sweep_band_structure(threaded);
  REQUIRE(a.gaps.size() == 1);
  REQUIRE(b.gaps.size() == 1);
  CHECK(a.gaps[0].lo == b.gaps[0].lo);
  CHECK(a.gaps[0].hi == b.gaps[0].hi);
  CHECK(a.gaps[0].lo > 0.22);
  CHECK(a.gaps[0].hi < 0.30);
  CHECK(a.gaps[0].hi - a.gaps[0].lo > 0.01);
  CHECK(std::abs(a.gaps[0].lo - a.gaps[0].lo_outside) <= cfg.endpoint_tolerance);
  CHECK_FALSE(a.gaps[0].flagged);
  REQUIRE(a.points.size() == b.points.size());
  for (std::size_t i = 0; i < a.points.size(); ++i) {
    REQUIRE(a.points[i].filtered.size() == b.points[i].filtered.size());
    for (std::size_t j = 0; j < a.points[i].filtered.size(); ++j) {
      CHECK(a.points[i].filtered[j].lambda == b.points[i].filtered[j].lambda);
    }
  }
  // Invariant: interior samples have a margin above the threshold, and the
  // sample just outside the refined endpoints does not.
  for (const auto& f : a.frequencies) {
    if (f.omega > a.gaps[0].lo && f.omega < a.gaps[0].hi) {
      CHECK(f.gap_margin > cfg.gap_threshold);
    }
  }
  CHECK(is_gap_frequency(serial, a.gaps[0].lo_outside).gap_margin <= cfg.gap_threshold);
  CHECK(is_gap_frequency(serial, a.gaps[0].hi_outside).gap_margin <= cfg.gap_threshold);

  // Refinement from a rough guess reproduces the sweep's endpoints.
  GapInterval guess;
  guess.lo = a.gaps[0].lo + 0.004;
  guess.hi = a.gaps[0].hi - 0.003;
  const auto refined = refine_gaps(serial, {guess}, 0.005);
  REQUIRE(refined.size() == 1);
  CHECK(std::abs(refined[0].lo - a.gaps[0].lo) <= 2 * cfg.endpoint_tolerance);
  CHECK(std::abs(refined[0].hi - a.gaps[0].hi) <= 2 * cfg.endpoint_tolerance);
}

TEST_CASE("homogeneous medium has no gaps") {
  const PeriodicMesh mesh = build_structured_mesh(6);
  const MaterialModel air = homogeneous_model(1.0);
  SweepConfig cfg = quick_config();
  cfg.omega_lo = 0.05;
  cfg.omega_step = 0.05;
  cfg.theta_count = 3;
  const GapReport r = sweep_band_structure(SweepContext(mesh, air, cfg));
  CHECK(r.gaps.empty());
  CHECK(r.indeterminate_points == 0);
  for (const auto& f : r.frequencies) CHECK(f.classification == FrequencyClass::NonGap);
}
