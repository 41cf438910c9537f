#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "gyrobloch/config.hpp"
#include "gyrobloch/error.hpp"
#include "gyrobloch/output.hpp"
#include "gyrobloch/sweep.hpp"

using namespace gyrobloch;

namespace {

enum Exit : int { kOk = 0, kUsage = 1, kConfig = 2, kIndeterminate = 3, kIo = 4, kFailure = 5 };

struct Overrides {
  std::string out;
  int threads = 1;
  std::string algorithm;
  std::optional<double> bz_constant;
};

void add_overrides(CLI::App* cmd, Overrides& o, bool with_out) {
  if (with_out) cmd->add_option("--out", o.out, "Output directory (overrides [output] directory)");
  cmd->add_option("--threads", o.threads, "Worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--algorithm", o.algorithm, "Eigensolver")
      ->check(CLI::IsMember({"shira", "ira", "dense"}));
  cmd->add_option("--bz-constant", o.bz_constant, "Filter constant c in |lambda| <= c / cos(theta)")
      ->check(CLI::IsMember({1.0, 0.5}));
}

RunConfig effective_config(const std::string& path, const Overrides& o) {
  RunConfig cfg = load_config(path);
  if (!o.out.empty()) cfg.output.directory = o.out;
  if (!o.algorithm.empty()) cfg.sweep.algorithm = parse_algorithm(o.algorithm);
  if (o.bz_constant) cfg.sweep.bz_constant = *o.bz_constant;
  cfg.sweep.threads = o.threads;
  cfg.validate();
  return cfg;
}

int run_sweep(const std::string& config_path, const Overrides& o) {
  const RunConfig cfg = effective_config(config_path, o);
  const MaterialModel model = cfg.model();
  const PeriodicMesh mesh = build_structured_mesh(cfg.n_per_side);
  const SweepContext ctx(mesh, model, cfg.sweep, cfg.assembly());

  const auto start = std::chrono::steady_clock::now();
  std::cerr << "sweep: model " << cfg.material.id << ", n_per_side " << cfg.n_per_side << " ("
            << mesh.n_dofs << " dofs), " << cfg.sweep.omegas().size() << " frequencies x "
            << cfg.sweep.theta_count << " directions, " << to_string(cfg.sweep.algorithm) << ", "
            << cfg.sweep.threads << " thread(s)\n";
  GapReport report = sweep_band_structure(ctx);
  report.provenance.model_id = cfg.material.id;
  report.provenance.config_hash = config_hash(cfg);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  const auto written = write_artifacts(report, cfg, cfg.output.directory);

  std::cout << "config_hash " << report.provenance.config_hash << "\n";
  std::cout << "gaps " << report.gaps.size() << "\n";
  for (const auto& g : report.gaps) {
    std::cout << "  [" << format_number(g.lo) << ", " << format_number(g.hi) << "]"
              << (g.open_lo ? " open-low" : "") << (g.open_hi ? " open-high" : "")
              << (g.flagged ? " flagged" : "") << "\n";
  }
  std::cout << "indeterminate_points " << report.indeterminate_points << "\n";
  std::cout << "solves " << report.solves << "\n";
  for (const auto& p : written) std::cout << "wrote " << p.string() << "\n";
  std::cerr << "sweep: done in " << format_number(seconds) << " s\n";
  return has_unresolved(report) ? kIndeterminate : kOk;
}

int run_point(const std::string& config_path, const Overrides& o, double omega, double theta) {
  const RunConfig cfg = effective_config(config_path, o);
  const MaterialModel model = cfg.model();
  const PeriodicMesh mesh = build_structured_mesh(cfg.n_per_side);
  const SweepContext ctx(mesh, model, cfg.sweep, cfg.assembly());
  const PointResult p = solve_point(ctx, omega, theta);

  std::cout << "# omega " << format_number(omega) << " theta " << format_number(theta)
            << " window " << format_number(ctx.window(theta)) << " n_dofs " << mesh.n_dofs
            << " algorithm " << to_string(p.stats.algorithm)
            << " status " << (p.status == PointStatus::Ok ? "ok" : "indeterminate") << "\n";
  std::cout << "# min_abs_im " << format_number(p.min_abs_im) << " real_hit "
            << (p.real_hit ? 1 : 0) << " covered_strip " << format_number(p.covered_strip)
            << " restarts " << p.stats.restarts << " shift_retries " << p.stats.shift_retries
            << " fell_back " << (p.stats.fell_back ? 1 : 0) << "\n";
  std::cout << "re_lambda,im_lambda,abs_lambda,residual,mirrored_flag\n";
  for (const auto& e : p.filtered) {
    std::cout << format_number(e.lambda.real()) << "," << format_number(e.lambda.imag()) << ","
              << format_number(std::abs(e.lambda)) << "," << format_number(e.residual) << ","
              << (e.mirrored ? 1 : 0) << "\n";
  }
  return p.status == PointStatus::Ok ? kOk : kIndeterminate;
}

int run_oracle(double omega, double theta, double eps, int m_range, std::optional<double> radius) {
  if (!(eps > 0.0)) throw RangeError("eps must be positive");
  if (m_range < 0) throw RangeError("m-range must be non-negative");
  auto values = analytic_homogeneous_spectrum(omega, direction(theta), eps, m_range);
  std::ranges::sort(values, [](Complex a, Complex b) {
    return std::pair(a.real(), a.imag()) < std::pair(b.real(), b.imag());
  });
  std::cout << "re_lambda,im_lambda\n";
  for (const auto& v : values) {
    if (radius && std::abs(v) > *radius) continue;
    std::cout << format_number(v.real()) << "," << format_number(v.imag()) << "\n";
  }
  return kOk;
}

int run_mesh_info(std::optional<int> n, const std::string& config_path, const std::string& dump) {
  std::optional<RunConfig> cfg;
  if (!config_path.empty()) cfg = load_config(config_path);
  const int n_per_side = n ? *n : cfg ? cfg->n_per_side : 20;
  if (n_per_side < 2) throw RangeError("n must be at least 2");
  const PeriodicMesh mesh = build_structured_mesh(n_per_side);
  std::cout << "n_per_side " << mesh.n_per_side << "\n"
            << "h " << format_number(mesh.h) << "\n"
            << "h_over_2pi " << format_number(mesh.h / (2.0 * kPi)) << "\n"
            << "element_order " << PeriodicMesh::element_order << "\n"
            << "cells " << mesh.cells.size() << "\n"
            << "nodes " << mesh.nodes.size() << "\n"
            << "n_dofs " << mesh.n_dofs << "\n";
  if (cfg) {
    const MaterialModel model = cfg->model();
    const PencilBasis basis = build_pencil_basis(mesh, model, cfg->assembly());
    std::cout << "model_id " << cfg->material.id << "\n"
              << "cut_elements " << basis.cut_elements << "\n"
              << "min_permittivity " << format_number(model.min_permittivity) << "\n"
              << "max_permittivity " << format_number(model.max_permittivity) << "\n";
  }
  if (!dump.empty()) {
    std::ostringstream os;
    write_mesh(os, mesh);
    write_atomic(dump, os.str());
    std::cout << "wrote " << dump << "\n";
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Band gaps of 2D periodic dispersive media"};
  app.require_subcommand(1);

  std::string config_path;
  Overrides overrides;

  auto* sweep = app.add_subcommand("sweep", "Scan frequencies and directions; write artifacts");
  sweep->add_option("--config", config_path, "Run configuration")->required();
  add_overrides(sweep, overrides, true);

  double omega = 0.0;
  double theta = 0.0;
  auto* point = app.add_subcommand("point", "Print the filtered spectrum at one (omega, theta)");
  point->add_option("--config", config_path, "Run configuration")->required();
  point->add_option("--omega", omega, "Frequency")->required();
  point->add_option("--theta", theta, "Direction angle in [0, pi/4]")
      ->check(CLI::Validator(
          [](std::string& s) -> std::string {
            const double t = std::stod(s);
            if (t < 0.0 || t > 0.25 * kPi + 1e-12) return "theta must lie in [0, pi/4]";
            return {};
          },
          "[0, pi/4]"));
  add_overrides(point, overrides, false);

  double eps = 1.0;
  int m_range = 2;
  std::optional<double> radius;
  auto* oracle = app.add_subcommand("oracle", "Print the analytic spectrum of a homogeneous medium");
  oracle->add_option("--omega", omega, "Frequency")->required();
  oracle->add_option("--theta", theta, "Direction angle");
  oracle->add_option("--eps", eps, "Permittivity")->required();
  oracle->add_option("--m-range", m_range, "Reciprocal lattice range |m1|, |m2| <= M");
  oracle->add_option("--radius", radius, "Only print |lambda| <= radius");

  std::optional<int> n;
  std::string dump;
  auto* mesh_info = app.add_subcommand("mesh-info", "Describe the mesh (and material) of a run");
  mesh_info->add_option("--n", n, "Squares per side (overrides the config)");
  mesh_info->add_option("--config", config_path, "Run configuration");
  mesh_info->add_option("--dump", dump, "Write the mesh as plain text");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*sweep) return run_sweep(config_path, overrides);
    if (*point) return run_point(config_path, overrides, omega, theta);
    if (*oracle) return run_oracle(omega, theta, eps, m_range, radius);
    if (*mesh_info) return run_mesh_info(n, config_path, dump);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kIo;
  } catch (const RangeError& e) {
    std::cerr << "argument error: " << e.what() << "\n";
    return kUsage;
  } catch (const SolverError& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return kIndeterminate;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kUsage;
}
