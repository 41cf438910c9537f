#include "gyrobloch/output.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <tuple>

#include <unistd.h>

#include "gyrobloch/error.hpp"
#include "json.hpp"

namespace gyrobloch {
namespace {

using nlohmann::ordered_json;

// JSON numbers carry the same 9 significant digits as the CSV files;
// non-finite margins become null.
ordered_json number(double v) {
  if (!std::isfinite(v)) return nullptr;
  return std::stod(format_number(v));
}

std::string row(std::initializer_list<std::string> cells) {
  std::string out;
  for (const auto& c : cells) out += (out.empty() ? "" : ",") + c;
  return out + "\n";
}

}  // namespace

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  if (value == 0.0) return "0";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", value);
  return buf;
}

void write_atomic(const std::filesystem::path& path, const std::string& content) {
  auto tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out << content;
    out.flush();
    if (!out) {
      std::error_code ignored;
      std::filesystem::remove(tmp, ignored);
      throw IoError("error writing " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::error_code ignored;
    std::filesystem::remove(tmp, ignored);
    throw IoError("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
  }
}

std::string eigs_csv(const GapReport& report) {
  std::vector<const PointResult*> points;
  for (const auto& p : report.points) points.push_back(&p);
  std::ranges::stable_sort(points, [](const auto* a, const auto* b) {
    return std::tie(a->omega, a->theta) < std::tie(b->omega, b->theta);
  });
  std::string out = row({"omega", "theta", "re_lambda", "im_lambda", "residual", "mirrored_flag"});
  for (const auto* p : points) {
    auto entries = p->filtered;
    sort_entries(entries);
    for (const auto& e : entries) {
      out += row({format_number(p->omega), format_number(p->theta), format_number(e.lambda.real()),
                  format_number(e.lambda.imag()), format_number(e.residual),
                  e.mirrored ? "1" : "0"});
    }
  }
  return out;
}

std::string tube_csv(const GapReport& report) {
  std::vector<const PointResult*> points;
  for (const auto& p : report.points) points.push_back(&p);
  std::ranges::stable_sort(points, [](const auto* a, const auto* b) {
    return std::tie(a->omega, a->theta) < std::tie(b->omega, b->theta);
  });
  std::string out = row({"omega", "theta", "gap_margin"});
  for (const auto* p : points)
    out += row({format_number(p->omega), format_number(p->theta), format_number(p->min_abs_im)});
  return out;
}

std::string surfaces_csv(const GapReport& report, double gap_threshold) {
  std::vector<std::tuple<double, double, double>> rows;
  for (const auto& p : report.points) {
    for (const auto& e : p.filtered) {
      if (std::abs(e.lambda.imag()) <= gap_threshold)
        rows.emplace_back(p.theta, e.lambda.real(), p.omega);
    }
  }
  std::ranges::sort(rows);
  std::string out = row({"theta", "lambda", "omega"});
  for (const auto& [theta, lambda, omega] : rows)
    out += row({format_number(theta), format_number(lambda), format_number(omega)});
  return out;
}

std::string gaps_json(const GapReport& report, const RunConfig& config) {
  const std::string hash = config_hash(config);
  ordered_json doc;
  doc["schema"] = "gyrobloch.gaps/1";
  doc["config_hash"] = hash;

  const auto& prov = report.provenance;
  doc["provenance"] = {
      {"model_id", config.material.id},
      {"config_hash", hash},
      {"h", number(prov.h)},
      {"h_over_2pi", number(prov.h / (2.0 * kPi))},
      {"n_per_side", prov.n_per_side},
      {"n_dofs", prov.n_dofs},
      {"algorithm", to_string(config.sweep.algorithm)},
      {"bz_constant", number(config.sweep.bz_constant)},
      {"gap_threshold", number(config.sweep.gap_threshold)},
  };

  ordered_json gaps = ordered_json::array();
  for (const auto& g : report.gaps) {
    double margin = std::numeric_limits<double>::infinity();
    for (const auto& f : report.frequencies) {
      if (f.omega >= g.lo && f.omega <= g.hi && f.classification == FrequencyClass::Gap)
        margin = std::min(margin, f.gap_margin);
    }
    gaps.push_back({
        {"omega_lo", number(g.lo)},
        {"omega_hi", number(g.hi)},
        {"omega_lo_outside", number(g.lo_outside)},
        {"omega_hi_outside", number(g.hi_outside)},
        {"width", number(g.hi - g.lo)},
        {"min_margin", number(margin)},
        {"open_lo", g.open_lo},
        {"open_hi", g.open_hi},
        {"flagged", g.flagged},
    });
  }
  doc["gaps"] = std::move(gaps);

  ordered_json freqs = ordered_json::array();
  for (const auto& f : report.frequencies) {
    freqs.push_back({{"omega", number(f.omega)},
                     {"gap_margin", number(f.gap_margin)},
                     {"classification", to_string(f.classification)}});
  }
  doc["frequencies"] = std::move(freqs);

  doc["summary"] = {
      {"gap_count", report.gaps.size()},
      {"indeterminate_points", report.indeterminate_points},
      {"solves", report.solves},
      {"max_isotropy_defect", number(report.max_isotropy_defect)},
      {"max_mirror_residual", number(report.max_mirror_residual)},
  };
  return doc.dump(2) + "\n";
}

std::string diagnostics_jsonl(const GapReport& report) {
  std::string out;
  for (const auto& p : report.points) {
    ordered_json rec = {
        {"omega", number(p.omega)},
        {"theta", number(p.theta)},
        {"status", p.status == PointStatus::Ok ? "ok" : "indeterminate"},
        {"algorithm", to_string(p.stats.algorithm)},
        {"converged", p.stats.converged},
        {"restarts", p.stats.restarts},
        {"applications", p.stats.applications},
        {"shift_retries", p.stats.shift_retries},
        {"fell_back", p.stats.fell_back},
        {"n_eigs", p.n_eigs_used},
        {"covered_strip", number(p.covered_strip)},
        {"max_isotropy_defect", number(p.stats.max_isotropy_defect)},
        {"max_mirror_residual", number(p.max_mirror_residual)},
    };
    ordered_json history = ordered_json::array();
    for (double r : p.stats.residual_history) history.push_back(number(r));
    rec["residual_history"] = std::move(history);
    out += rec.dump() + "\n";
  }
  return out;
}

std::vector<std::filesystem::path> write_artifacts(const GapReport& report,
                                                   const RunConfig& config,
                                                   const std::filesystem::path& directory) {
  std::vector<std::pair<std::string, std::string>> files;
  const auto& out = config.output;
  if (out.wants("eigs")) files.emplace_back("eigs.csv", eigs_csv(report));
  if (out.wants("gaps")) files.emplace_back("gaps.json", gaps_json(report, config));
  if (out.wants("tube")) files.emplace_back("tube.csv", tube_csv(report));
  if (out.wants("surfaces"))
    files.emplace_back("surfaces.csv", surfaces_csv(report, config.sweep.gap_threshold));
  if (out.wants("diagnostics")) files.emplace_back("diagnostics.jsonl", diagnostics_jsonl(report));

  std::error_code ec;
  std::filesystem::create_directories(directory, ec);
  if (ec) throw IoError("cannot create " + directory.string() + ": " + ec.message());
  std::vector<std::filesystem::path> written;
  for (const auto& [name, content] : files) {
    write_atomic(directory / name, content);
    written.push_back(directory / name);
  }
  return written;
}

}  // namespace gyrobloch
