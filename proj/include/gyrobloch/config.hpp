#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "gyrobloch/assembly.hpp"
#include "gyrobloch/material.hpp"
#include "gyrobloch/sweep.hpp"

namespace gyrobloch {

struct MaterialSection {
  std::string id = "custom";
  FrequencyLaw background = ConstantLaw{1.0};
  FrequencyLaw inclusion = ConstantLaw{1.0};
  double radius = 0.75 * kPi;
  Point2 center = Point2::Zero();
  FrequencyRange valid_range{0.0, 0.7};
};

struct OutputSection {
  std::string directory = "out";
  /// Subset of eigs, gaps, tube, surfaces, diagnostics (canonical order).
  std::vector<std::string> formats{"eigs", "gaps", "tube", "surfaces"};

  bool wants(std::string_view format) const;
};

/// Everything a run needs. `sweep.threads` is a runtime setting and is not
/// part of the file format (and therefore not of the hash).
struct RunConfig {
  int n_per_side = 20;
  int interface_levels = 2;
  MaterialSection material;
  SweepConfig sweep;
  OutputSection output;

  /// Throws ConfigError listing every violation.
  void validate() const;
  MaterialModel model() const;
  AssemblyOptions assembly() const { return {interface_levels}; }
};

/// Sectioned key = value text. '#' starts a comment; blank lines are ignored.
/// Unknown sections or keys, duplicates and malformed values are errors.
/// The result is validated.
RunConfig parse_config(std::string_view text);

/// parse_config on a file; IoError when it cannot be read.
RunConfig load_config(const std::filesystem::path& path);

/// Canonical form: every key in a fixed order, numbers in shortest
/// round-trip notation. parse_config(serialize_config(c)) reproduces c.
std::string serialize_config(const RunConfig& config);

/// 64-bit FNV-1a of the canonical form, as 16 hex digits.
std::string config_hash(const RunConfig& config);

/// "constant v" or "rational a b c".
std::string format_law(const FrequencyLaw& law);
FrequencyLaw parse_law(std::string_view text);

}  // namespace gyrobloch
