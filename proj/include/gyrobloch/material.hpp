#pragma once

#include <string>
#include <variant>
#include <vector>

#include "gyrobloch/mesh.hpp"

namespace gyrobloch {

/// Frequency-independent permittivity.
struct ConstantLaw {
  double value = 1.0;
};

/// eps(omega) = a + b / (c - omega^2).
struct RationalLaw {
  double a = 1.0;
  double b = 0.0;
  double c = 1.0;
};

using FrequencyLaw = std::variant<ConstantLaw, RationalLaw>;

/// Value of a law at omega; no range or pole checks.
double eval_law(const FrequencyLaw& law, double omega);

struct FrequencyRange {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double omega) const { return omega >= lo && omega <= hi; }
};

enum class Region { Background, Inclusion };

/// Background medium with one disk-shaped inclusion per lattice cell.
struct MaterialModel {
  FrequencyLaw background = ConstantLaw{1.0};
  FrequencyLaw inclusion = ConstantLaw{1.0};
  Point2 inclusion_center = Point2::Zero();
  double inclusion_radius = 0.0;
  FrequencyRange valid_range{0.0, 1.0};
  /// Permittivity bounds over space and valid_range, filled by make_model.
  double min_permittivity = 0.0;
  double max_permittivity = 0.0;

  /// Region of a point after periodic reduction; the disk is open.
  Region region(const Point2& x) const;
};

/// Validated construction: throws ConfigError listing every violation.
MaterialModel make_model(const FrequencyLaw& background, const FrequencyLaw& inclusion,
                         const Point2& center, double radius, FrequencyRange valid_range);

/// Human-readable invariant violations; empty when the model is usable.
std::vector<std::string> validate_model(const MaterialModel& model);

/// eps(x, omega). Throws RangeError when omega is outside the valid range.
double eval_permittivity(const MaterialModel& model, const Point2& x, double omega);

/// Region law value at omega (range-checked like eval_permittivity).
double region_permittivity(const MaterialModel& model, Region region, double omega);

/// Rods of eps = 8.9 in air, diameter 0.75 of the lattice constant.
MaterialModel dobson_model(FrequencyRange range = {0.0, 0.7});

/// Same geometry with the rod law eps(omega) = 1 + 5.34 / (1 - omega^2).
MaterialModel rational_model(FrequencyRange range = {0.0, 0.7});

/// eps = value everywhere.
MaterialModel homogeneous_model(double value, FrequencyRange range = {0.0, 0.7});

}  // namespace gyrobloch
