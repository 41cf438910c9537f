#include "gyrobloch/material.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "gyrobloch/error.hpp"

namespace gyrobloch {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

std::string describe(const FrequencyLaw& law) {
  std::ostringstream os;
  std::visit(Overloaded{[&](const ConstantLaw& l) { os << "constant(" << l.value << ")"; },
                        [&](const RationalLaw& l) {
                          os << "rational(" << l.a << ", " << l.b << ", " << l.c << ")";
                        }},
             law);
  return os.str();
}

/// Smallest and largest omega^2 over the range.
std::pair<double, double> squared_span(FrequencyRange r) {
  const double a = r.lo * r.lo;
  const double b = r.hi * r.hi;
  if (r.lo <= 0.0 && r.hi >= 0.0) return {0.0, std::max(a, b)};
  return {std::min(a, b), std::max(a, b)};
}

bool has_pole(const FrequencyLaw& law, FrequencyRange r) {
  const auto* rational = std::get_if<RationalLaw>(&law);
  if (rational == nullptr || rational->b == 0.0) return false;
  const auto [lo2, hi2] = squared_span(r);
  return rational->c >= lo2 && rational->c <= hi2;
}

/// Extremes of a pole-free law over the range: 1e-3 scan plus endpoints.
std::pair<double, double> law_bounds(const FrequencyLaw& law, FrequencyRange r) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  const auto visit = [&](double omega) {
    const double v = eval_law(law, omega);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  };
  visit(r.lo);
  visit(r.hi);
  if (r.lo < 0.0 && r.hi > 0.0) visit(0.0);
  const int steps = static_cast<int>(std::ceil((r.hi - r.lo) / 1e-3));
  for (int i = 1; i < steps; ++i) visit(r.lo + (r.hi - r.lo) * i / steps);
  return {lo, hi};
}

void check_law(const char* name, const FrequencyLaw& law, FrequencyRange r,
               std::vector<std::string>& out) {
  if (has_pole(law, r)) {
    const auto& q = std::get<RationalLaw>(law);
    std::ostringstream os;
    os << name << " law " << describe(law) << " has a pole at omega = " << std::sqrt(q.c)
       << " inside [" << r.lo << ", " << r.hi << "]";
    out.push_back(os.str());
    return;
  }
  const auto [lo, hi] = law_bounds(law, r);
  if (!(lo > 0.0)) {
    std::ostringstream os;
    os << name << " law " << describe(law) << " is not positive on [" << r.lo << ", " << r.hi
       << "] (minimum " << lo << ")";
    out.push_back(os.str());
  }
  if (!std::isfinite(hi)) {
    out.push_back(std::string(name) + " law " + describe(law) + " is not finite");
  }
}

}  // namespace

double eval_law(const FrequencyLaw& law, double omega) {
  return std::visit(Overloaded{[](const ConstantLaw& l) { return l.value; },
                               [omega](const RationalLaw& l) {
                                 return l.a + l.b / (l.c - omega * omega);
                               }},
                    law);
}

Region MaterialModel::region(const Point2& x) const {
  const Point2 r = reduce_to_cell(x);
  return (r - inclusion_center).norm() < inclusion_radius ? Region::Inclusion
                                                          : Region::Background;
}

std::vector<std::string> validate_model(const MaterialModel& model) {
  std::vector<std::string> out;
  const FrequencyRange r = model.valid_range;
  if (!(r.lo < r.hi)) {
    std::ostringstream os;
    os << "empty frequency range [" << r.lo << ", " << r.hi << "]";
    out.push_back(os.str());
  }
  if (!(model.inclusion_radius > 0.0)) {
    out.push_back("inclusion radius must be positive");
  }
  const Point2& c = model.inclusion_center;
  if (std::abs(c(0)) + model.inclusion_radius > kPi ||
      std::abs(c(1)) + model.inclusion_radius > kPi) {
    out.push_back("inclusion disk does not fit inside the cell (-pi, pi]^2");
  }
  if (r.lo < r.hi) {
    check_law("background", model.background, r, out);
    check_law("inclusion", model.inclusion, r, out);
  }
  return out;
}

MaterialModel make_model(const FrequencyLaw& background, const FrequencyLaw& inclusion,
                         const Point2& center, double radius, FrequencyRange valid_range) {
  MaterialModel model;
  model.background = background;
  model.inclusion = inclusion;
  model.inclusion_center = center;
  model.inclusion_radius = radius;
  model.valid_range = valid_range;

  const auto violations = validate_model(model);
  if (!violations.empty()) {
    std::string msg = "invalid material model:";
    for (const auto& v : violations) msg += "\n  " + v;
    throw ConfigError(msg);
  }
  const auto [b_lo, b_hi] = law_bounds(background, valid_range);
  const auto [i_lo, i_hi] = law_bounds(inclusion, valid_range);
  model.min_permittivity = std::min(b_lo, i_lo);
  model.max_permittivity = std::max(b_hi, i_hi);
  return model;
}

double region_permittivity(const MaterialModel& model, Region region, double omega) {
  if (!model.valid_range.contains(omega)) {
    std::ostringstream os;
    os << "omega = " << omega << " outside the model's valid range [" << model.valid_range.lo
       << ", " << model.valid_range.hi << "]";
    throw RangeError(os.str());
  }
  return eval_law(region == Region::Inclusion ? model.inclusion : model.background, omega);
}

double eval_permittivity(const MaterialModel& model, const Point2& x, double omega) {
  return region_permittivity(model, model.region(x), omega);
}

MaterialModel dobson_model(FrequencyRange range) {
  return make_model(ConstantLaw{1.0}, ConstantLaw{8.9}, Point2::Zero(), 0.75 * kPi, range);
}

MaterialModel rational_model(FrequencyRange range) {
  return make_model(ConstantLaw{1.0}, RationalLaw{1.0, 5.34, 1.0}, Point2::Zero(), 0.75 * kPi,
                    range);
}

MaterialModel homogeneous_model(double value, FrequencyRange range) {
  return make_model(ConstantLaw{value}, ConstantLaw{value}, Point2::Zero(), 0.75 * kPi, range);
}

}  // namespace gyrobloch
