#include "gyrobloch/config.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "gyrobloch/error.hpp"

namespace gyrobloch {
namespace {

constexpr std::array<std::string_view, 5> kFormats{"eigs", "gaps", "tube", "surfaces",
                                                   "diagnostics"};

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  for (;;) {
    const auto pos = s.find(sep);
    out.push_back(trim(s.substr(0, pos)));
    if (pos == std::string_view::npos) return out;
    s.remove_prefix(pos + 1);
  }
}

std::vector<std::string_view> words(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    const std::size_t start = i;
    while (i < s.size() && s[i] != ' ' && s[i] != '\t') ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  return out;
}

// A finite real; a trailing "pi" multiplies by pi ("0.75pi", "pi").
double parse_real(std::string_view s) {
  double scale = 1.0;
  if (s.size() >= 2 && s.substr(s.size() - 2) == "pi") {
    scale = kPi;
    s.remove_suffix(2);
    if (s.empty()) return kPi;
  }
  double v = 0.0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || end != s.data() + s.size() || !std::isfinite(v))
    throw ConfigError("expected a number, got '" + std::string(s) + "'");
  return v * scale;
}

template <typename Int>
Int parse_integer(std::string_view s) {
  Int v{};
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || end != s.data() + s.size())
    throw ConfigError("expected an integer, got '" + std::string(s) + "'");
  return v;
}

bool parse_bool(std::string_view s) {
  if (s == "true") return true;
  if (s == "false") return false;
  throw ConfigError("expected true or false, got '" + std::string(s) + "'");
}

std::string fmt(double v) {
  std::array<char, 32> buf{};
  const auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  (void)ec;
  return std::string(buf.data(), end);
}

std::string fmt(bool v) { return v ? "true" : "false"; }

struct Key {
  std::string_view section;
  std::string_view name;
  std::function<void(RunConfig&, std::string_view)> parse;
  std::function<std::string(const RunConfig&)> format;
  bool required = false;
};

const std::vector<Key>& keys() {
  static const std::vector<Key> table = [] {
    std::vector<Key> k;
    const auto real = [&](std::string_view section, std::string_view name, auto member) {
      k.push_back({section, name,
                   [member](RunConfig& c, std::string_view v) { member(c) = parse_real(v); },
                   [member](const RunConfig& c) {
                     return fmt(member(c));
                   }});
    };
    const auto integer = [&](std::string_view section, std::string_view name, auto member) {
      k.push_back({section, name,
                   [member](RunConfig& c, std::string_view v) {
                     member(c) = parse_integer<int>(v);
                   },
                   [member](const RunConfig& c) {
                     return std::to_string(member(c));
                   }});
    };

    integer("mesh", "n_per_side", [](auto& c) -> auto& { return c.n_per_side; });
    integer("mesh", "interface_levels", [](auto& c) -> auto& { return c.interface_levels; });

    k.push_back({"material", "id",
                 [](RunConfig& c, std::string_view v) {
                   if (v.empty() || v.find_first_of(" \t\"") != std::string_view::npos)
                     throw ConfigError("material id must be a single word");
                   c.material.id = std::string(v);
                 },
                 [](const RunConfig& c) { return c.material.id; }});
    k.push_back({"material", "background",
                 [](RunConfig& c, std::string_view v) { c.material.background = parse_law(v); },
                 [](const RunConfig& c) { return format_law(c.material.background); }, true});
    k.push_back({"material", "inclusion",
                 [](RunConfig& c, std::string_view v) { c.material.inclusion = parse_law(v); },
                 [](const RunConfig& c) { return format_law(c.material.inclusion); }, true});
    real("material", "radius", [](auto& c) -> auto& { return c.material.radius; });
    k.push_back({"material", "center",
                 [](RunConfig& c, std::string_view v) {
                   const auto w = words(v);
                   if (w.size() != 2) throw ConfigError("center needs two numbers");
                   c.material.center = Point2(parse_real(w[0]), parse_real(w[1]));
                 },
                 [](const RunConfig& c) {
                   return fmt(c.material.center.x()) + " " + fmt(c.material.center.y());
                 }});
    real("material", "valid_min", [](auto& c) -> auto& { return c.material.valid_range.lo; });
    real("material", "valid_max", [](auto& c) -> auto& { return c.material.valid_range.hi; });

    real("sweep", "omega_min", [](auto& c) -> auto& { return c.sweep.omega_lo; });
    real("sweep", "omega_max", [](auto& c) -> auto& { return c.sweep.omega_hi; });
    real("sweep", "omega_step", [](auto& c) -> auto& { return c.sweep.omega_step; });
    integer("sweep", "theta_count", [](auto& c) -> auto& { return c.sweep.theta_count; });
    integer("sweep", "n_eigs", [](auto& c) -> auto& { return c.sweep.n_eigs; });
    integer("sweep", "max_n_eigs", [](auto& c) -> auto& { return c.sweep.max_n_eigs; });
    real("sweep", "bz_constant", [](auto& c) -> auto& { return c.sweep.bz_constant; });
    real("sweep", "gap_threshold", [](auto& c) -> auto& { return c.sweep.gap_threshold; });
    real("sweep", "endpoint_tolerance",
         [](auto& c) -> auto& { return c.sweep.endpoint_tolerance; });
    real("sweep", "margin_cap", [](auto& c) -> auto& { return c.sweep.margin_cap; });

    k.push_back({"solver", "algorithm",
                 [](RunConfig& c, std::string_view v) {
                   c.sweep.algorithm = parse_algorithm(std::string(v));
                 },
                 [](const RunConfig& c) { return to_string(c.sweep.algorithm); }});
    k.push_back({"solver", "shift_target",
                 [](RunConfig& c, std::string_view v) {
                   if (v == "auto") c.sweep.shift_target.reset();
                   else c.sweep.shift_target = parse_real(v);
                 },
                 [](const RunConfig& c) {
                   return c.sweep.shift_target ? fmt(*c.sweep.shift_target) : std::string("auto");
                 }});
    real("solver", "shift_offset", [](auto& c) -> auto& { return c.sweep.shift_offset; });
    real("solver", "tolerance", [](auto& c) -> auto& { return c.sweep.tol; });
    integer("solver", "max_restarts", [](auto& c) -> auto& { return c.sweep.max_restarts; });
    k.push_back({"solver", "fallback",
                 [](RunConfig& c, std::string_view v) { c.sweep.fallback = parse_bool(v); },
                 [](const RunConfig& c) { return fmt(c.sweep.fallback); }});
    real("solver", "fallback_cluster_diameter",
         [](auto& c) -> auto& { return c.sweep.fallback_cluster_diameter; });
    k.push_back({"solver", "seed",
                 [](RunConfig& c, std::string_view v) {
                   c.sweep.seed = parse_integer<std::uint64_t>(v);
                 },
                 [](const RunConfig& c) { return std::to_string(c.sweep.seed); }});

    k.push_back({"output", "directory",
                 [](RunConfig& c, std::string_view v) {
                   if (v.empty()) throw ConfigError("output directory must not be empty");
                   c.output.directory = std::string(v);
                 },
                 [](const RunConfig& c) { return c.output.directory; }});
    k.push_back({"output", "formats",
                 [](RunConfig& c, std::string_view v) {
                   const auto listed = split(v, ',');
                   for (const auto f : listed) {
                     if (std::ranges::find(kFormats, f) == kFormats.end())
                       throw ConfigError("unknown output format '" + std::string(f) +
                                         "' (expected eigs, gaps, tube, surfaces, diagnostics)");
                   }
                   c.output.formats.clear();
                   for (const auto f : kFormats) {
                     if (std::ranges::find(listed, f) != listed.end())
                       c.output.formats.emplace_back(f);
                   }
                 },
                 [](const RunConfig& c) {
                   std::string s;
                   for (const auto& f : c.output.formats) s += (s.empty() ? "" : ",") + f;
                   return s;
                 }});
    return k;
  }();
  return table;
}

}  // namespace

bool OutputSection::wants(std::string_view format) const {
  return std::ranges::find(formats, format) != formats.end();
}

std::string format_law(const FrequencyLaw& law) {
  if (const auto* c = std::get_if<ConstantLaw>(&law)) return "constant " + fmt(c->value);
  const auto& r = std::get<RationalLaw>(law);
  return "rational " + fmt(r.a) + " " + fmt(r.b) + " " + fmt(r.c);
}

FrequencyLaw parse_law(std::string_view text) {
  const auto w = words(text);
  if (w.size() == 2 && w[0] == "constant") return ConstantLaw{parse_real(w[1])};
  if (w.size() == 4 && w[0] == "rational")
    return RationalLaw{parse_real(w[1]), parse_real(w[2]), parse_real(w[3])};
  throw ConfigError("expected 'constant <eps>' or 'rational <a> <b> <c>', got '" +
                    std::string(text) + "'");
}

MaterialModel RunConfig::model() const {
  return make_model(material.background, material.inclusion, material.center, material.radius,
                    material.valid_range);
}

void RunConfig::validate() const {
  std::vector<std::string> problems;
  if (n_per_side < 2) problems.push_back("mesh.n_per_side must be at least 2");
  if (interface_levels < 0 || interface_levels > 5)
    problems.push_back("mesh.interface_levels must be in [0, 5]");
  if (output.formats.empty()) problems.push_back("output.formats must not be empty");
  const auto collect = [&](auto&& check) {
    try {
      check();
    } catch (const ConfigError& e) {
      problems.emplace_back(e.what());
    }
  };
  collect([&] { (void)model(); });
  collect([&] { sweep.validate(); });
  if (sweep.omega_lo < material.valid_range.lo || sweep.omega_hi > material.valid_range.hi)
    problems.push_back("sweep frequency range must lie inside the material's valid range");
  if (!problems.empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& p : problems) msg += "\n  " + p;
    throw ConfigError(msg);
  }
}

RunConfig parse_config(std::string_view text) {
  RunConfig config;
  std::string section;
  std::map<std::pair<std::string, std::string>, int> seen;
  int line_no = 0;
  for (auto raw : split(text, '\n')) {
    ++line_no;
    const auto where = "line " + std::to_string(line_no) + ": ";
    auto line = trim(raw.substr(0, raw.find('#')));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + "malformed section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      if (std::ranges::none_of(keys(), [&](const Key& k) { return k.section == section; }))
        throw ConfigError(where + "unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(where + "expected key = value");
    if (section.empty()) throw ConfigError(where + "key outside of a section");
    const std::string name(trim(line.substr(0, eq)));
    const auto value = trim(line.substr(eq + 1));
    const auto it = std::ranges::find_if(
        keys(), [&](const Key& k) { return k.section == section && k.name == name; });
    if (it == keys().end())
      throw ConfigError(where + "unknown key '" + name + "' in [" + section + "]");
    if (auto [pos, fresh] = seen.emplace(std::pair{section, name}, line_no); !fresh)
      throw ConfigError(where + "duplicate key '" + name + "' (first set on line " +
                        std::to_string(pos->second) + ")");
    try {
      it->parse(config, value);
    } catch (const ConfigError& e) {
      throw ConfigError(where + section + "." + name + ": " + e.what());
    }
  }
  for (const auto& k : keys()) {
    if (k.required && !seen.contains({std::string(k.section), std::string(k.name)}))
      throw ConfigError("missing required key " + std::string(k.section) + "." +
                        std::string(k.name));
  }
  config.validate();
  return config;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("error reading config file " + path.string());
  return parse_config(buf.str());
}

std::string serialize_config(const RunConfig& config) {
  std::string out;
  std::string_view section;
  for (const auto& k : keys()) {
    if (k.section != section) {
      if (!section.empty()) out += "\n";
      section = k.section;
      out += "[" + std::string(section) + "]\n";
    }
    out += std::string(k.name) + " = " + k.format(config) + "\n";
  }
  return out;
}

std::string config_hash(const RunConfig& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : serialize_config(config)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << h;
  return os.str();
}

}  // namespace gyrobloch
