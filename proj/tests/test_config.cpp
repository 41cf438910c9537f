#include <doctest.h>

#include <cmath>

#include "gyrobloch/config.hpp"
#include "gyrobloch/error.hpp"

using namespace gyrobloch;

namespace {

const char* kDobson = R"(
# rods in air
[mesh]
n_per_side = 12      # coarse

[material]
id = dobson
background = constant 1
inclusion = constant 8.9
radius = 0.75pi

[sweep]
omega_step = 0.01
n_eigs = 8

[solver]
algorithm = ira
shift_target = 0.4
fallback = false
)";

std::string with_line(const std::string& section, const std::string& line) {
  return "[material]\nbackground = constant 1\ninclusion = constant 2\n[" + section + "]\n" +
         line + "\n";
}

}  // namespace

TEST_CASE("parse reads every section and applies defaults") {
  const RunConfig c = parse_config(kDobson);
  CHECK(c.n_per_side == 12);
  CHECK(c.interface_levels == 2);
  CHECK(c.material.id == "dobson");
  CHECK(std::get<ConstantLaw>(c.material.inclusion).value == 8.9);
  CHECK(c.material.radius == doctest::Approx(0.75 * kPi).epsilon(1e-15));
  CHECK(c.sweep.omega_step == 0.01);
  CHECK(c.sweep.n_eigs == 8);
  CHECK(c.sweep.theta_count == 17);
  CHECK(c.sweep.algorithm == Algorithm::Ira);
  REQUIRE(c.sweep.shift_target.has_value());
  CHECK(*c.sweep.shift_target == 0.4);
  CHECK_FALSE(c.sweep.fallback);
  CHECK(c.output.directory == "out");
  CHECK(c.output.wants("gaps"));
  CHECK_FALSE(c.output.wants("diagnostics"));
}

TEST_CASE("serialize then parse is lossless and canonical") {
  RunConfig c = parse_config(kDobson);
  c.material.inclusion = RationalLaw{1.0, 5.34, 1.0};
  c.material.center = Point2(0.1, -1.0 / 3.0);
  c.sweep.gap_threshold = 1.0 / 7.0 * 1e-5;
  c.sweep.seed = 18446744073709551615ULL;
  c.output.formats = {"gaps", "diagnostics"};

  const std::string text = serialize_config(c);
  const RunConfig back = parse_config(text);
  CHECK(serialize_config(back) == text);
  CHECK(config_hash(back) == config_hash(c));
  CHECK(back.material.center.y() == -1.0 / 3.0);
  CHECK(back.sweep.gap_threshold == c.sweep.gap_threshold);
  CHECK(back.sweep.seed == c.sweep.seed);
  CHECK(std::get<RationalLaw>(back.material.inclusion).b == 5.34);

  // Formatting of the input does not matter, only its content.
  const RunConfig plain = parse_config(kDobson);
  const std::string shuffled = R"(
[solver]
fallback=false
shift_target   =   0.4
algorithm = ira
[sweep]
n_eigs = 8
omega_step = 1e-2
[material]
inclusion = constant   8.9
background = constant 1.0
radius = 2.356194490192345
id = dobson
[mesh]
n_per_side = 12
)";
  CHECK(config_hash(parse_config(shuffled)) == config_hash(plain));
}

TEST_CASE("hash changes with content") {
  RunConfig a = parse_config(kDobson);
  RunConfig b = a;
  b.sweep.bz_constant = 0.5;
  CHECK(config_hash(a) != config_hash(b));
  CHECK(config_hash(a).size() == 16);
  b = a;
  b.sweep.threads = 8;  // runtime only
  CHECK(config_hash(a) == config_hash(b));
}

TEST_CASE("unknown keys, sections and malformed values are errors") {
  CHECK_THROWS_AS(parse_config(with_line("sweep", "omega_stepp = 0.1")), ConfigError);
  CHECK_THROWS_AS(parse_config(with_line("plot", "x = 1")), ConfigError);
  CHECK_THROWS_AS(parse_config(with_line("sweep", "theta_count = 3.5")), ConfigError);
  CHECK_THROWS_AS(parse_config(with_line("sweep", "omega_step = fast")), ConfigError);
  CHECK_THROWS_AS(parse_config(with_line("solver", "fallback = yes")), ConfigError);
  CHECK_THROWS_AS(parse_config(with_line("solver", "algorithm = qr")), ConfigError);
  CHECK_THROWS_AS(parse_config(with_line("output", "formats = eigs,pdf")), ConfigError);
  CHECK_THROWS_AS(parse_config(with_line("sweep", "n_eigs")), ConfigError);
  CHECK_THROWS_AS(parse_config("n_per_side = 3\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[mesh\n"), ConfigError);
  CHECK_THROWS_AS(parse_config(with_line("material", "inclusion = drude 1 2")), ConfigError);
  CHECK_THROWS_AS(parse_config(with_line("material", "center = 1")), ConfigError);
  // Duplicate key (inclusion is set by the helper already).
  CHECK_THROWS_AS(parse_config(with_line("material", "inclusion = constant 3")), ConfigError);
  // Required keys.
  CHECK_THROWS_AS(parse_config("[mesh]\nn_per_side = 4\n"), ConfigError);

  try {
    parse_config(with_line("sweep", "omega_stepp = 0.1"));
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("line 5") != std::string::npos);
    CHECK(std::string(e.what()).find("omega_stepp") != std::string::npos);
  }
}

TEST_CASE("semantic validation collects every violation") {
  const std::string text =
      "[mesh]\nn_per_side = 1\n[material]\nbackground = constant 1\n"
      "inclusion = rational 1 5.34 0.25\n[sweep]\nomega_step = -1\n";
  try {
    parse_config(text);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("n_per_side") != std::string::npos);
    CHECK(msg.find("pole") != std::string::npos);
    CHECK(msg.find("omega_step") != std::string::npos);
  }
  // Sweep range beyond the model's validity interval.
  CHECK_THROWS_AS(parse_config(with_line("sweep", "omega_max = 0.9")), ConfigError);
}

TEST_CASE("laws format and parse") {
  CHECK(format_law(ConstantLaw{8.9}) == "constant 8.9");
  CHECK(format_law(RationalLaw{1, 5.34, 1}) == "rational 1 5.34 1");
  const auto law = parse_law("rational 1 5.34 1");
  CHECK(eval_law(law, 0.5) == doctest::Approx(1 + 5.34 / 0.75));
  CHECK_THROWS_AS(parse_law("constant"), ConfigError);
}

TEST_CASE("load_config reports unreadable files as i/o errors") {
  CHECK_THROWS_AS(load_config("/nonexistent/dir/run.cfg"), IoError);
}
