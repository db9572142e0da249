#include <doctest.h>

#include <functional>
#include <string>

#include "mscap/config.hpp"
#include "mscap/error.hpp"

using namespace mscap;

namespace {

const char* kRadial = R"(# disk condenser
[domain]
n = 1
shape = ball
center = 0, 0
radius = 1

[compact]
shape = ball
center = 0, 0
radius = 1/2

[weight]
m = 1
psi = -1
delta = 0

[solver]
h = 1/64
)";

std::string with_weight(const std::string& psi, const std::string& delta) {
  std::string s = kRadial;
  s.replace(s.find("psi = -1"), 8, "psi = " + psi);
  s.replace(s.find("delta = 0"), 9, "delta = " + delta);
  return s;
}

Error error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e;
  }
  FAIL("no error thrown");
  return Error(ErrorCode::kInvalidArgument, "");
}

}  // namespace

TEST_CASE("unweighted disk config") {
  const RunConfig c = parse_config_text(kRadial);
  CHECK(c.spec.n() == 1);
  CHECK(c.spec.m == 1);
  CHECK(c.spec.delta == 0.0);
  double v = 0.0;
  CHECK(c.spec.psi.is_constant(&v));
  CHECK(v == -1.0);
  CHECK(c.solver.h == 1.0 / 64);
  CHECK(c.method == "measure");
}

TEST_CASE("weighted config passes the node scan") {
  const RunConfig c = parse_config_text(with_weight("-1 + 0.2*x1", "0.1"));
  CHECK(c.spec.delta == 0.1);
  CHECK(c.spec.psi.print() == Expression::parse("-1 + 0.2*x1").print());
}

TEST_CASE("constraint violations") {
  const Error e1 = error_of([] { parse_config_text(with_weight("1 + 2*x1", "0.1")); });
  CHECK(e1.code() == ErrorCode::kConstraintError);
  CHECK(std::string(e1.what()).find("delta > sup_K psi") != std::string::npos);
  CHECK(error_of([] { parse_config_text(with_weight("log(x1)", "5")); }).code() == ErrorCode::kConstraintError);
  std::string badm = kRadial;
  badm.replace(badm.find("m = 1"), 5, "m = 3");
  CHECK(error_of([&] { parse_config_text(badm); }).code() == ErrorCode::kConstraintError);
  std::string missing = kRadial;
  missing.erase(missing.find("delta = 0"), 9);
  CHECK(parse_config_text(missing).spec.delta == 0.0);  // delta defaults to 0
  std::string nok = kRadial;
  nok.erase(nok.find("[compact]"), nok.find("[weight]") - nok.find("[compact]"));
  CHECK(error_of([&] { parse_config_text(nok).spec.validate(); }).code() == ErrorCode::kEmptyK);
}

TEST_CASE("syntax errors report line and column") {
  const Error e = error_of([] { parse_config_text(with_weight("-1 +* 2", "0")); });
  CHECK(e.code() == ErrorCode::kParseError);
  CHECK(std::string(e.what()).find("line 15, column 11") != std::string::npos);

  std::string unknown = kRadial;
  unknown.replace(unknown.find("radius = 1\n"), 11, "radius = 1\nwidth = 2\n");
  CHECK(std::string(error_of([&] { parse_config_text(unknown); }).what()).find("line 7") != std::string::npos);

  CHECK(error_of([] { parse_config_text(std::string(kRadial) + "[mesh]\n"); }).code() == ErrorCode::kParseError);
  CHECK(error_of([] { parse_config_text(std::string(kRadial) + "h = 1/32\n"); }).code() == ErrorCode::kParseError);
  CHECK(error_of([] { parse_config_text(std::string(kRadial) + "[output]\ncsv = maybe\n"); }).code() ==
        ErrorCode::kParseError);
}

TEST_CASE("missing file is an I/O error with config exit code") {
  const Error e = error_of([] { parse_config("/nonexistent/run.cfg"); });
  CHECK(exit_code(e.code()) == 2);
}

TEST_CASE("canonical text round-trips") {
  RunConfig c = parse_config_text(with_weight("-1 + 0.1*y1", "0.25"));
  c.sweep = 3;
  c.method = "outer";
  c.outer_factors = {12, 6};
  c.prefix = "w";
  const RunConfig d = parse_config_text(to_text(c));
  CHECK(d.spec == c.spec);
  CHECK(to_text(d) == to_text(c));
}

TEST_CASE("distinct configs give distinct specs") {
  const RunConfig a = parse_config_text(with_weight("-1", "0"));
  const RunConfig b = parse_config_text(with_weight("-1", "0.5"));
  const RunConfig c = parse_config_text(with_weight("-1 + 0*x1", "0"));
  CHECK_FALSE(a.spec == b.spec);
  CHECK_FALSE(a.spec == c.spec);
}

TEST_CASE("sweep levels") {
  RunConfig c = parse_config_text(kRadial);
  const auto hs = c.sweep_levels(3);
  REQUIRE(hs.size() == 3);
  CHECK(hs[2] == 1.0 / 256);
}
