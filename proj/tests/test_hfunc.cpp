#include <cmath>
#include <limits>
#include <vector>

#include "doctest.h"
#include "gsm/errors.hpp"
#include "gsm/hfunc.hpp"

using gsm::DomainError;
using gsm::HFunction;
using gsm::HKind;

namespace {

bool near(double a, double b, double tol = 1e-12) {
  return std::abs(a - b) <= tol;
}

// Kink positions where h' jumps; finite differencing is skipped near these.
std::vector<double> kinks(const HFunction& h) {
  switch (h.kind) {
    case HKind::TruncPower:
    case HKind::TruncLog1p:
      return {h.c};
    default:
      return {};
  }
}

}  // namespace

TEST_CASE("power evaluations") {
  auto h = HFunction::power(2.0);
  auto e = h.eval(1.5);
  CHECK(near(e.value, 2.25));
  CHECK(near(e.deriv, 3.0));
  CHECK(near(h.eval(0.0).value, 0.0));
  CHECK(near(h.eval(0.0).deriv, 0.0));

  auto lin = HFunction::power(1.0);
  CHECK(near(lin.eval(0.0).deriv, 1.0));
  CHECK(near(lin.eval(7.0).value, 7.0));

  auto sqrt_h = HFunction::power(0.5);
  CHECK(std::isinf(sqrt_h.eval(0.0).deriv));
  CHECK(near(sqrt_h.eval(4.0).value, 2.0));
  CHECK(near(sqrt_h.eval(4.0).deriv, 0.25));
}

TEST_CASE("log1p evaluations") {
  auto h = HFunction::log1p_fn();
  CHECK(near(h.eval(0.0).value, 0.0));
  CHECK(near(h.eval(0.0).deriv, 1.0));
  CHECK(near(h.eval(1.0).value, std::log(2.0)));
  CHECK(near(h.eval(1.0).deriv, 0.5));
}

TEST_CASE("truncated power evaluations") {
  auto h = HFunction::trunc_power(1.0, 3.0);
  CHECK(near(h.eval(5.0).value, 3.0));
  CHECK(near(h.eval(5.0).deriv, 0.0));
  CHECK(near(h.eval(2.0).value, 2.0));
  CHECK(near(h.eval(2.0).deriv, 1.0));
  // left derivative at the kink
  CHECK(near(h.eval(3.0).value, 3.0));
  CHECK(near(h.eval(3.0).deriv, 1.0));

  auto h2 = HFunction::trunc_power(2.0, 3.0);
  CHECK(near(h2.eval(2.0).value, 4.0));
  CHECK(near(h2.eval(2.0).deriv, 4.0));
  CHECK(near(h2.eval(10.0).value, 9.0));
  CHECK(near(h2.eval(10.0).deriv, 0.0));
}

TEST_CASE("truncated log1p evaluations") {
  auto h = HFunction::trunc_log1p(2.0);
  CHECK(near(h.eval(1.0).value, std::log(2.0)));
  CHECK(near(h.eval(1.0).deriv, 0.5));
  CHECK(near(h.eval(4.0).value, std::log(3.0)));
  CHECK(near(h.eval(4.0).deriv, 0.0));
}

TEST_CASE("mcp evaluations") {
  auto h = HFunction::mcp(2.0);
  CHECK(near(h.eval(1.0).value, 0.75));
  CHECK(near(h.eval(1.0).deriv, 0.5));
  CHECK(near(h.eval(2.0).value, 1.0));
  CHECK(near(h.eval(2.0).deriv, 0.0));
  CHECK(near(h.eval(5.0).value, 1.0));
  CHECK(near(h.eval(5.0).deriv, 0.0));
  CHECK(near(*h.bound_M, 1.0));
}

TEST_CASE("scad evaluations") {
  auto h = HFunction::scad(3.7);
  // linear segment ends at knee / 3.7 = 1
  CHECK(near(h.eval(0.5).value, 0.5));
  CHECK(near(h.eval(0.5).deriv, 1.0));
  CHECK(near(h.eval(1.0).value, 1.0));
  CHECK(near(h.eval(1.0).deriv, 1.0));
  // quadratic segment: value 1 + (2.7^2 - (3.7-x)^2)/(2*2.7)
  CHECK(near(h.eval(2.0).value, 1.0 + (2.7 * 2.7 - 1.7 * 1.7) / (2.0 * 2.7)));
  CHECK(near(h.eval(2.0).deriv, 1.7 / 2.7));
  // flat past the knee, continuous at it
  CHECK(near(h.eval(3.7).value, 2.35));
  CHECK(near(h.eval(3.7).deriv, 0.0));
  CHECK(near(h.eval(10.0).value, 2.35));
  CHECK(near(*h.bound_M, 2.35));
}

TEST_CASE("constant evaluations") {
  auto h = HFunction::constant(2.0);
  CHECK(near(h.eval(0.0).value, 2.0));
  CHECK(near(h.eval(9.0).value, 2.0));
  CHECK(near(h.eval(9.0).deriv, 0.0));
}

TEST_CASE("negative argument is a domain error") {
  CHECK_THROWS_AS(HFunction::power(2.0).eval(-0.1), DomainError);
  CHECK_THROWS_AS(HFunction::log1p_fn().eval(-1e-9), DomainError);
}

TEST_CASE("invalid constructor parameters") {
  CHECK_THROWS_AS(HFunction::power(0.0), DomainError);
  CHECK_THROWS_AS(HFunction::power(-1.0), DomainError);
  CHECK_THROWS_AS(HFunction::trunc_power(1.0, 0.0), DomainError);
  CHECK_THROWS_AS(HFunction::trunc_log1p(-2.0), DomainError);
  CHECK_THROWS_AS(HFunction::mcp(0.0), DomainError);
  CHECK_THROWS_AS(HFunction::scad(0.0), DomainError);
  CHECK_THROWS_AS(HFunction::constant(-1.0), DomainError);
}

TEST_CASE("id round trip") {
  std::vector<HFunction> hs = {
      HFunction::power(1.0),          HFunction::power(2.5),
      HFunction::log1p_fn(),          HFunction::trunc_power(1.0, 3.0),
      HFunction::trunc_power(2.0, 1.5), HFunction::trunc_log1p(2.0),
      HFunction::mcp(2.0),            HFunction::scad(3.7),
      HFunction::constant(1.0)};
  for (const auto& h : hs) {
    auto back = HFunction::parse(h.id());
    CHECK(back.kind == h.kind);
    CHECK(near(back.a, h.a));
    CHECK(near(back.c, h.c));
    CHECK(back.id() == h.id());
  }
  CHECK(HFunction::parse("min_pow:1:3").id() == "min_pow:1:3");
  CHECK(HFunction::parse("pow:2").id() == "pow:2");
  CHECK(HFunction::parse("log1p").id() == "log1p");
}

TEST_CASE("parse rejects malformed ids") {
  CHECK_THROWS_AS(HFunction::parse("pow"), DomainError);
  CHECK_THROWS_AS(HFunction::parse("pow:x"), DomainError);
  CHECK_THROWS_AS(HFunction::parse("pow:1:2"), DomainError);
  CHECK_THROWS_AS(HFunction::parse("min_pow:1"), DomainError);
  CHECK_THROWS_AS(HFunction::parse("log1p:1"), DomainError);
  CHECK_THROWS_AS(HFunction::parse("banana"), DomainError);
  CHECK_THROWS_AS(HFunction::parse(""), DomainError);
}

TEST_CASE("truncated variants agree with their base below the cut") {
  auto tp = HFunction::trunc_power(2.0, 3.0);
  auto p = HFunction::power(2.0);
  auto tl = HFunction::trunc_log1p(5.0);
  auto l = HFunction::log1p_fn();
  for (double x : {0.0, 0.4, 1.1, 2.3, 2.999}) {
    CHECK(tp.eval(x).value == p.eval(x).value);
    CHECK(tp.eval(x).deriv == p.eval(x).deriv);
    CHECK(tl.eval(x).value == l.eval(x).value);
    CHECK(tl.eval(x).deriv == l.eval(x).deriv);
  }
}

TEST_CASE("derivative matches finite differences away from kinks") {
  std::vector<HFunction> hs = {
      HFunction::power(1.0),          HFunction::power(2.0),
      HFunction::power(1.5),          HFunction::log1p_fn(),
      HFunction::trunc_power(1.0, 3.0), HFunction::trunc_power(2.0, 2.0),
      HFunction::trunc_log1p(2.0),    HFunction::mcp(2.0),
      HFunction::scad(3.7),           HFunction::constant(2.0)};
  const double step = 1e-6;
  for (const auto& h : hs) {
    for (double x : {0.3, 0.9, 1.7, 2.6, 4.2}) {
      bool skip = false;
      for (double k : kinks(h))
        if (std::abs(x - k) < 0.05) skip = true;
      if (skip) continue;
      double fd =
          (h.eval(x + step).value - h.eval(x - step).value) / (2.0 * step);
      double scale = std::max(1.0, std::abs(h.eval(x).deriv));
      CHECK(std::abs(fd - h.eval(x).deriv) <= 1e-5 * scale);
    }
  }
}

TEST_CASE("validation of standard h functions") {
  auto rep = gsm::validate(HFunction::power(2.0));
  CHECK(rep.ok());
  CHECK(rep.has_warning());
  bool saw_unbounded_warn = false;
  for (const auto& ch : rep.checks) {
    if (ch.name == "bounded_h") saw_unbounded_warn = (ch.status == "warn");
    if (ch.name == "positivity") CHECK(ch.status == "pass");
    if (ch.name == "limit_zero_at_origin") CHECK(ch.status == "pass");
    if (ch.name == "nondecreasing") CHECK(ch.status == "pass");
  }
  CHECK(saw_unbounded_warn);

  auto rep2 = gsm::validate(HFunction::trunc_power(1.0, 3.0));
  CHECK(rep2.ok());
  CHECK(!rep2.has_warning());

  // constant level does not vanish at the origin: warn, not fail
  auto rep3 = gsm::validate(HFunction::constant(1.0));
  CHECK(rep3.ok());
  CHECK(rep3.has_warning());
  bool saw_limit_warn = false;
  for (const auto& ch : rep3.checks)
    if (ch.name == "limit_zero_at_origin" && ch.status == "warn")
      saw_limit_warn = true;
  CHECK(saw_limit_warn);
}

TEST_CASE("validate_grid flags decreasing values") {
  std::vector<double> x = {0.5, 1.0, 1.5, 2.0};
  std::vector<double> v = {1.0, 0.8, 0.6, 0.4};
  std::vector<double> d = {-0.4, -0.4, -0.4, -0.4};
  auto rep = gsm::validate_grid(x, v, d, std::nullopt, std::nullopt);
  CHECK(!rep.ok());
  bool saw = false;
  for (const auto& ch : rep.checks)
    if (ch.name == "nondecreasing" && ch.status == "fail") saw = true;
  CHECK(saw);
}

TEST_CASE("validate_grid sorts by x and rejects ragged input") {
  // shuffled ascending curve must still pass the monotonicity scan
  std::vector<double> x = {2.0, 0.5, 1.5, 1.0};
  std::vector<double> v = {4.0, 0.25, 2.25, 1.0};
  std::vector<double> d = {4.0, 1.0, 3.0, 2.0};
  auto rep = gsm::validate_grid(x, v, d, std::nullopt, std::nullopt);
  CHECK(rep.ok());

  std::vector<double> short_d = {1.0, 2.0};
  CHECK_THROWS_AS(gsm::validate_grid(x, v, short_d, std::nullopt, std::nullopt),
                  DomainError);
}

TEST_CASE("validate_grid enforces declared bounds") {
  std::vector<double> x = {0.5, 1.0, 2.0};
  std::vector<double> v = {0.5, 1.0, 2.0};
  std::vector<double> d = {1.0, 1.0, 1.0};
  auto rep = gsm::validate_grid(x, v, d, 1.5, std::nullopt);
  CHECK(!rep.ok());
  bool saw = false;
  for (const auto& ch : rep.checks)
    if (ch.name == "bounded_h" && ch.status == "fail") saw = true;
  CHECK(saw);
}
