#include "gsm/hfunc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "gsm/errors.hpp"
#include "gsm/io.hpp"

namespace gsm {

namespace {

constexpr double kScadA = 3.7;  // conventional SCAD shape constant

double pow_deriv(double a, double x) {
  if (x > 0.0) return a * std::pow(x, a - 1.0);
  // boundary x = 0: limit from the right
  if (a > 1.0) return 0.0;
  if (a == 1.0) return 1.0;
  return std::numeric_limits<double>::infinity();
}

}  // namespace

HFunction HFunction::power(double a) {
  if (!(a > 0.0)) throw DomainError("power exponent a must be > 0");
  HFunction h;
  h.kind = HKind::Power;
  h.a = a;
  if (a == 1.0) h.bound_Mprime = 1.0;
  return h;
}

HFunction HFunction::log1p_fn() {
  HFunction h;
  h.kind = HKind::Log1p;
  h.bound_Mprime = 1.0;
  return h;
}

HFunction HFunction::trunc_power(double a, double c) {
  if (!(a > 0.0)) throw DomainError("truncated-power exponent a must be > 0");
  if (!(c > 0.0)) throw DomainError("truncation point c must be > 0");
  HFunction h;
  h.kind = HKind::TruncPower;
  h.a = a;
  h.c = c;
  h.bound_M = std::pow(c, a);
  if (a >= 1.0) h.bound_Mprime = a * std::pow(c, a - 1.0);
  return h;
}

HFunction HFunction::trunc_log1p(double c) {
  if (!(c > 0.0)) throw DomainError("truncation point c must be > 0");
  HFunction h;
  h.kind = HKind::TruncLog1p;
  h.c = c;
  h.bound_M = std::log1p(c);
  h.bound_Mprime = 1.0;
  return h;
}

HFunction HFunction::mcp(double knee) {
  if (!(knee > 0.0)) throw DomainError("mcp knee must be > 0");
  HFunction h;
  h.kind = HKind::McpLike;
  h.c = knee;
  h.bound_M = knee / 2.0;
  h.bound_Mprime = 1.0;
  return h;
}

HFunction HFunction::scad(double knee) {
  if (!(knee > 0.0)) throw DomainError("scad knee must be > 0");
  HFunction h;
  h.kind = HKind::ScadLike;
  h.c = knee;
  const double ls = knee / kScadA;
  h.bound_M = ls + (knee - ls) / 2.0;
  h.bound_Mprime = 1.0;
  return h;
}

HFunction HFunction::constant(double c) {
  if (!(c >= 0.0)) throw DomainError("constant level must be >= 0");
  HFunction h;
  h.kind = HKind::Constant;
  h.c = c;
  h.bound_M = c;
  h.bound_Mprime = 0.0;
  return h;
}

HEval HFunction::eval(double x) const {
  if (x < 0.0) throw DomainError("h evaluated at negative x");
  switch (kind) {
    case HKind::Power:
      return {std::pow(x, a), pow_deriv(a, x)};
    case HKind::Log1p:
      return {std::log1p(x), 1.0 / (1.0 + x)};
    case HKind::TruncPower:
      if (x > c) return {std::pow(c, a), 0.0};
      return {std::pow(x, a), pow_deriv(a, x)};
    case HKind::TruncLog1p:
      if (x > c) return {std::log1p(c), 0.0};
      return {std::log1p(x), 1.0 / (1.0 + x)};
    case HKind::McpLike:
      if (x > c) return {c / 2.0, 0.0};
      return {x - x * x / (2.0 * c), 1.0 - x / c};
    case HKind::ScadLike: {
      const double ls = c / kScadA;
      if (x <= ls) return {x, 1.0};
      if (x > c) return {ls + (c - ls) / 2.0, 0.0};
      const double w = c - ls;
      const double v = ls + (w * w - (c - x) * (c - x)) / (2.0 * w);
      return {v, (c - x) / w};
    }
    case HKind::Constant:
      return {c, 0.0};
  }
  throw DomainError("unknown h kind");
}

std::vector<double> HFunction::kinks() const {
  switch (kind) {
    case HKind::TruncPower:
    case HKind::TruncLog1p:
    case HKind::McpLike:
      return {c};
    case HKind::ScadLike:
      return {c / kScadA, c};
    default:
      return {};
  }
}

std::string HFunction::id() const {
  switch (kind) {
    case HKind::Power:
      return "pow:" + format_double(a);
    case HKind::Log1p:
      return "log1p";
    case HKind::TruncPower:
      return "min_pow:" + format_double(a) + ":" + format_double(c);
    case HKind::TruncLog1p:
      return "min_log1p:" + format_double(c);
    case HKind::McpLike:
      return "mcp:" + format_double(c);
    case HKind::ScadLike:
      return "scad:" + format_double(c);
    case HKind::Constant:
      return "const:" + format_double(c);
  }
  throw DomainError("unknown h kind");
}

namespace {

std::vector<std::string> split_colon(const std::string& s) {
  std::vector<std::string> parts;
  std::string cur;
  for (char ch : s) {
    if (ch == ':') {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  parts.push_back(cur);
  return parts;
}

double parse_param(const std::string& tok, const std::string& id) {
  try {
    size_t pos = 0;
    double v = std::stod(tok, &pos);
    if (pos != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw DomainError("bad numeric parameter '" + tok + "' in h id '" + id +
                      "'");
  }
}

}  // namespace

HFunction HFunction::parse(const std::string& id) {
  const auto parts = split_colon(id);
  const std::string& name = parts[0];
  const size_t np = parts.size() - 1;
  if (name == "pow" && np == 1) return power(parse_param(parts[1], id));
  if (name == "log1p" && np == 0) return log1p_fn();
  if (name == "min_pow" && np == 2)
    return trunc_power(parse_param(parts[1], id), parse_param(parts[2], id));
  if (name == "min_log1p" && np == 1)
    return trunc_log1p(parse_param(parts[1], id));
  if (name == "mcp" && np == 1) return mcp(parse_param(parts[1], id));
  if (name == "scad" && np == 1) return scad(parse_param(parts[1], id));
  if (name == "const" && np == 1) return constant(parse_param(parts[1], id));
  throw DomainError("unrecognized h id '" + id +
                    "' (expected pow:a, log1p, min_pow:a:c, min_log1p:c, "
                    "mcp:knee, scad:knee, const:c)");
}

bool ValidationReport::ok() const {
  for (const auto& ch : checks)
    if (ch.status == "fail") return false;
  return true;
}

bool ValidationReport::has_warning() const {
  for (const auto& ch : checks)
    if (ch.status == "warn") return true;
  return false;
}

std::string ValidationReport::to_string() const {
  std::ostringstream os;
  for (const auto& ch : checks) {
    os << ch.status << "  " << ch.name;
    if (!ch.detail.empty()) os << ": " << ch.detail;
    os << "\n";
  }
  return os.str();
}

ValidationReport validate_grid(const std::vector<double>& x_in,
                               const std::vector<double>& value_in,
                               const std::vector<double>& deriv_in,
                               std::optional<double> bound_M,
                               std::optional<double> bound_Mprime) {
  if (x_in.size() != value_in.size() || x_in.size() != deriv_in.size())
    throw DomainError("validation grid arrays must have equal length");
  // order by x so the monotonicity scan is meaningful
  std::vector<size_t> idx(x_in.size());
  for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(),
            [&](size_t a, size_t b) { return x_in[a] < x_in[b]; });
  std::vector<double> x, value, deriv;
  for (size_t i : idx) {
    x.push_back(x_in[i]);
    value.push_back(value_in[i]);
    deriv.push_back(deriv_in[i]);
  }
  ValidationReport rep;
  const size_t n = x.size();

  size_t zero_count = 0, neg_count = 0;
  for (size_t i = 0; i < n; ++i) {
    if (x[i] <= 0.0) continue;
    if (value[i] < 0.0) ++neg_count;
    if (value[i] == 0.0) ++zero_count;
  }
  if (neg_count > 0)
    rep.checks.push_back({"positivity", "fail",
                          std::to_string(neg_count) + " grid points with h < 0"});
  else if (zero_count > n / 100 + 1)
    rep.checks.push_back({"positivity", "fail",
                          std::to_string(zero_count) +
                              " grid points with h = 0 (not measure-zero)"});
  else
    rep.checks.push_back({"positivity", "pass", ""});

  // limit at the origin: smallest positive grid value of h
  double near0 = std::numeric_limits<double>::quiet_NaN();
  double near0x = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < n; ++i) {
    if (x[i] > 0.0 && x[i] < near0x) {
      near0x = x[i];
      near0 = value[i];
    }
  }
  if (std::isnan(near0) || near0 <= 1e-4)
    rep.checks.push_back({"limit_zero_at_origin", "pass", ""});
  else
    rep.checks.push_back({"limit_zero_at_origin", "warn",
                          "h near 0 is " + format_double(near0) +
                              "; valid only in special cases"});

  bool nondecreasing = true;
  for (size_t i = 0; i < n; ++i) {
    if (std::isfinite(deriv[i]) && deriv[i] < -1e-12) {
      nondecreasing = false;
      break;
    }
  }
  for (size_t i = 0; i + 1 < n && nondecreasing; ++i)
    if (value[i + 1] < value[i] - 1e-12) nondecreasing = false;
  rep.checks.push_back({"nondecreasing", nondecreasing ? "pass" : "fail",
                        nondecreasing ? "" : "negative derivative on grid"});

  double vmax = 0.0, dmax = 0.0;
  for (size_t i = 0; i < n; ++i) {
    vmax = std::max(vmax, value[i]);
    if (std::isfinite(deriv[i])) dmax = std::max(dmax, deriv[i]);
  }
  if (bound_M) {
    if (vmax <= *bound_M + 1e-12)
      rep.checks.push_back({"bounded_h", "pass",
                            "max " + format_double(vmax) + " <= bound " +
                                format_double(*bound_M)});
    else
      rep.checks.push_back({"bounded_h", "fail",
                            "max " + format_double(vmax) + " exceeds bound " +
                                format_double(*bound_M)});
  } else {
    rep.checks.push_back({"bounded_h", "warn",
                          "no declared bound; grid max " + format_double(vmax)});
  }
  if (bound_Mprime) {
    if (dmax <= *bound_Mprime + 1e-12)
      rep.checks.push_back({"bounded_h_deriv", "pass", ""});
    else
      rep.checks.push_back({"bounded_h_deriv", "fail",
                            "max h' " + format_double(dmax) +
                                " exceeds bound " + format_double(*bound_Mprime)});
  } else {
    rep.checks.push_back({"bounded_h_deriv", "warn",
                          "no declared bound; grid max h' " +
                              format_double(dmax)});
  }
  return rep;
}

ValidationReport validate(const HFunction& h) {
  std::vector<double> x, v, d;
  const int n = 2001;
  x.reserve(n);
  for (int i = 0; i < n; ++i) x.push_back(100.0 * i / (n - 1));
  x.push_back(1e-6);
  x.push_back(1e-3);
  for (double xi : x) {
    auto e = h.eval(xi);
    v.push_back(e.value);
    d.push_back(e.deriv);
  }
  return validate_grid(x, v, d, h.bound_M, h.bound_Mprime);
}

}  // namespace gsm
