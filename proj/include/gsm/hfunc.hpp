#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace gsm {

// Per-coordinate weight function h: [0, inf) -> [0, inf), nondecreasing,
// differentiable except at finitely many kinks. Immutable after construction.
enum class HKind {
  Power,         // x^a
  Log1p,         // log(1 + x)
  TruncPower,    // min(x, c)^a
  TruncLog1p,    // log(1 + min(x, c))
  McpLike,       // slope-1 ramp flattening quadratically, constant past knee
  ScadLike,      // slope-1 ramp, linear decay of slope, constant past knee
  Constant,      // c
};

struct HEval {
  double value;
  double deriv;  // left derivative at kinks
};

class HFunction {
 public:
  HKind kind;
  double a = 1.0;  // exponent (Power, TruncPower)
  double c = 1.0;  // truncation point / knee / constant level
  std::optional<double> bound_M;       // a.e. upper bound on h, when finite
  std::optional<double> bound_Mprime;  // a.e. upper bound on h'

  static HFunction power(double a);
  static HFunction log1p_fn();
  static HFunction trunc_power(double a, double c);
  static HFunction trunc_log1p(double c);
  static HFunction mcp(double knee);
  static HFunction scad(double knee);
  static HFunction constant(double c);

  HEval eval(double x) const;  // throws DomainError on x < 0

  // Text id used by CLI/config: "pow:a", "log1p", "min_pow:a:c",
  // "min_log1p:c", "mcp:knee", "scad:knee", "const:c".
  // parse(print(h)) == h exactly.
  std::string id() const;
  static HFunction parse(const std::string& id);

  // Interior points where h or h' is not smooth, ascending. Quadrature over
  // h-dependent integrands must split at these.
  std::vector<double> kinks() const;
};

struct ValidationCheck {
  std::string name;
  std::string status;  // "pass" | "warn" | "fail"
  std::string detail;
};

struct ValidationReport {
  std::vector<ValidationCheck> checks;
  bool ok() const;           // no "fail"
  bool has_warning() const;  // any "warn"
  std::string to_string() const;
};

// Grid-based checks: positivity a.e., limit zero at origin (warning only),
// nondecreasing, boundedness of h and h'.
ValidationReport validate(const HFunction& h);

// Same checks on externally supplied grid samples (supports custom h).
ValidationReport validate_grid(const std::vector<double>& x,
                               const std::vector<double>& value,
                               const std::vector<double>& deriv,
                               std::optional<double> bound_M,
                               std::optional<double> bound_Mprime);

}  // namespace gsm
