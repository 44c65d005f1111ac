#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "gsm/tggm.hpp"

namespace gsm {

// Independent reference implementations used to cross-check the estimators.
// Nothing here shares code with the production solve paths.

// Derivative-free minimization (Powell's direction-set method with Brent
// line searches). f must be smooth and bounded below near x0.
Eigen::VectorXd powell_minimize(
    const std::function<double(const Eigen::VectorXd&)>& f,
    const Eigen::VectorXd& x0, double tol = 1e-12, int max_rounds = 400);

// min_z 0.5 z'Hz - r'z + sum_i pen_i |z_i|
struct PenalizedQuadratic {
  Eigen::MatrixXd H;
  Eigen::VectorXd r;
  Eigen::VectorXd pen;
};

Eigen::VectorXd fista(const PenalizedQuadratic& p, long max_iters = 200000,
                      double tol = 1e-14);

// Dense vectorization of the block quadratic over the free parameters, in
// the layout [diagonals, pairs (j<k) column-major, eta]. The diagonal
// multiplier is applied, matching what fit_regularized optimizes.
PenalizedQuadratic build_free_param_system(const BlockQuadratic& q,
                                           double lambda,
                                           double ratio_k_eta);

// The same layout for a fitted result, for parameter-level comparison.
Eigen::VectorXd vectorize_fit(const BlockQuadratic& q, const FitResult& fit);
double penalized_objective(const PenalizedQuadratic& p,
                           const Eigen::VectorXd& z);

Eigen::VectorXd fd_gradient(
    const std::function<double(const Eigen::VectorXd&)>& f,
    const Eigen::VectorXd& x, double step = 1e-6);

// Nested adaptive Gauss-Kronrod on [lox,hix] x [loy,hiy].
double quad2d(const std::function<double(double, double)>& f, double lox,
              double hix, double loy, double hiy);

struct OracleCheck {
  std::string name;
  std::string status;  // "pass" | "fail" | "skipped"
  double discrepancy = 0.0;
  std::string detail;
};

struct OracleOptions {
  std::string data_path;       // optional CSV for data-dependent checks
  double perturb_gamma = 0.0;  // fault-injection hook
  std::uint64_t seed = 12345;
};

std::vector<OracleCheck> run_oracle_suite(const OracleOptions& opts);
bool all_passed(const std::vector<OracleCheck>& checks);
std::string oracle_report(const std::vector<OracleCheck>& checks);

}  // namespace gsm
