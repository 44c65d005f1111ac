#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "gsm/errors.hpp"
#include "gsm/hfunc.hpp"

namespace gsm {

// Block representation of the quadratic loss for the truncated Gaussian
// graphical model. Row j of the parameter matrix couples only with block j:
//   loss = sum_j [ 0.5 xi_j' B_j xi_j - g_j' xi_j ] + const,
// with xi_j = (row j of K) when centered and (row j of K, eta_j) otherwise.
// Blocks are stored raw; diag_multiplier records what solvers apply to the
// block diagonals to enforce strict convexity.
struct BlockQuadratic {
  int m = 0;
  int q = 0;  // m (centered) or m + 1 (non-centered)
  std::vector<Eigen::MatrixXd> blocks;
  Eigen::VectorXd g;  // length m*q; segment(j*q, q) pairs with xi_j
  long n = 0;
  double diag_multiplier = 1.01;

  bool noncentered() const { return q == m + 1; }
  Eigen::Ref<const Eigen::VectorXd> g_block(int j) const {
    return g.segment(static_cast<Eigen::Index>(j) * q, q);
  }
};

// block j = (1/n) sum_i h_j(X_j) x x'; g_j[k] = u_jk + 1{k=j} V_j with
// u_jk = (1/n) sum_i h_j'(X_j) X_k and V_j = (1/n) sum_i h_j(X_j).
BlockQuadratic assemble_centered(const Eigen::MatrixXd& data,
                                 const std::vector<HFunction>& h,
                                 double diag_multiplier = 1.01);

// Augmented sample w = (x, -1); block j = (1/n) sum_i h_j(X_j) w w';
// g_j[k] as centered for k < m, g_j[m] = -(1/n) sum_i h_j'(X_j).
BlockQuadratic assemble_noncentered(const Eigen::MatrixXd& data,
                                    const std::vector<HFunction>& h,
                                    double diag_multiplier = 1.01);

struct FitOptions {
  double tol = 1e-8;       // sweep max coordinate change
  double kkt_tol = 1e-8;   // per-entry stationarity violation
  long max_sweeps = 10000;
  // lambda_eta = lambda / ratio_k_eta; infinity means eta unpenalized
  double ratio_k_eta = std::numeric_limits<double>::infinity();
};

struct FitResult {
  Eigen::MatrixXd K;   // exactly symmetric
  Eigen::VectorXd eta; // empty when centered
  double lambda = 0.0;
  double lambda_eta = 0.0;
  std::vector<std::pair<int, int>> support;  // off-diagonal nonzeros, i < j
  double objective = 0.0;
  double kkt_residual = 0.0;
  long sweeps = 0;

  std::string to_json() const;  // {m, K row-major, eta?, lambda, support 1-based, ...}
};

class ConvergenceError : public NumericError {
 public:
  FitResult last;
  ConvergenceError(const std::string& msg, FitResult last_iterate)
      : NumericError(msg), last(std::move(last_iterate)) {}
};

// l1-penalized symmetric coordinate descent:
//   min over symmetric K (and eta): loss + lambda |K|_1 + lambda_eta |eta|_1
// where |K|_1 sums all entries including the diagonal. Off-diagonal pairs
// (j,k),(k,j) move jointly. Throws ConvergenceError past max_sweeps.
FitResult fit_regularized(const BlockQuadratic& q, double lambda,
                          const FitOptions& opts = {});

// Smallest lambda whose fit has empty off-diagonal support.
double lambda_max(const BlockQuadratic& q, const FitOptions& opts = {});

struct PathOptions {
  FitOptions fit;
  int lambda_count = 50;    // auto grid: lambda_max down to 0.01 lambda_max
  std::vector<double> grid; // overrides the auto grid when non-empty
  bool screening = true;    // strong-rule discard + KKT verification
  bool ebic_refit = true;   // also compute refit-based eBIC
};

struct PathResult {
  std::vector<double> lambdas;
  std::vector<FitResult> fits;
  std::vector<double> ebic_raw;
  std::vector<double> ebic_refit;   // empty when ebic_refit off
  std::vector<FitResult> refits;    // matching ebic_refit
  int selected_raw = -1;            // argmin of ebic_raw
  int selected_refit = -1;

  std::string to_json() const;
  std::string to_csv() const;  // lambda,df,ebic_raw,ebic_refit
};

PathResult solution_path(const BlockQuadratic& q, const PathOptions& opts = {});

// Extended BIC at the fitted (or support-refitted) estimate, evaluated on the
// raw quadratic (no diagonal multiplier):
//   n v'Gv - 2n g'v + |S| log n + 2 log C(m(m-1)/2, |S|),
// |S| counting upper-triangle off-diagonal edges.
double ebic(const BlockQuadratic& q, const FitResult& fit, bool refit);

// Unpenalized symmetric fit restricted to S (plus all diagonals and eta).
FitResult refit_support(const BlockQuadratic& q,
                        const std::vector<std::pair<int, int>>& S);

struct TheoryDiagnostics {
  double alpha_irrep = 0.0;  // 1 - |G_{Sc,S} G_{S,S}^-1|_inf,inf
  double c_gamma0 = 0.0;     // |(G_{S,S})^-1|_inf,inf
  double c_k0 = 0.0;         // max absolute row sum of K0
  int d_k0 = 0;              // max row cardinality of S(K0), diagonal included
  double c_x = 0.0;          // 2 max_j (2 sqrt((K0^-1)_jj) + sqrt(e) E[X_j])
  std::vector<std::pair<int, int>> s0;  // edges of K0, i < j

  std::string to_json() const;
};

// Monte Carlo estimate of the population-level support-recovery constants.
TheoryDiagnostics diagnostics(const Eigen::MatrixXd& K0,
                              const Eigen::VectorXd& mu0, const HFunction& h,
                              long mc_n, std::uint64_t seed);

struct ColumnScaling {
  Eigen::VectorXd s;  // s_j = |col_j|_2 / sqrt(n)
};

std::pair<Eigen::MatrixXd, ColumnScaling> scale_columns(
    const Eigen::MatrixXd& data);

// Maps a fit on scaled data back to original units:
// K_jk / (s_j s_k), eta_j / s_j.
FitResult unscale_fit(const FitResult& fit, const ColumnScaling& sc);

}  // namespace gsm
