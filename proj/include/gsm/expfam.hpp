#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "gsm/hfunc.hpp"

namespace gsm {

// Exponential family on the non-negative orthant:
//   log p_theta(x) = theta' t(x) - psi(theta) + b(x).
// Only x-derivatives of t and b enter any computation here; psi cancels.
struct ExpFamSpec {
  int r = 0;  // parameter dimension
  int m = 0;  // data dimension
  std::function<Eigen::VectorXd(const Eigen::VectorXd&, int)> t_partial;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&, int)> t_partial2;
  std::function<double(const Eigen::VectorXd&, int)> b_partial;
  std::function<double(const Eigen::VectorXd&, int)> b_partial2;
};

struct QuadraticLoss {
  Eigen::MatrixXd gamma;  // r x r, symmetric PSD
  Eigen::VectorXd g;      // r
  long n = 0;
  double diag_multiplier = 1.0;  // recorded when applied to gamma's diagonal

  std::string to_json() const;  // {r, n, gamma (row-major), g, diag_multiplier}
  static QuadraticLoss from_json(const std::string& text,
                                 const std::string& origin);
};

// Weighted score-matching loss
//   (1/n) sum_i sum_j [ h_j' d_j log p + h_j (d_jj log p + 0.5 (d_j log p)^2) ]
// with d_j log p = theta' d_j t + d_j b.
double empirical_loss(const ExpFamSpec& spec, const Eigen::VectorXd& theta,
                      const Eigen::MatrixXd& data,
                      const std::vector<HFunction>& h);

// Gamma = (1/n) sum_ij h_j d_jt d_jt';
// g = -(1/n) sum_ij [ h_j' d_jt + h_j d_jjt + h_j (d_jb) d_jt ];
// empirical_loss(theta) = 0.5 theta'Gamma theta - g'theta + const.
QuadraticLoss assemble_quadratic(const ExpFamSpec& spec,
                                 const Eigen::MatrixXd& data,
                                 const std::vector<HFunction>& h,
                                 double diag_multiplier = 1.0);

// Solves Gamma theta = g; refuses condition numbers >= 1e12 and checks the
// residual |Gamma theta - g|_inf <= 1e-8 (1 + |g|_inf).
Eigen::VectorXd closed_form_estimate(const QuadraticLoss& q);

// Plug-in sandwich Gamma^-1 Sigma Gamma^-1 with Sigma the empirical
// covariance of the per-sample score Gamma(x_i) theta - g(x_i).
Eigen::MatrixXd asymptotic_covariance(const ExpFamSpec& spec,
                                      const Eigen::MatrixXd& data,
                                      const std::vector<HFunction>& h,
                                      const Eigen::VectorXd& theta_hat);

// Upper-triangle column-major half-vectorization index of (row, col),
// row <= col: col (col+1)/2 + row.
inline int vech_index(int row, int col) { return col * (col + 1) / 2 + row; }
inline int vech_size(int m) { return m * (m + 1) / 2; }

Eigen::VectorXd sym_to_vech(const Eigen::MatrixXd& K);
Eigen::MatrixXd vech_to_sym(const Eigen::VectorXd& v, int m);

// Built-in specs.
// Centered truncated normal, theta = vech(K): r = m(m+1)/2.
ExpFamSpec centered_tn_spec(int m);
// Non-centered, theta = (vech(K), eta): r = m(m+1)/2 + m.
ExpFamSpec noncentered_tn_spec(int m);
// Univariate mean with known variance: theta = mu.
ExpFamSpec univariate_mean_spec(double sigma2);
// Univariate precision with known mean: theta = 1/sigma^2.
ExpFamSpec univariate_precision_spec(double mu);

// Broadcast a single h to all m coordinates.
std::vector<HFunction> h_vector(const HFunction& h, int m);

}  // namespace gsm
