#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace gsm {

// Multivariate normal restricted to the non-negative orthant,
// density proportional to exp(-0.5 (x-mu)' K (x-mu)) on x >= 0.
struct TNParams {
  int m = 1;
  Eigen::MatrixXd K;   // symmetric positive definite
  Eigen::VectorXd mu;  // mean-form parameter; eta = K mu
  bool centered = true;

  static TNParams from_mu(const Eigen::MatrixXd& K, const Eigen::VectorXd& mu);
  static TNParams from_eta(const Eigen::MatrixXd& K, const Eigen::VectorXd& eta);
  static TNParams centered_K(const Eigen::MatrixXd& K);
  static TNParams identity(int m);

  Eigen::VectorXd eta() const { return K * mu; }
  void validate() const;  // symmetry within 1e-12, eigenvalues > 1e-10

  std::string to_json() const;  // {m, K (row-major), mu, eta, centered}
  static TNParams from_json(const std::string& text, const std::string& origin);
};

// -0.5 (x-mu)' K (x-mu); negative coordinate is a domain error.
double log_density_unnormalized(const TNParams& p, const Eigen::VectorXd& x);

// (grad log p, diagonal of hessian of log p) = (-K(x-mu), -diag(K)).
std::pair<Eigen::VectorXd, Eigen::VectorXd> grad_and_diag_hessian(
    const TNParams& p, const Eigen::VectorXd& x);

enum class SampleMethod { Auto, Rejection, Gibbs };

SampleMethod parse_sample_method(const std::string& name);

struct SampleOptions {
  SampleMethod method = SampleMethod::Auto;
  int burn_in = 100;
  int thinning = 10;
};

struct SampleResult {
  Eigen::MatrixXd x;  // n rows, m columns, all entries >= 0
  std::string method_used;
  std::vector<std::string> warnings;
};

// Deterministic given (p, n, seed, options). Rejection aborts when the probe
// acceptance rate drops below 1e-4; Gibbs warns that draws are approximate.
SampleResult sample(const TNParams& p, long n, std::uint64_t seed,
                    const SampleOptions& opts = {});

// One draw of Z ~ N(mean, sd^2) conditioned on Z >= 0, inverse-CDF method
// with stable tail handling; u in (0,1).
double truncated_normal_draw(double mean, double sd, double u);

}  // namespace gsm
