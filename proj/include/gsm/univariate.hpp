#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "gsm/hfunc.hpp"

namespace gsm {

// Closed-form estimators for the univariate truncated Gaussian:
// one unknown parameter, the other known.
struct UnivariateTask {
  enum class Target { Mu, Sigma2 };
  Target target = Target::Mu;
  double known = 1.0;  // sigma^2 when target=Mu, mu when target=Sigma2
  HFunction h = HFunction::power(1.0);
};

// [sum h(X_i) X_i - sigma^2 h'(X_i)] / sum h(X_i)
double mu_hat(const UnivariateTask& task, const Eigen::VectorXd& data);

// sum h(X_i)(X_i-mu)^2 / sum [h(X_i) + h'(X_i)(X_i-mu)]
double sigma2_hat(const UnivariateTask& task, const Eigen::VectorXd& data);

// E over the truncated normal TN(mu, sigma^2) on [0, inf) by adaptive
// quadrature on [0, max(mu + 12 sigma, sigma)], tolerance 1e-10. The
// integration range is split at `splits` (kinks of the integrand).
double tn_expectation(double mu, double sigma2,
                      const std::function<double(double)>& f,
                      double bound_scale = 1.0,
                      const std::vector<double>& splits = {});

// Asymptotic variance of sqrt(n) (estimate - theta0):
//   mu:     (s2 E[h^2] + s4 E[h'^2]) / E[h]^2         at mu0 = theta0
//   sigma2: (2 s6 E[h^2 (X-mu)^2] + s8 E[h'^2 (X-mu)^2]) / E[h (X-mu)^2]^2
double asym_var(const UnivariateTask& task, double theta0);

// Inverse Fisher information of the truncated model, by quadrature.
double cr_bound(const UnivariateTask& task, double theta0);

struct EfficiencyPoint {
  double theta0;
  std::string h_id;
  double asym_var;
  double cr_bound;
  double efficiency;  // cr / asym_var, in (0, 1 + 1e-9]
};

std::vector<EfficiencyPoint> efficiency_curve(UnivariateTask::Target target,
                                              double known,
                                              const std::vector<double>& grid,
                                              const std::vector<HFunction>& hs);

// CSV: theta0,h_id,asym_var,cr_bound,efficiency
std::string efficiency_csv(const std::vector<EfficiencyPoint>& points);

}  // namespace gsm
