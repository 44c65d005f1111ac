#include "gsm/univariate.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>

#include "gsm/errors.hpp"
#include "gsm/io.hpp"

namespace gsm {

namespace {

void check_data(const Eigen::VectorXd& data) {
  if (data.size() < 1) throw DomainError("data must be non-empty");
  if (data.minCoeff() < 0.0)
    throw DomainError("data contains negative entries");
}

using Quad = boost::math::quadrature::gauss_kronrod<double, 61>;

// Integrates piecewise between the split points so each piece is smooth.
double integrate(const std::function<double(double)>& f, double lo, double hi,
                 const std::vector<double>& splits = {}) {
  std::vector<double> edges = {lo};
  for (double s : splits)
    if (s > lo && s < hi) edges.push_back(s);
  edges.push_back(hi);
  std::sort(edges.begin(), edges.end());
  double v = 0.0, err = 0.0;
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    double e = 0.0;
    v += Quad::integrate(f, edges[i], edges[i + 1], 20, 1e-12, &e);
    err += e;
  }
  if (!std::isfinite(v))
    throw NumericError("quadrature produced a non-finite value");
  if (err > 1e-9 * (1.0 + std::abs(v)))
    throw NumericError("quadrature did not converge (error estimate " +
                       format_double(err) + ")");
  return v;
}

}  // namespace

double mu_hat(const UnivariateTask& task, const Eigen::VectorXd& data) {
  if (task.target != UnivariateTask::Target::Mu)
    throw DomainError("task target must be mu");
  if (!(task.known > 0.0)) throw DomainError("known sigma2 must be positive");
  check_data(data);
  double num = 0.0, den = 0.0;
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    const HEval he = task.h.eval(data[i]);
    num += he.value * data[i] - task.known * he.deriv;
    den += he.value;
  }
  if (!(den > 0.0))
    throw NumericError("degenerate sample: sum of h(X_i) is not positive");
  return num / den;
}

double sigma2_hat(const UnivariateTask& task, const Eigen::VectorXd& data) {
  if (task.target != UnivariateTask::Target::Sigma2)
    throw DomainError("task target must be sigma2");
  check_data(data);
  const double mu = task.known;
  double num = 0.0, den = 0.0;
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    const HEval he = task.h.eval(data[i]);
    num += he.value * (data[i] - mu) * (data[i] - mu);
    den += he.value + he.deriv * (data[i] - mu);
  }
  if (!(den > 0.0))
    throw NumericError("degenerate sample: estimator denominator is not positive");
  return num / den;
}

double tn_expectation(double mu, double sigma2,
                      const std::function<double(double)>& f,
                      double bound_scale, const std::vector<double>& splits) {
  if (!(sigma2 > 0.0)) throw DomainError("sigma2 must be positive");
  const double sigma = std::sqrt(sigma2);
  const double upper = bound_scale * std::max(mu + 12.0 * sigma, sigma);
  auto dens = [&](double x) {
    const double z = (x - mu) / sigma;
    return std::exp(-0.5 * z * z);
  };
  const double z0 = integrate(dens, 0.0, upper);
  if (!(z0 > 0.0)) throw NumericError("truncated-normal mass is numerically zero");
  const double num =
      integrate([&](double x) { return f(x) * dens(x); }, 0.0, upper, splits);
  return num / z0;
}

double asym_var(const UnivariateTask& task, double theta0) {
  const HFunction& h = task.h;
  const std::vector<double> splits = h.kinks();
  if (task.target == UnivariateTask::Target::Mu) {
    const double s2 = task.known;
    const double mu0 = theta0;
    const double eh = tn_expectation(
        mu0, s2, [&](double x) { return h.eval(x).value; }, 1.0, splits);
    const double eh2 = tn_expectation(
        mu0, s2,
        [&](double x) {
          const double v = h.eval(x).value;
          return v * v;
        },
        1.0, splits);
    const double ehp2 = tn_expectation(
        mu0, s2,
        [&](double x) {
          const double d = h.eval(x).deriv;
          return d * d;
        },
        1.0, splits);
    if (!(eh > 0.0)) throw NumericError("E[h] vanishes; asymptotic variance undefined");
    return (s2 * eh2 + s2 * s2 * ehp2) / (eh * eh);
  }
  const double mu = task.known;
  const double s2 = theta0;
  if (!(s2 > 0.0)) throw DomainError("sigma2 must be positive");
  auto w = [&](double x) { return (x - mu) * (x - mu); };
  const double ehw = tn_expectation(
      mu, s2, [&](double x) { return h.eval(x).value * w(x); }, 1.0, splits);
  const double eh2w = tn_expectation(
      mu, s2,
      [&](double x) {
        const double v = h.eval(x).value;
        return v * v * w(x);
      },
      1.0, splits);
  const double ehp2w = tn_expectation(
      mu, s2,
      [&](double x) {
        const double d = h.eval(x).deriv;
        return d * d * w(x);
      },
      1.0, splits);
  if (!(ehw > 0.0))
    throw NumericError("E[h (X-mu)^2] vanishes; asymptotic variance undefined");
  const double s6 = s2 * s2 * s2;
  return (2.0 * s6 * eh2w + s6 * s2 * ehp2w) / (ehw * ehw);
}

double cr_bound(const UnivariateTask& task, double theta0) {
  if (task.target == UnivariateTask::Target::Mu) {
    const double s2 = task.known;
    const double mu0 = theta0;
    // score in mu: (x-mu)/s2 minus its mean; information = variance
    auto s = [&](double x) { return (x - mu0) / s2; };
    const double es = tn_expectation(mu0, s2, s);
    const double es2 = tn_expectation(mu0, s2, [&](double x) {
      const double v = s(x);
      return v * v;
    });
    const double info = es2 - es * es;
    if (!(info > 0.0)) throw NumericError("Fisher information is not positive");
    return 1.0 / info;
  }
  const double mu = task.known;
  const double s2 = theta0;
  auto s = [&](double x) { return (x - mu) * (x - mu) / (2.0 * s2 * s2); };
  const double es = tn_expectation(mu, s2, s);
  const double es2 = tn_expectation(mu, s2, [&](double x) {
    const double v = s(x);
    return v * v;
  });
  const double info = es2 - es * es;
  if (!(info > 0.0)) throw NumericError("Fisher information is not positive");
  return 1.0 / info;
}

std::vector<EfficiencyPoint> efficiency_curve(UnivariateTask::Target target,
                                              double known,
                                              const std::vector<double>& grid,
                                              const std::vector<HFunction>& hs) {
  std::vector<EfficiencyPoint> out;
  out.reserve(grid.size() * hs.size());
  for (double theta0 : grid) {
    UnivariateTask task;
    task.target = target;
    task.known = known;
    const double cr = [&] {
      task.h = HFunction::power(1.0);
      return cr_bound(task, theta0);
    }();
    for (const auto& h : hs) {
      task.h = h;
      const double av = asym_var(task, theta0);
      out.push_back({theta0, h.id(), av, cr, cr / av});
    }
  }
  return out;
}

std::string efficiency_csv(const std::vector<EfficiencyPoint>& points) {
  std::string out = "theta0,h_id,asym_var,cr_bound,efficiency\n";
  for (const auto& p : points) {
    out += format_double(p.theta0);
    out += ',';
    out += p.h_id;
    out += ',';
    out += format_double(p.asym_var);
    out += ',';
    out += format_double(p.cr_bound);
    out += ',';
    out += format_double(p.efficiency);
    out += '\n';
  }
  return out;
}

}  // namespace gsm
