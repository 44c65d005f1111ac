#include "gsm/expfam.hpp"

#include <cmath>
#include <nlohmann/json.hpp>

#include "gsm/errors.hpp"

namespace gsm {

namespace {

void check_inputs(const ExpFamSpec& spec, const Eigen::MatrixXd& data,
                  const std::vector<HFunction>& h) {
  if (spec.r <= 0 || spec.m <= 0) throw DomainError("spec dimensions must be positive");
  if (data.cols() != spec.m)
    throw DomainError("data has " + std::to_string(data.cols()) +
                      " columns, spec expects " + std::to_string(spec.m));
  if (data.rows() < 1) throw DomainError("data must have at least one row");
  if (static_cast<int>(h.size()) != spec.m)
    throw DomainError("need one h per coordinate (" + std::to_string(spec.m) + ")");
  if (data.minCoeff() < 0.0)
    throw DomainError("data contains negative entries; domain is the "
                      "non-negative orthant");
}

void check_finite(double v, long i, int j, const char* what) {
  if (!std::isfinite(v))
    throw NumericError(std::string("non-finite ") + what + " at sample " +
                       std::to_string(i + 1) + ", coordinate " +
                       std::to_string(j + 1));
}

}  // namespace

std::string QuadraticLoss::to_json() const {
  nlohmann::ordered_json j;
  const int r = static_cast<int>(gamma.rows());
  j["r"] = r;
  j["n"] = n;
  std::vector<double> flat(static_cast<size_t>(r) * r);
  for (int a = 0; a < r; ++a)
    for (int b = 0; b < r; ++b) flat[static_cast<size_t>(a) * r + b] = gamma(a, b);
  j["gamma"] = flat;
  j["g"] = std::vector<double>(g.data(), g.data() + r);
  j["diag_multiplier"] = diag_multiplier;
  return j.dump(2) + "\n";
}

QuadraticLoss QuadraticLoss::from_json(const std::string& text,
                                       const std::string& origin) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const std::exception& e) {
    throw DomainError("invalid JSON in " + origin + ": " + e.what());
  }
  QuadraticLoss q;
  const int r = j.at("r").get<int>();
  q.n = j.at("n").get<long>();
  auto flat = j.at("gamma").get<std::vector<double>>();
  auto gv = j.at("g").get<std::vector<double>>();
  if (flat.size() != static_cast<size_t>(r) * r || gv.size() != static_cast<size_t>(r))
    throw DomainError(origin + ": gamma/g sizes inconsistent with r");
  q.gamma.resize(r, r);
  for (int a = 0; a < r; ++a)
    for (int b = 0; b < r; ++b) q.gamma(a, b) = flat[static_cast<size_t>(a) * r + b];
  q.g = Eigen::Map<Eigen::VectorXd>(gv.data(), r);
  q.diag_multiplier = j.value("diag_multiplier", 1.0);
  return q;
}

double empirical_loss(const ExpFamSpec& spec, const Eigen::VectorXd& theta,
                      const Eigen::MatrixXd& data,
                      const std::vector<HFunction>& h) {
  check_inputs(spec, data, h);
  if (theta.size() != spec.r) throw DomainError("theta must have length r");
  const long n = data.rows();
  double total = 0.0;
  for (long i = 0; i < n; ++i) {
    const Eigen::VectorXd x = data.row(i).transpose();
    for (int j = 0; j < spec.m; ++j) {
      const HEval he = h[j].eval(x[j]);
      const Eigen::VectorXd tj = spec.t_partial(x, j);
      const Eigen::VectorXd tjj = spec.t_partial2(x, j);
      const double bj = spec.b_partial(x, j);
      const double bjj = spec.b_partial2(x, j);
      const double dj = theta.dot(tj) + bj;    // d_j log p
      const double djj = theta.dot(tjj) + bjj; // d_jj log p
      const double term = he.deriv * dj + he.value * (djj + 0.5 * dj * dj);
      check_finite(term, i, j, "loss term");
      total += term;
    }
  }
  return total / static_cast<double>(n);
}

QuadraticLoss assemble_quadratic(const ExpFamSpec& spec,
                                 const Eigen::MatrixXd& data,
                                 const std::vector<HFunction>& h,
                                 double diag_multiplier) {
  check_inputs(spec, data, h);
  if (diag_multiplier < 1.0)
    throw DomainError("diag_multiplier must be >= 1");
  const long n = data.rows();
  const int r = spec.r;
  QuadraticLoss q;
  q.gamma = Eigen::MatrixXd::Zero(r, r);
  q.g = Eigen::VectorXd::Zero(r);
  q.n = n;
  q.diag_multiplier = diag_multiplier;
  for (long i = 0; i < n; ++i) {
    const Eigen::VectorXd x = data.row(i).transpose();
    for (int j = 0; j < spec.m; ++j) {
      const HEval he = h[j].eval(x[j]);
      const Eigen::VectorXd tj = spec.t_partial(x, j);
      const Eigen::VectorXd tjj = spec.t_partial2(x, j);
      const double bj = spec.b_partial(x, j);
      const double bjj = spec.b_partial2(x, j);
      check_finite(he.value, i, j, "h value");
      check_finite(he.deriv, i, j, "h derivative");
      for (int a = 0; a < r; ++a) {
        check_finite(tj[a], i, j, "t partial");
        check_finite(tjj[a], i, j, "t second partial");
      }
      check_finite(bj, i, j, "b partial");
      check_finite(bjj, i, j, "b second partial");
      q.gamma.selfadjointView<Eigen::Lower>().rankUpdate(tj, he.value);
      q.g -= he.deriv * tj + he.value * tjj + he.value * bj * tj;
    }
  }
  q.gamma = Eigen::MatrixXd(q.gamma.selfadjointView<Eigen::Lower>());
  q.gamma /= static_cast<double>(n);
  q.g /= static_cast<double>(n);
  if (diag_multiplier != 1.0)
    q.gamma.diagonal() *= diag_multiplier;
  return q;
}

Eigen::VectorXd closed_form_estimate(const QuadraticLoss& q) {
  const Eigen::MatrixXd& G = q.gamma;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (lo <= 0.0 || hi / lo >= 1e12)
    throw NumericError(
        "Gamma is singular or ill-conditioned (min eig " + std::to_string(lo) +
        ", cond " + std::to_string(lo > 0 ? hi / lo : INFINITY) +
        "); increase the sample size or raise diag_multiplier");
  Eigen::LDLT<Eigen::MatrixXd> ldlt(G);
  Eigen::VectorXd theta = ldlt.solve(q.g);
  // one step of iterative refinement to meet the residual contract
  theta += ldlt.solve(q.g - G * theta);
  const double resid = (G * theta - q.g).lpNorm<Eigen::Infinity>();
  if (resid > 1e-8 * (1.0 + q.g.lpNorm<Eigen::Infinity>()))
    throw NumericError("linear solve residual " + std::to_string(resid) +
                       " exceeds tolerance; Gamma is numerically degenerate");
  return theta;
}

Eigen::MatrixXd asymptotic_covariance(const ExpFamSpec& spec,
                                      const Eigen::MatrixXd& data,
                                      const std::vector<HFunction>& h,
                                      const Eigen::VectorXd& theta_hat) {
  check_inputs(spec, data, h);
  const long n = data.rows();
  const int r = spec.r;
  // per-sample score Gamma(x_i) theta - g(x_i)
  Eigen::MatrixXd scores(n, r);
  for (long i = 0; i < n; ++i) {
    const Eigen::VectorXd x = data.row(i).transpose();
    Eigen::VectorXd s = Eigen::VectorXd::Zero(r);
    for (int j = 0; j < spec.m; ++j) {
      const HEval he = h[j].eval(x[j]);
      const Eigen::VectorXd tj = spec.t_partial(x, j);
      const Eigen::VectorXd tjj = spec.t_partial2(x, j);
      const double bj = spec.b_partial(x, j);
      s += he.value * tj.dot(theta_hat) * tj;
      s += he.deriv * tj + he.value * tjj + he.value * bj * tj;
    }
    scores.row(i) = s.transpose();
  }
  const Eigen::RowVectorXd mean = scores.colwise().mean();
  scores.rowwise() -= mean;
  const Eigen::MatrixXd sigma = scores.transpose() * scores / static_cast<double>(n);
  QuadraticLoss q = assemble_quadratic(spec, data, h, 1.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(q.gamma, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (lo <= 0.0 || hi / lo >= 1e12)
    throw NumericError("Gamma is singular or ill-conditioned; increase the "
                       "sample size or raise diag_multiplier");
  Eigen::LDLT<Eigen::MatrixXd> ldlt(q.gamma);
  return ldlt.solve(ldlt.solve(sigma).transpose());
}

Eigen::VectorXd sym_to_vech(const Eigen::MatrixXd& K) {
  const int m = static_cast<int>(K.rows());
  Eigen::VectorXd v(vech_size(m));
  for (int c = 0; c < m; ++c)
    for (int r = 0; r <= c; ++r) v[vech_index(r, c)] = K(r, c);
  return v;
}

Eigen::MatrixXd vech_to_sym(const Eigen::VectorXd& v, int m) {
  Eigen::MatrixXd K(m, m);
  for (int c = 0; c < m; ++c)
    for (int r = 0; r <= c; ++r) K(r, c) = K(c, r) = v[vech_index(r, c)];
  return K;
}

ExpFamSpec centered_tn_spec(int m) {
  // log p = -0.5 x'Kx = sum_{r<c} K_rc (-x_r x_c) + sum_d K_dd (-x_d^2/2)
  ExpFamSpec s;
  s.m = m;
  s.r = vech_size(m);
  s.t_partial = [m](const Eigen::VectorXd& x, int j) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(vech_size(m));
    for (int k = 0; k < m; ++k) {
      if (k == j) continue;
      v[vech_index(std::min(j, k), std::max(j, k))] = -x[k];
    }
    v[vech_index(j, j)] = -x[j];
    return v;
  };
  s.t_partial2 = [m](const Eigen::VectorXd&, int j) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(vech_size(m));
    v[vech_index(j, j)] = -1.0;
    return v;
  };
  s.b_partial = [](const Eigen::VectorXd&, int) { return 0.0; };
  s.b_partial2 = [](const Eigen::VectorXd&, int) { return 0.0; };
  return s;
}

ExpFamSpec noncentered_tn_spec(int m) {
  // log p = -0.5 x'Kx + eta'x; theta = (vech(K), eta)
  ExpFamSpec s = centered_tn_spec(m);
  const int rk = s.r;
  s.r = rk + m;
  auto tp = s.t_partial;
  s.t_partial = [m, rk, tp](const Eigen::VectorXd& x, int j) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(rk + m);
    v.head(rk) = tp(x, j);
    v[rk + j] = 1.0;
    return v;
  };
  auto tp2 = s.t_partial2;
  s.t_partial2 = [m, rk, tp2](const Eigen::VectorXd& x, int j) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(rk + m);
    v.head(rk) = tp2(x, j);
    return v;
  };
  return s;
}

ExpFamSpec univariate_mean_spec(double sigma2) {
  if (!(sigma2 > 0.0)) throw DomainError("sigma2 must be positive");
  // log p = -(x-mu)^2/(2 sigma2): t(x) = x/sigma2, b(x) = -x^2/(2 sigma2)
  ExpFamSpec s;
  s.m = 1;
  s.r = 1;
  s.t_partial = [sigma2](const Eigen::VectorXd&, int) {
    return Eigen::VectorXd::Constant(1, 1.0 / sigma2);
  };
  s.t_partial2 = [](const Eigen::VectorXd&, int) {
    return Eigen::VectorXd::Zero(1);
  };
  s.b_partial = [sigma2](const Eigen::VectorXd& x, int) { return -x[0] / sigma2; };
  s.b_partial2 = [sigma2](const Eigen::VectorXd&, int) { return -1.0 / sigma2; };
  return s;
}

ExpFamSpec univariate_precision_spec(double mu) {
  // log p = -kappa (x-mu)^2/2: t(x) = -(x-mu)^2/2, b = 0
  ExpFamSpec s;
  s.m = 1;
  s.r = 1;
  s.t_partial = [mu](const Eigen::VectorXd& x, int) {
    return Eigen::VectorXd::Constant(1, -(x[0] - mu));
  };
  s.t_partial2 = [](const Eigen::VectorXd&, int) {
    return Eigen::VectorXd::Constant(1, -1.0);
  };
  s.b_partial = [](const Eigen::VectorXd&, int) { return 0.0; };
  s.b_partial2 = [](const Eigen::VectorXd&, int) { return 0.0; };
  return s;
}

std::vector<HFunction> h_vector(const HFunction& h, int m) {
  return std::vector<HFunction>(static_cast<size_t>(m), h);
}

}  // namespace gsm
