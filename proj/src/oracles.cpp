#include "gsm/oracles.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <filesystem>

#include "gsm/expfam.hpp"
#include "gsm/io.hpp"
#include "gsm/rng.hpp"
#include "gsm/truncated_normal.hpp"

namespace gsm {

namespace {

constexpr double kGolden = 1.618034;

struct Bracket {
  double a, b, c, fa, fb, fc;
};

// standard downhill bracketing from (0, step)
Bracket bracket_minimum(const std::function<double(double)>& f) {
  double a = 0.0, b = 1.0;
  double fa = f(a), fb = f(b);
  if (fb > fa) {
    std::swap(a, b);
    std::swap(fa, fb);
  }
  double c = b + kGolden * (b - a);
  double fc = f(c);
  int guard = 0;
  while (fb > fc) {
    const double d = c + kGolden * (c - b);
    const double fd = f(d);
    a = b;
    fa = fb;
    b = c;
    fb = fc;
    c = d;
    fc = fd;
    if (++guard > 200) break;
  }
  return {a, b, c, fa, fb, fc};
}

// Brent's parabolic-interpolation line minimum on a bracket
double brent_min(const std::function<double(double)>& f, const Bracket& br,
                 double tol) {
  double a = std::min(br.a, br.c), b = std::max(br.a, br.c);
  double x = br.b, w = br.b, v = br.b;
  double fx = br.fb, fw = br.fb, fv = br.fb;
  double d = 0.0, e = 0.0;
  for (int it = 0; it < 200; ++it) {
    const double xm = 0.5 * (a + b);
    const double tol1 = tol * std::abs(x) + 1e-14;
    const double tol2 = 2.0 * tol1;
    if (std::abs(x - xm) <= tol2 - 0.5 * (b - a)) break;
    bool golden = true;
    if (std::abs(e) > tol1) {
      const double r = (x - w) * (fx - fv);
      double q = (x - v) * (fx - fw);
      double p = (x - v) * q - (x - w) * r;
      q = 2.0 * (q - r);
      if (q > 0.0) p = -p;
      q = std::abs(q);
      const double etmp = e;
      e = d;
      if (std::abs(p) < std::abs(0.5 * q * etmp) && p > q * (a - x) &&
          p < q * (b - x)) {
        d = p / q;
        const double u = x + d;
        if (u - a < tol2 || b - u < tol2) d = (xm >= x) ? tol1 : -tol1;
        golden = false;
      }
    }
    if (golden) {
      e = (x >= xm) ? a - x : b - x;
      d = 0.381966 * e;
    }
    const double u = (std::abs(d) >= tol1) ? x + d
                                           : x + ((d >= 0) ? tol1 : -tol1);
    const double fu = f(u);
    if (fu <= fx) {
      if (u >= x)
        a = x;
      else
        b = x;
      v = w;
      fv = fw;
      w = x;
      fw = fx;
      x = u;
      fx = fu;
    } else {
      if (u < x)
        a = u;
      else
        b = u;
      if (fu <= fw || w == x) {
        v = w;
        fv = fw;
        w = u;
        fw = fu;
      } else if (fu <= fv || v == x || v == w) {
        v = u;
        fv = fu;
      }
    }
  }
  return x;
}

double line_minimize(const std::function<double(const Eigen::VectorXd&)>& f,
                     Eigen::VectorXd& x, const Eigen::VectorXd& dir) {
  auto f1 = [&](double alpha) { return f(x + alpha * dir); };
  const Bracket br = bracket_minimum(f1);
  const double alpha = brent_min(f1, br, 1e-12);
  x += alpha * dir;
  return f(x);
}

}  // namespace

Eigen::VectorXd powell_minimize(
    const std::function<double(const Eigen::VectorXd&)>& f,
    const Eigen::VectorXd& x0, double tol, int max_rounds) {
  const int n = static_cast<int>(x0.size());
  Eigen::MatrixXd dirs = Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd x = x0;
  double fx = f(x);
  for (int round = 0; round < max_rounds; ++round) {
    const Eigen::VectorXd x_start = x;
    const double f_start = fx;
    int big_i = 0;
    double big_drop = 0.0;
    for (int i = 0; i < n; ++i) {
      const double f_before = fx;
      fx = line_minimize(f, x, dirs.col(i));
      if (f_before - fx > big_drop) {
        big_drop = f_before - fx;
        big_i = i;
      }
    }
    if (2.0 * (f_start - fx) <=
        tol * (std::abs(f_start) + std::abs(fx)) + 1e-300)
      break;
    // Powell's update: try the overall displacement as a new direction
    const Eigen::VectorXd disp = x - x_start;
    const Eigen::VectorXd xe = x + disp;
    const double fe = f(xe);
    if (fe < f_start) {
      const double t = 2.0 * (f_start - 2.0 * fx + fe) *
                           (f_start - fx - big_drop) * (f_start - fx - big_drop) -
                       big_drop * (f_start - fe) * (f_start - fe);
      if (t < 0.0) {
        fx = line_minimize(f, x, disp);
        dirs.col(big_i) = dirs.col(n - 1);
        dirs.col(n - 1) = disp;
      }
    }
  }
  return x;
}

Eigen::VectorXd fista(const PenalizedQuadratic& p, long max_iters,
                      double tol) {
  const Eigen::Index n = p.r.size();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(p.H,
                                                    Eigen::EigenvaluesOnly);
  const double L = std::max(es.eigenvalues().maxCoeff(), 1e-12);
  const double step = 1.0 / L;
  Eigen::VectorXd z = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd y = z;
  double tk = 1.0;
  for (long it = 0; it < max_iters; ++it) {
    const Eigen::VectorXd grad = p.H * y - p.r;
    Eigen::VectorXd znew = y - step * grad;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double th = step * p.pen[i];
      if (znew[i] > th)
        znew[i] -= th;
      else if (znew[i] < -th)
        znew[i] += th;
      else
        znew[i] = 0.0;
    }
    const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * tk * tk));
    y = znew + ((tk - 1.0) / tn) * (znew - z);
    const double chg = (znew - z).lpNorm<Eigen::Infinity>();
    z = std::move(znew);
    tk = tn;
    if (chg < tol) break;
  }
  return z;
}

PenalizedQuadratic build_free_param_system(const BlockQuadratic& q,
                                           double lambda,
                                           double ratio_k_eta) {
  const int m = q.m;
  const double lambda_eta =
      std::isinf(ratio_k_eta) ? 0.0 : lambda / ratio_k_eta;
  struct Touch {
    int block, pos;
  };
  std::vector<std::vector<Touch>> touches;
  std::vector<double> pens;
  for (int j = 0; j < m; ++j) {
    touches.push_back({{j, j}});
    pens.push_back(lambda);
  }
  for (int k = 1; k < m; ++k)
    for (int j = 0; j < k; ++j) {
      touches.push_back({{j, k}, {k, j}});
      pens.push_back(2.0 * lambda);
    }
  if (q.noncentered())
    for (int j = 0; j < m; ++j) {
      touches.push_back({{j, m}});
      pens.push_back(lambda_eta);
    }
  const int f = static_cast<int>(touches.size());
  std::vector<Eigen::MatrixXd> Bt;
  for (int j = 0; j < m; ++j) {
    Eigen::MatrixXd B = q.blocks[j];
    B.diagonal() *= q.diag_multiplier;
    Bt.push_back(std::move(B));
  }
  PenalizedQuadratic p;
  p.H = Eigen::MatrixXd::Zero(f, f);
  p.r = Eigen::VectorXd::Zero(f);
  p.pen = Eigen::Map<Eigen::VectorXd>(pens.data(), f);
  for (int a = 0; a < f; ++a) {
    for (const Touch& ta : touches[a]) p.r[a] += q.g_block(ta.block)[ta.pos];
    for (int b = 0; b < f; ++b)
      for (const Touch& ta : touches[a])
        for (const Touch& tb : touches[b])
          if (ta.block == tb.block) p.H(a, b) += Bt[ta.block](ta.pos, tb.pos);
  }
  return p;
}

Eigen::VectorXd vectorize_fit(const BlockQuadratic& q, const FitResult& fit) {
  const int m = q.m;
  std::vector<double> z;
  for (int j = 0; j < m; ++j) z.push_back(fit.K(j, j));
  for (int k = 1; k < m; ++k)
    for (int j = 0; j < k; ++j) z.push_back(fit.K(j, k));
  if (q.noncentered())
    for (int j = 0; j < m; ++j) z.push_back(fit.eta[j]);
  return Eigen::Map<Eigen::VectorXd>(z.data(), static_cast<Eigen::Index>(z.size()));
}

double penalized_objective(const PenalizedQuadratic& p,
                           const Eigen::VectorXd& z) {
  return 0.5 * z.dot(p.H * z) - p.r.dot(z) + p.pen.dot(z.cwiseAbs());
}

Eigen::VectorXd fd_gradient(
    const std::function<double(const Eigen::VectorXd&)>& f,
    const Eigen::VectorXd& x, double step) {
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd xp = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = step * std::max(1.0, std::abs(x[i]));
    xp[i] = x[i] + h;
    const double fp = f(xp);
    xp[i] = x[i] - h;
    const double fm = f(xp);
    xp[i] = x[i];
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

double quad2d(const std::function<double(double, double)>& f, double lox,
              double hix, double loy, double hiy) {
  using Quad = boost::math::quadrature::gauss_kronrod<double, 31>;
  auto outer = [&](double x) {
    auto inner = [&](double y) { return f(x, y); };
    return Quad::integrate(inner, loy, hiy, 12, 1e-12);
  };
  return Quad::integrate(outer, lox, hix, 12, 1e-12);
}

namespace {

OracleCheck make_check(const std::string& name, bool pass, double disc,
                       const std::string& detail) {
  return {name, pass ? "pass" : "fail", disc, detail};
}

Eigen::MatrixXd synthetic_data(int m, long n, std::uint64_t seed) {
  Eigen::MatrixXd K = Eigen::MatrixXd::Identity(m, m);
  for (int j = 0; j + 1 < m; ++j) K(j, j + 1) = K(j + 1, j) = 0.3;
  const TNParams p = TNParams::centered_K(K);
  return sample(p, n, seed).x;
}

}  // namespace

std::vector<OracleCheck> run_oracle_suite(const OracleOptions& opts) {
  std::vector<OracleCheck> out;

  // 1. generic minimizer vs closed form on the vectorized loss
  {
    const int m = 3;
    const Eigen::MatrixXd data = synthetic_data(m, 200, opts.seed);
    const ExpFamSpec spec = centered_tn_spec(m);
    const auto hs = h_vector(HFunction::trunc_power(1.0, 3.0), m);
    QuadraticLoss q = assemble_quadratic(spec, data, hs);
    if (opts.perturb_gamma != 0.0)
      q.gamma(0, 0) *= 1.0 + opts.perturb_gamma;
    const Eigen::VectorXd closed = closed_form_estimate(q);
    auto loss = [&](const Eigen::VectorXd& th) {
      return empirical_loss(spec, th, data, hs);
    };
    const Eigen::VectorXd x0 = sym_to_vech(Eigen::MatrixXd::Identity(m, m));
    const Eigen::VectorXd mini = powell_minimize(loss, x0);
    const double disc = (closed - mini).lpNorm<Eigen::Infinity>();
    out.push_back(make_check("closed_form_vs_powell", disc <= 1e-4, disc,
                             "l_inf distance, tolerance 1e-4"));
  }

  // 2. analytic gradient of the quadratic vs finite differences of the loss
  {
    const int m = 2;
    const Eigen::MatrixXd data = synthetic_data(m, 120, opts.seed + 1);
    const ExpFamSpec spec = centered_tn_spec(m);
    const auto hs = h_vector(HFunction::power(2.0), m);
    const QuadraticLoss q = assemble_quadratic(spec, data, hs);
    Eigen::VectorXd th(vech_size(m));
    th << 1.1, -0.2, 0.9;
    auto loss = [&](const Eigen::VectorXd& v) {
      return empirical_loss(spec, v, data, hs);
    };
    const Eigen::VectorXd analytic = q.gamma * th - q.g;
    const Eigen::VectorXd fd = fd_gradient(loss, th);
    const double disc = (analytic - fd).lpNorm<Eigen::Infinity>() /
                        (1.0 + analytic.lpNorm<Eigen::Infinity>());
    out.push_back(make_check("fd_gradient_vs_analytic", disc <= 1e-6, disc,
                             "relative l_inf, tolerance 1e-6"));
  }

  // 3. quadrature moment vs Monte Carlo
  {
    Eigen::MatrixXd K(1, 1);
    K << 1.0;
    Eigen::VectorXd mu(1);
    mu << 0.5;
    const TNParams p = TNParams::from_mu(K, mu);
    const long n = 200000;
    const Eigen::MatrixXd x = sample(p, n, opts.seed + 2).x;
    const double mc = x.col(0).array().square().mean();
    const double mc_sd = std::sqrt(
        (x.col(0).array().square() - mc).square().sum() / (n - 1.0) / n);
    using Quad = boost::math::quadrature::gauss_kronrod<double, 61>;
    auto dens = [&](double t) { return std::exp(-0.5 * (t - 0.5) * (t - 0.5)); };
    auto num = [&](double t) { return t * t * dens(t); };
    const double z = Quad::integrate(dens, 0.0, 14.0, 15, 1e-12);
    const double quad = Quad::integrate(num, 0.0, 14.0, 15, 1e-12) / z;
    const double disc = std::abs(quad - mc);
    const double tol = 5.0 * mc_sd + 1e-6;
    out.push_back(make_check("quadrature_vs_mc", disc <= tol, disc,
                             "tolerance 5 standard errors"));
  }

  // 4. penalized coordinate descent vs proximal gradient
  {
    const int m = 4;
    const Eigen::MatrixXd data = synthetic_data(m, 150, opts.seed + 3);
    const auto hs = h_vector(HFunction::trunc_power(1.0, 3.0), m);
    const BlockQuadratic q = assemble_centered(data, hs);
    const double lambda = 0.05;
    const FitResult fit = fit_regularized(q, lambda);
    const PenalizedQuadratic p = build_free_param_system(
        q, lambda, std::numeric_limits<double>::infinity());
    const Eigen::VectorXd zf = fista(p);
    const double obj_cd = penalized_objective(p, vectorize_fit(q, fit));
    const double obj_f = penalized_objective(p, zf);
    const double disc = std::abs(obj_cd - obj_f);
    out.push_back(make_check("cd_vs_fista_objective", disc <= 1e-6, disc,
                             "objective gap, tolerance 1e-6"));
  }

  // data-dependent checks
  {
    bool have_data = false;
    Eigen::MatrixXd data;
    std::string why = "no --data given";
    if (!opts.data_path.empty()) {
      try {
        data = read_csv_matrix(opts.data_path);
        have_data = data.rows() > 0;
        if (!have_data) why = "data file has no rows: " + opts.data_path;
      } catch (const std::exception& e) {
        why = e.what();
      }
    }
    if (!have_data) {
      out.push_back({"data_fit_kkt", "skipped", 0.0, why});
    } else {
      try {
        const int m = static_cast<int>(data.cols());
        const auto hs = h_vector(HFunction::trunc_power(1.0, 3.0), m);
        const BlockQuadratic q = assemble_centered(data, hs);
        const FitResult fit = fit_regularized(q, 0.1);
        out.push_back(make_check("data_fit_kkt", fit.kkt_residual <= 1e-8,
                                 fit.kkt_residual,
                                 "stationarity residual at lambda=0.1"));
      } catch (const std::exception& e) {
        out.push_back({"data_fit_kkt", "fail", 0.0, e.what()});
      }
    }
  }

  return out;
}

bool all_passed(const std::vector<OracleCheck>& checks) {
  for (const auto& c : checks)
    if (c.status == "fail") return false;
  return true;
}

std::string oracle_report(const std::vector<OracleCheck>& checks) {
  std::string s;
  for (const auto& c : checks) {
    s += '[';
    s += c.status == "pass" ? "PASS" : (c.status == "fail" ? "FAIL" : "SKIP");
    s += "] ";
    s += c.name;
    s += " discrepancy=";
    s += format_double(c.discrepancy);
    s += " (";
    s += c.detail;
    s += ")\n";
  }
  return s;
}

}  // namespace gsm
