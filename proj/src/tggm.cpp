#include "gsm/tggm.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>

#include "gsm/expfam.hpp"
#include "gsm/io.hpp"
#include "gsm/truncated_normal.hpp"

namespace gsm {

namespace {

int pair_index(int j, int k) { return k * (k - 1) / 2 + j; }  // j < k

double soft_threshold(double z, double t) {
  if (z > t) return z - t;
  if (z < -t) return z + t;
  return 0.0;
}

double lchoose(long n, long k) {
  if (k < 0 || k > n) throw DomainError("binomial out of range");
  return std::lgamma(static_cast<double>(n) + 1.0) -
         std::lgamma(static_cast<double>(k) + 1.0) -
         std::lgamma(static_cast<double>(n - k) + 1.0);
}

void check_assembly_inputs(const Eigen::MatrixXd& data,
                           const std::vector<HFunction>& h,
                           double diag_multiplier) {
  if (data.rows() < 1) throw DomainError("data must have at least one row");
  if (data.cols() < 1) throw DomainError("data must have at least one column");
  if (static_cast<Eigen::Index>(h.size()) != data.cols())
    throw DomainError("need one h per coordinate");
  if (data.minCoeff() < 0.0)
    throw DomainError("data contains negative entries; domain is the "
                      "non-negative orthant");
  if (diag_multiplier < 1.0) throw DomainError("diag_multiplier must be >= 1");
}

// Symmetric coordinate descent on
//   sum_j [0.5 xi_j' Bt_j xi_j - g_j' xi_j]
//     + lambda |K|_1 + lambda_eta |eta|_1,
// xi_j = (row j of K [, eta_j]), off-diagonal pairs tied. Bt_j is block j
// with its diagonal scaled by diag_multiplier. The residuals R.row(j) =
// (Bt_j xi_j)' are maintained incrementally.
class CDSolver {
 public:
  CDSolver(const BlockQuadratic& q, double lambda, const FitOptions& opts)
      : q_(q), m_(q.m), qd_(q.q), lambda_(lambda), opts_(opts) {
    if (lambda < 0.0) throw DomainError("lambda must be >= 0");
    if (!(opts.ratio_k_eta > 0.0))
      throw DomainError("ratio_k_eta must be positive (or Inf)");
    lambda_eta_ = std::isinf(opts.ratio_k_eta) ? 0.0 : lambda / opts.ratio_k_eta;
    if (static_cast<int>(q.blocks.size()) != m_ ||
        q.g.size() != static_cast<Eigen::Index>(m_) * qd_)
      throw DomainError("inconsistent BlockQuadratic");
    Bt_.reserve(m_);
    for (int j = 0; j < m_; ++j) {
      Eigen::MatrixXd B = q.blocks[j];
      B.diagonal() *= q.diag_multiplier;
      Bt_.push_back(std::move(B));
    }
    theta_ = Eigen::MatrixXd::Zero(m_, qd_);
    pair_free_.assign(static_cast<size_t>(m_) * (m_ - 1) / 2, 1);
    recompute_residuals();
  }

  void set_warm(const Eigen::MatrixXd& theta) {
    theta_ = theta;
    recompute_residuals();
  }

  void set_workset(const std::vector<char>& ws) {
    pair_free_ = ws;
    // screened-out pairs must sit at zero
    for (int k = 1; k < m_; ++k)
      for (int j = 0; j < k; ++j)
        if (!pair_free_[pair_index(j, k)] && theta_(j, k) != 0.0) {
          const double d = -theta_(j, k);
          theta_(j, k) = theta_(k, j) = 0.0;
          residuals_.row(j) += d * Bt_[j].col(k).transpose();
          residuals_.row(k) += d * Bt_[k].col(j).transpose();
        }
  }

  const Eigen::MatrixXd& theta() const { return theta_; }

  long solve() {
    long sweeps = 0;
    while (true) {
      ++sweeps;
      const double chg = sweep();
      if (sweeps % 64 == 0) recompute_residuals();
      if (chg < opts_.tol) {
        recompute_residuals();
        if (kkt_residual() <= opts_.kkt_tol) break;
      }
      if (sweeps >= opts_.max_sweeps) {
        recompute_residuals();
        throw ConvergenceError(
            "coordinate descent did not converge within " +
                std::to_string(opts_.max_sweeps) + " sweeps (kkt residual " +
                std::to_string(kkt_residual()) + ")",
            result(sweeps));
      }
    }
    return sweeps;
  }

  // stationarity violation, per-entry scale, over free coordinates
  double kkt_residual() const {
    double worst = 0.0;
    for (int k = 1; k < m_; ++k)
      for (int j = 0; j < k; ++j) {
        if (!pair_free_[pair_index(j, k)]) continue;
        worst = std::max(worst, pair_violation(j, k));
      }
    for (int j = 0; j < m_; ++j)
      worst = std::max(worst, single_violation(j, j, lambda_));
    if (q_.noncentered())
      for (int j = 0; j < m_; ++j)
        worst = std::max(worst, single_violation(j, m_, lambda_eta_));
    return worst;
  }

  // smooth gradient of the tied pair (j,k); valid after recompute_residuals
  double pair_gradient(int j, int k) const {
    return residuals_(j, k) + residuals_(k, j) - q_.g_block(j)[k] -
           q_.g_block(k)[j];
  }

  std::vector<int> violating_pairs_outside_workset(double tol) const {
    std::vector<int> out;
    for (int k = 1; k < m_; ++k)
      for (int j = 0; j < k; ++j) {
        const int p = pair_index(j, k);
        if (pair_free_[p]) continue;
        if (std::abs(pair_gradient(j, k)) / 2.0 > lambda_ + tol)
          out.push_back(p);
      }
    return out;
  }

  double max_abs_pair_gradient() const {
    double worst = 0.0;
    for (int k = 1; k < m_; ++k)
      for (int j = 0; j < k; ++j)
        worst = std::max(worst, std::abs(pair_gradient(j, k)));
    return worst;
  }

  FitResult result(long sweeps) const {
    FitResult fr;
    fr.K = theta_.leftCols(m_);
    if (q_.noncentered()) fr.eta = theta_.col(m_);
    fr.lambda = lambda_;
    fr.lambda_eta = q_.noncentered() ? lambda_eta_ : 0.0;
    for (int k = 1; k < m_; ++k)
      for (int j = 0; j < k; ++j)
        if (theta_(j, k) != 0.0) fr.support.emplace_back(j, k);
    std::sort(fr.support.begin(), fr.support.end());
    fr.objective = objective();
    fr.kkt_residual = kkt_residual();
    fr.sweeps = sweeps;
    return fr;
  }

  double objective() const {
    double f = 0.0;
    for (int j = 0; j < m_; ++j)
      f += 0.5 * theta_.row(j).dot(residuals_.row(j)) -
           q_.g_block(j).dot(theta_.row(j));
    double pen = 0.0;
    for (int j = 0; j < m_; ++j) pen += std::abs(theta_(j, j));
    for (int k = 1; k < m_; ++k)
      for (int j = 0; j < k; ++j) pen += 2.0 * std::abs(theta_(j, k));
    f += lambda_ * pen;
    if (q_.noncentered())
      f += lambda_eta_ * theta_.col(m_).lpNorm<1>();
    return f;
  }

  void recompute_residuals() {
    residuals_.resize(m_, qd_);
    for (int j = 0; j < m_; ++j)
      residuals_.row(j) = (Bt_[j] * theta_.row(j).transpose()).transpose();
  }

 private:
  double sweep() {
    double maxchg = 0.0;
    for (int k = 1; k < m_; ++k)
      for (int j = 0; j < k; ++j) {
        if (!pair_free_[pair_index(j, k)]) continue;
        update_pair(j, k, maxchg);
      }
    for (int j = 0; j < m_; ++j) update_single(j, j, lambda_, maxchg);
    if (q_.noncentered())
      for (int j = 0; j < m_; ++j) update_single(j, m_, lambda_eta_, maxchg);
    return maxchg;
  }

  void update_pair(int j, int k, double& maxchg) {
    const double t = theta_(j, k);
    const double G = pair_gradient(j, k);
    const double a = Bt_[j](k, k) + Bt_[k](j, j);
    if (!(a > 0.0)) {
      if (t == 0.0 && std::abs(G) <= 2.0 * lambda_) return;
      throw NumericError("degenerate quadratic coefficient for edge (" +
                         std::to_string(j + 1) + "," + std::to_string(k + 1) +
                         ")");
    }
    const double tn = soft_threshold(a * t - G, 2.0 * lambda_) / a;
    const double d = tn - t;
    if (d == 0.0) return;
    theta_(j, k) = theta_(k, j) = tn;
    residuals_.row(j) += d * Bt_[j].col(k).transpose();
    residuals_.row(k) += d * Bt_[k].col(j).transpose();
    maxchg = std::max(maxchg, std::abs(d));
  }

  void update_single(int j, int pos, double pen, double& maxchg) {
    const double t = theta_(j, pos);
    const double G = residuals_(j, pos) - q_.g_block(j)[pos];
    const double a = Bt_[j](pos, pos);
    if (!(a > 0.0)) {
      if (t == 0.0 && std::abs(G) <= pen) return;
      throw NumericError("degenerate quadratic coefficient at coordinate (" +
                         std::to_string(j + 1) + "," + std::to_string(pos + 1) +
                         ")");
    }
    const double tn = soft_threshold(a * t - G, pen) / a;
    const double d = tn - t;
    if (d == 0.0) return;
    theta_(j, pos) = tn;
    residuals_.row(j) += d * Bt_[j].col(pos).transpose();
    maxchg = std::max(maxchg, std::abs(d));
  }

  double pair_violation(int j, int k) const {
    const double G = pair_gradient(j, k) / 2.0;
    const double t = theta_(j, k);
    if (t != 0.0) return std::abs(G + lambda_ * (t > 0 ? 1.0 : -1.0));
    return std::max(0.0, std::abs(G) - lambda_);
  }

  double single_violation(int j, int pos, double pen) const {
    const double G = residuals_(j, pos) - q_.g_block(j)[pos];
    const double t = theta_(j, pos);
    if (t != 0.0) return std::abs(G + pen * (t > 0 ? 1.0 : -1.0));
    return std::max(0.0, std::abs(G) - pen);
  }

  const BlockQuadratic& q_;
  int m_, qd_;
  double lambda_, lambda_eta_;
  FitOptions opts_;
  std::vector<Eigen::MatrixXd> Bt_;
  Eigen::MatrixXd theta_;
  Eigen::MatrixXd residuals_;
  std::vector<char> pair_free_;
};

}  // namespace

BlockQuadratic assemble_centered(const Eigen::MatrixXd& data,
                                 const std::vector<HFunction>& h,
                                 double diag_multiplier) {
  check_assembly_inputs(data, h, diag_multiplier);
  const long n = data.rows();
  const int m = static_cast<int>(data.cols());
  BlockQuadratic q;
  q.m = m;
  q.q = m;
  q.n = n;
  q.diag_multiplier = diag_multiplier;
  q.blocks.assign(m, Eigen::MatrixXd::Zero(m, m));
  q.g = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m) * m);
  for (long i = 0; i < n; ++i) {
    const Eigen::VectorXd x = data.row(i).transpose();
    for (int j = 0; j < m; ++j) {
      const HEval he = h[j].eval(x[j]);
      if (!std::isfinite(he.value) || !std::isfinite(he.deriv))
        throw NumericError("non-finite h at sample " + std::to_string(i + 1) +
                           ", coordinate " + std::to_string(j + 1));
      if (he.value != 0.0)
        q.blocks[j].selfadjointView<Eigen::Lower>().rankUpdate(x, he.value);
      auto gj = q.g.segment(static_cast<Eigen::Index>(j) * m, m);
      gj += he.deriv * x;
      gj[j] += he.value;
    }
  }
  for (int j = 0; j < m; ++j) {
    q.blocks[j] = Eigen::MatrixXd(q.blocks[j].selfadjointView<Eigen::Lower>());
    q.blocks[j] /= static_cast<double>(n);
  }
  q.g /= static_cast<double>(n);
  return q;
}

BlockQuadratic assemble_noncentered(const Eigen::MatrixXd& data,
                                    const std::vector<HFunction>& h,
                                    double diag_multiplier) {
  check_assembly_inputs(data, h, diag_multiplier);
  const long n = data.rows();
  const int m = static_cast<int>(data.cols());
  const int qd = m + 1;
  BlockQuadratic q;
  q.m = m;
  q.q = qd;
  q.n = n;
  q.diag_multiplier = diag_multiplier;
  q.blocks.assign(m, Eigen::MatrixXd::Zero(qd, qd));
  q.g = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m) * qd);
  Eigen::VectorXd w(qd);
  for (long i = 0; i < n; ++i) {
    w.head(m) = data.row(i).transpose();
    w[m] = -1.0;
    for (int j = 0; j < m; ++j) {
      const HEval he = h[j].eval(w[j]);
      if (!std::isfinite(he.value) || !std::isfinite(he.deriv))
        throw NumericError("non-finite h at sample " + std::to_string(i + 1) +
                           ", coordinate " + std::to_string(j + 1));
      if (he.value != 0.0)
        q.blocks[j].selfadjointView<Eigen::Lower>().rankUpdate(w, he.value);
      auto gj = q.g.segment(static_cast<Eigen::Index>(j) * qd, qd);
      gj.head(m) += he.deriv * w.head(m);
      gj[j] += he.value;
      gj[m] -= he.deriv;
    }
  }
  for (int j = 0; j < m; ++j) {
    q.blocks[j] = Eigen::MatrixXd(q.blocks[j].selfadjointView<Eigen::Lower>());
    q.blocks[j] /= static_cast<double>(n);
  }
  q.g /= static_cast<double>(n);
  return q;
}

FitResult fit_regularized(const BlockQuadratic& q, double lambda,
                          const FitOptions& opts) {
  CDSolver solver(q, lambda, opts);
  const long sweeps = solver.solve();
  return solver.result(sweeps);
}

double lambda_max(const BlockQuadratic& q, const FitOptions& opts) {
  const std::vector<char> none(static_cast<size_t>(q.m) * (q.m - 1) / 2, 0);
  auto max_grad_half = [&](double lam) {
    CDSolver s(q, lam, opts);
    s.set_workset(none);
    s.solve();
    return s.max_abs_pair_gradient() / 2.0;
  };
  const double p0 = max_grad_half(0.0);
  if (p0 <= 1e-300) return 1e-12;
  double hi = p0;
  for (int guard = 0; max_grad_half(hi) > hi; ++guard) {
    hi *= 2.0;
    if (guard > 80) throw NumericError("lambda_max bracketing failed");
  }
  double lo = 0.0;
  for (int it = 0; it < 100; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (max_grad_half(mid) > mid)
      lo = mid;
    else
      hi = mid;
  }
  for (double bump : {1.0, 1.0 + 1e-9, 1.0 + 1e-6, 1.0 + 1e-3, 1.02}) {
    const double cand = hi * bump;
    FitResult fr = fit_regularized(q, cand, opts);
    if (fr.support.empty()) return cand;
  }
  throw NumericError("could not verify an empty-support lambda_max");
}

namespace {

double ebic_value(const BlockQuadratic& q, const Eigen::MatrixXd& K,
                  const Eigen::VectorXd& eta, long nsupport) {
  const int m = q.m;
  double quad = 0.0, lin = 0.0;
  Eigen::VectorXd xi(q.q);
  for (int j = 0; j < m; ++j) {
    xi.head(m) = K.row(j).transpose();
    if (q.noncentered()) xi[m] = eta[j];
    quad += xi.dot(q.blocks[j] * xi);
    lin += q.g_block(j).dot(xi);
  }
  const double n = static_cast<double>(q.n);
  const long edges = static_cast<long>(m) * (m - 1) / 2;
  return n * quad - 2.0 * n * lin +
         static_cast<double>(nsupport) * std::log(n) +
         2.0 * lchoose(edges, nsupport);
}

}  // namespace

double ebic(const BlockQuadratic& q, const FitResult& fit, bool refit) {
  if (refit) {
    const FitResult rf = refit_support(q, fit.support);
    return ebic_value(q, rf.K, rf.eta, static_cast<long>(fit.support.size()));
  }
  return ebic_value(q, fit.K, fit.eta, static_cast<long>(fit.support.size()));
}

PathResult solution_path(const BlockQuadratic& q, const PathOptions& opts) {
  std::vector<double> grid = opts.grid;
  if (grid.empty()) {
    if (opts.lambda_count < 1) throw DomainError("lambda_count must be >= 1");
    const double lmax = lambda_max(q, opts.fit);
    const double lmin = 0.01 * lmax;
    const int c = opts.lambda_count;
    for (int i = 0; i < c; ++i) {
      const double f = (c == 1) ? 0.0 : static_cast<double>(i) / (c - 1);
      grid.push_back(lmax * std::pow(lmin / lmax, f));
    }
  }
  for (size_t i = 1; i < grid.size(); ++i)
    if (!(grid[i] < grid[i - 1]))
      throw DomainError("lambda grid must be strictly decreasing");
  if (grid.empty()) throw DomainError("lambda grid is empty");

  const int npairs = q.m * (q.m - 1) / 2;
  PathResult pr;
  pr.lambdas = grid;
  Eigen::MatrixXd warm;
  std::vector<char> prev_active(npairs, 0);
  std::vector<double> prev_grad(npairs, 0.0);
  bool have_warm = false;

  for (size_t t = 0; t < grid.size(); ++t) {
    const double lam = grid[t];
    CDSolver solver(q, lam, opts.fit);
    if (have_warm) solver.set_warm(warm);
    long total_sweeps = 0;
    try {
      if (opts.screening) {
        std::vector<char> ws(npairs, 0);
        if (t > 0) {
          const double thr = 2.0 * grid[t] - grid[t - 1];
          for (int k = 1; k < q.m; ++k)
            for (int j = 0; j < k; ++j) {
              const int p = pair_index(j, k);
              if (prev_active[p] || std::abs(prev_grad[p]) / 2.0 >= thr)
                ws[p] = 1;
            }
        }
        solver.set_workset(ws);
        for (int round = 0;; ++round) {
          total_sweeps += solver.solve();
          const auto viol =
              solver.violating_pairs_outside_workset(opts.fit.kkt_tol);
          if (viol.empty()) break;
          if (round > npairs)
            throw NumericError("screening verification did not stabilize");
          for (int p : viol) ws[static_cast<size_t>(p)] = 1;
          solver.set_workset(ws);
        }
      } else {
        total_sweeps = solver.solve();
      }
    } catch (ConvergenceError& e) {
      throw ConvergenceError("lambda[" + std::to_string(t) + "]=" +
                                 std::to_string(lam) + ": " + e.what(),
                             e.last);
    }
    FitResult fr = solver.result(total_sweeps);
    warm = solver.theta();
    have_warm = true;
    for (int k = 1; k < q.m; ++k)
      for (int j = 0; j < k; ++j) {
        const int p = pair_index(j, k);
        prev_active[p] = fr.K(j, k) != 0.0 ? 1 : 0;
        prev_grad[p] = solver.pair_gradient(j, k);
      }
    pr.ebic_raw.push_back(ebic_value(q, fr.K, fr.eta,
                                     static_cast<long>(fr.support.size())));
    if (opts.ebic_refit) {
      FitResult rf = refit_support(q, fr.support);
      pr.ebic_refit.push_back(ebic_value(
          q, rf.K, rf.eta, static_cast<long>(fr.support.size())));
      pr.refits.push_back(std::move(rf));
    }
    pr.fits.push_back(std::move(fr));
  }
  pr.selected_raw = static_cast<int>(
      std::min_element(pr.ebic_raw.begin(), pr.ebic_raw.end()) -
      pr.ebic_raw.begin());
  if (!pr.ebic_refit.empty())
    pr.selected_refit = static_cast<int>(
        std::min_element(pr.ebic_refit.begin(), pr.ebic_refit.end()) -
        pr.ebic_refit.begin());
  return pr;
}

FitResult refit_support(const BlockQuadratic& q,
                        const std::vector<std::pair<int, int>>& S) {
  const int m = q.m;
  // free coordinates: diagonals, the pairs in S, and eta
  struct Touch {
    int block;
    int pos;
  };
  std::vector<std::vector<Touch>> touches;
  std::vector<char> in_s(static_cast<size_t>(m) * (m - 1) / 2, 0);
  for (auto [a, b] : S) {
    if (a >= b || a < 0 || b >= m)
      throw DomainError("support entries must satisfy 0 <= i < j < m");
    in_s[pair_index(a, b)] = 1;
  }
  for (int j = 0; j < m; ++j) touches.push_back({{j, j}});
  std::vector<std::pair<int, int>> pairs;
  for (int k = 1; k < m; ++k)
    for (int j = 0; j < k; ++j)
      if (in_s[pair_index(j, k)]) {
        touches.push_back({{j, k}, {k, j}});
        pairs.emplace_back(j, k);
      }
  if (q.noncentered())
    for (int j = 0; j < m; ++j) touches.push_back({{j, m}});

  const int f = static_cast<int>(touches.size());
  std::vector<Eigen::MatrixXd> Bt;
  Bt.reserve(m);
  for (int j = 0; j < m; ++j) {
    Eigen::MatrixXd B = q.blocks[j];
    B.diagonal() *= q.diag_multiplier;
    Bt.push_back(std::move(B));
  }
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(f, f);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(f);
  for (int a = 0; a < f; ++a) {
    for (const Touch& ta : touches[a]) rhs[a] += q.g_block(ta.block)[ta.pos];
    for (int b = 0; b < f; ++b)
      for (const Touch& ta : touches[a])
        for (const Touch& tb : touches[b])
          if (ta.block == tb.block) H(a, b) += Bt[ta.block](ta.pos, tb.pos);
  }
  Eigen::LDLT<Eigen::MatrixXd> ldlt(H);
  Eigen::VectorXd z = ldlt.solve(rhs);
  z += ldlt.solve(rhs - H * z);
  const double resid = (H * z - rhs).lpNorm<Eigen::Infinity>();
  if (!z.allFinite() ||
      resid > 1e-8 * (1.0 + rhs.lpNorm<Eigen::Infinity>()))
    throw NumericError(
        "restricted unpenalized system is singular or ill-conditioned; "
        "increase the sample size");

  FitResult fr;
  fr.K = Eigen::MatrixXd::Zero(m, m);
  for (int j = 0; j < m; ++j) fr.K(j, j) = z[j];
  for (size_t p = 0; p < pairs.size(); ++p) {
    auto [a, b] = pairs[p];
    fr.K(a, b) = fr.K(b, a) = z[static_cast<Eigen::Index>(m) + p];
  }
  if (q.noncentered()) fr.eta = z.tail(m);
  for (int k = 1; k < m; ++k)
    for (int j = 0; j < k; ++j)
      if (fr.K(j, k) != 0.0) fr.support.emplace_back(j, k);
  std::sort(fr.support.begin(), fr.support.end());
  fr.kkt_residual = resid;
  double f0 = 0.0;
  Eigen::VectorXd xi(q.q);
  for (int j = 0; j < m; ++j) {
    xi.head(m) = fr.K.row(j).transpose();
    if (q.noncentered()) xi[m] = fr.eta[j];
    f0 += 0.5 * xi.dot(Bt[j] * xi) - q.g_block(j).dot(xi);
  }
  fr.objective = f0;
  return fr;
}

TheoryDiagnostics diagnostics(const Eigen::MatrixXd& K0,
                              const Eigen::VectorXd& mu0, const HFunction& h,
                              long mc_n, std::uint64_t seed) {
  const int m = static_cast<int>(K0.rows());
  const bool centered = mu0.size() == 0 || mu0.lpNorm<Eigen::Infinity>() == 0.0;
  const TNParams p = centered
                         ? TNParams::centered_K(K0)
                         : TNParams::from_mu(K0, mu0);
  if (mc_n < 100) throw DomainError("mc_n must be at least 100");
  const SampleResult sr = sample(p, mc_n, seed);
  const auto hs = h_vector(h, m);
  const BlockQuadratic bq = centered ? assemble_centered(sr.x, hs, 1.0)
                                     : assemble_noncentered(sr.x, hs, 1.0);
  const Eigen::VectorXd eta0 = centered ? Eigen::VectorXd() : p.eta();

  TheoryDiagnostics d;
  double worst_offdiag = 0.0;
  double worst_inv = 0.0;
  for (int j = 0; j < m; ++j) {
    std::vector<int> s, sc;
    for (int k = 0; k < bq.q; ++k) {
      bool active;
      if (k < m)
        active = K0(j, k) != 0.0;
      else
        active = eta0[j] != 0.0;
      (active ? s : sc).push_back(k);
    }
    Eigen::MatrixXd Ass(s.size(), s.size());
    for (size_t a = 0; a < s.size(); ++a)
      for (size_t b = 0; b < s.size(); ++b)
        Ass(a, b) = bq.blocks[j](s[a], s[b]);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(Ass);
    if (!lu.isInvertible())
      throw NumericError("estimated Gamma restricted to the true support is "
                         "singular at block " + std::to_string(j + 1));
    const Eigen::MatrixXd inv = lu.inverse();
    worst_inv = std::max(worst_inv, inv.cwiseAbs().rowwise().sum().maxCoeff());
    if (!sc.empty()) {
      Eigen::MatrixXd Acs(sc.size(), s.size());
      for (size_t a = 0; a < sc.size(); ++a)
        for (size_t b = 0; b < s.size(); ++b)
          Acs(a, b) = bq.blocks[j](sc[a], s[b]);
      const Eigen::MatrixXd A = Acs * inv;
      worst_offdiag =
          std::max(worst_offdiag, A.cwiseAbs().rowwise().sum().maxCoeff());
    }
  }
  d.alpha_irrep = 1.0 - worst_offdiag;
  d.c_gamma0 = worst_inv;
  d.c_k0 = K0.cwiseAbs().rowwise().sum().maxCoeff();
  int dmax = 0;
  for (int j = 0; j < m; ++j) {
    int cnt = 0;
    for (int k = 0; k < m; ++k)
      if (K0(j, k) != 0.0) ++cnt;
    dmax = std::max(dmax, cnt);
  }
  d.d_k0 = dmax;
  const Eigen::MatrixXd kinv = K0.inverse();
  double cx = 0.0;
  for (int j = 0; j < m; ++j) {
    const double ex = sr.x.col(j).mean();
    cx = std::max(cx, 2.0 * std::sqrt(kinv(j, j)) + std::exp(0.5) * ex);
  }
  d.c_x = 2.0 * cx;
  for (int k = 1; k < m; ++k)
    for (int j = 0; j < k; ++j)
      if (K0(j, k) != 0.0) d.s0.emplace_back(j, k);
  return d;
}

std::pair<Eigen::MatrixXd, ColumnScaling> scale_columns(
    const Eigen::MatrixXd& data) {
  if (data.rows() < 1) throw DomainError("data must have at least one row");
  ColumnScaling sc;
  sc.s.resize(data.cols());
  Eigen::MatrixXd out = data;
  const double sqrtn = std::sqrt(static_cast<double>(data.rows()));
  for (Eigen::Index j = 0; j < data.cols(); ++j) {
    const double s = data.col(j).norm() / sqrtn;
    if (!(s > 0.0))
      throw DomainError("column " + std::to_string(j + 1) +
                        " has zero norm; cannot scale");
    sc.s[j] = s;
    out.col(j) /= s;
  }
  return {std::move(out), std::move(sc)};
}

FitResult unscale_fit(const FitResult& fit, const ColumnScaling& sc) {
  FitResult out = fit;
  const int m = static_cast<int>(fit.K.rows());
  if (sc.s.size() != m) throw DomainError("scaling length mismatch");
  for (int j = 0; j < m; ++j)
    for (int k = 0; k < m; ++k) out.K(j, k) = fit.K(j, k) / (sc.s[j] * sc.s[k]);
  if (fit.eta.size() == m)
    out.eta = fit.eta.cwiseQuotient(sc.s);
  return out;
}

std::string FitResult::to_json() const {
  nlohmann::ordered_json j;
  const int m = static_cast<int>(K.rows());
  j["m"] = m;
  j["lambda"] = lambda;
  if (eta.size() > 0) j["lambda_eta"] = lambda_eta;
  std::vector<double> kflat(static_cast<size_t>(m) * m);
  for (int r = 0; r < m; ++r)
    for (int c = 0; c < m; ++c) kflat[static_cast<size_t>(r) * m + c] = K(r, c);
  j["K"] = kflat;
  if (eta.size() > 0)
    j["eta"] = std::vector<double>(eta.data(), eta.data() + eta.size());
  nlohmann::ordered_json edges = nlohmann::ordered_json::array();
  for (auto [a, b] : support) edges.push_back({a + 1, b + 1});
  j["support"] = edges;
  j["objective"] = objective;
  j["kkt_residual"] = kkt_residual;
  j["sweeps"] = sweeps;
  return j.dump(2) + "\n";
}

std::string PathResult::to_json() const {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (size_t t = 0; t < lambdas.size(); ++t) {
    nlohmann::ordered_json e;
    e["lambda"] = lambdas[t];
    e["fit"] = nlohmann::ordered_json::parse(fits[t].to_json());
    e["ebic_raw"] = ebic_raw[t];
    if (!ebic_refit.empty()) {
      e["ebic_refit"] = ebic_refit[t];
      e["refit"] = nlohmann::ordered_json::parse(refits[t].to_json());
    }
    arr.push_back(std::move(e));
  }
  nlohmann::ordered_json j;
  j["path"] = std::move(arr);
  j["selected_raw"] = selected_raw;
  if (!ebic_refit.empty()) j["selected_refit"] = selected_refit;
  return j.dump(2) + "\n";
}

std::string PathResult::to_csv() const {
  std::string out = ebic_refit.empty() ? "lambda,df,ebic_raw\n"
                                       : "lambda,df,ebic_raw,ebic_refit\n";
  for (size_t t = 0; t < lambdas.size(); ++t) {
    out += format_double(lambdas[t]);
    out += ',';
    out += std::to_string(fits[t].support.size());
    out += ',';
    out += format_double(ebic_raw[t]);
    if (!ebic_refit.empty()) {
      out += ',';
      out += format_double(ebic_refit[t]);
    }
    out += '\n';
  }
  return out;
}

std::string TheoryDiagnostics::to_json() const {
  nlohmann::ordered_json j;
  j["alpha_irrep"] = alpha_irrep;
  j["c_gamma0"] = c_gamma0;
  j["c_k0"] = c_k0;
  j["d_k0"] = d_k0;
  j["c_x"] = c_x;
  nlohmann::ordered_json edges = nlohmann::ordered_json::array();
  for (auto [a, b] : s0) edges.push_back({a + 1, b + 1});
  j["s0"] = edges;
  return j.dump(2) + "\n";
}

}  // namespace gsm
