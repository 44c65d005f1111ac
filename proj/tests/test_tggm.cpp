#include <cmath>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "gsm/errors.hpp"
#include "gsm/expfam.hpp"
#include "gsm/oracles.hpp"
#include "gsm/rng.hpp"
#include "gsm/tggm.hpp"
#include "gsm/truncated_normal.hpp"

using gsm::assemble_centered;
using gsm::assemble_noncentered;
using gsm::BlockQuadratic;
using gsm::ConvergenceError;
using gsm::DomainError;
using gsm::FitOptions;
using gsm::FitResult;
using gsm::HFunction;
using gsm::h_vector;
using gsm::NumericError;
using gsm::PathOptions;

namespace {

Eigen::MatrixXd nonneg_data(int n, int m, std::uint64_t seed) {
  gsm::Rng rng(seed);
  Eigen::MatrixXd d(n, m);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) d(i, j) = std::abs(rng.normal());
  return d;
}

// chain precision matrix with off-diagonal rho on the first off-diagonal
Eigen::MatrixXd chain_K(int m, double rho) {
  Eigen::MatrixXd K = Eigen::MatrixXd::Identity(m, m);
  for (int j = 0; j + 1 < m; ++j) {
    K(j, j + 1) = rho;
    K(j + 1, j) = rho;
  }
  return K;
}

Eigen::MatrixXd tn_data(const Eigen::MatrixXd& K0, long n, std::uint64_t seed) {
  auto r = gsm::sample(gsm::TNParams::centered_K(K0), n, seed);
  return r.x;
}

// loss written directly from the block representation, raw blocks
double block_objective(const BlockQuadratic& q, const Eigen::MatrixXd& K,
                       const Eigen::VectorXd& eta) {
  double v = 0.0;
  for (int j = 0; j < q.m; ++j) {
    Eigen::VectorXd xi(q.q);
    xi.head(q.m) = K.row(j).transpose();
    if (q.noncentered()) xi[q.m] = eta[j];
    v += 0.5 * xi.dot(q.blocks[j] * xi) - q.g_block(j).dot(xi);
  }
  return v;
}

}  // namespace

TEST_CASE("centered block assembly fixture") {
  Eigen::MatrixXd data(1, 2);
  data << 1.0, 2.0;
  auto q = assemble_centered(data, h_vector(HFunction::power(1.0), 2), 1.01);
  CHECK(q.m == 2);
  CHECK(q.q == 2);
  CHECK(!q.noncentered());
  CHECK(q.n == 1);
  Eigen::MatrixXd b0(2, 2), b1(2, 2);
  b0 << 1, 2, 2, 4;
  b1 << 2, 4, 4, 8;
  CHECK((q.blocks[0] - b0).lpNorm<Eigen::Infinity>() <= 1e-12);
  CHECK((q.blocks[1] - b1).lpNorm<Eigen::Infinity>() <= 1e-12);
  // row-block layout: g_j[k] = u_jk + [k==j] V_j
  CHECK(std::abs(q.g_block(0)[0] - 2.0) <= 1e-12);  // u_00 + V_0 = 1 + 1
  CHECK(std::abs(q.g_block(0)[1] - 2.0) <= 1e-12);  // u_01 = 2
  CHECK(std::abs(q.g_block(1)[0] - 1.0) <= 1e-12);  // u_10 = 1
  CHECK(std::abs(q.g_block(1)[1] - 4.0) <= 1e-12);  // u_11 + V_1 = 2 + 2
}

TEST_CASE("non-centered block assembly fixture") {
  Eigen::MatrixXd data(1, 1);
  data << 2.0;
  auto q = assemble_noncentered(data, h_vector(HFunction::power(1.0), 1), 1.01);
  CHECK(q.q == 2);
  CHECK(q.noncentered());
  Eigen::MatrixXd b(2, 2);
  b << 8, -4, -4, 2;
  CHECK((q.blocks[0] - b).lpNorm<Eigen::Infinity>() <= 1e-12);
  CHECK(std::abs(q.g_block(0)[0] - 4.0) <= 1e-12);
  CHECK(std::abs(q.g_block(0)[1] - (-1.0)) <= 1e-12);
}

TEST_CASE("eta slice of the non-centered assembly reproduces the centered one") {
  Eigen::MatrixXd data = nonneg_data(12, 3, 2);
  auto h = h_vector(HFunction::trunc_power(1.0, 3.0), 3);
  auto qc = assemble_centered(data, h);
  auto qn = assemble_noncentered(data, h);
  for (int j = 0; j < 3; ++j) {
    CHECK((qn.blocks[j].topLeftCorner(3, 3) - qc.blocks[j])
              .lpNorm<Eigen::Infinity>() <= 1e-12);
    CHECK((qn.g_block(j).head(3) - qc.g_block(j)).lpNorm<Eigen::Infinity>() <=
          1e-12);
  }
}

TEST_CASE("degenerate h zeroes the assembly") {
  auto q = assemble_centered(nonneg_data(5, 2, 3),
                             h_vector(HFunction::constant(0.0), 2));
  CHECK(q.blocks[0].lpNorm<Eigen::Infinity>() == 0.0);
  CHECK(q.blocks[1].lpNorm<Eigen::Infinity>() == 0.0);
  CHECK(q.g.lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("assembly input validation") {
  Eigen::MatrixXd data = nonneg_data(5, 2, 4);
  CHECK_THROWS_AS(assemble_centered(data, h_vector(HFunction::power(1.0), 3)),
                  DomainError);
  Eigen::MatrixXd neg = data;
  neg(1, 0) = -0.1;
  CHECK_THROWS_AS(assemble_centered(neg, h_vector(HFunction::power(1.0), 2)),
                  DomainError);
  CHECK_THROWS_AS(
      assemble_centered(data, h_vector(HFunction::power(1.0), 2), 0.5),
      DomainError);
}

TEST_CASE("block loss agrees with the vech quadratic up to a constant") {
  const int m = 3;
  Eigen::MatrixXd data = nonneg_data(15, m, 8);
  auto h = h_vector(HFunction::trunc_power(1.0, 3.0), m);

  // centered
  {
    auto qb = assemble_centered(data, h, 1.0);
    auto qv = gsm::assemble_quadratic(gsm::centered_tn_spec(m), data, h);
    gsm::Rng rng(5);
    double c0 = 0.0;
    for (int t = 0; t < 20; ++t) {
      Eigen::MatrixXd K(m, m);
      for (int i = 0; i < m; ++i)
        for (int j = 0; j <= i; ++j) K(i, j) = K(j, i) = rng.normal();
      Eigen::VectorXd v = gsm::sym_to_vech(K);
      const double quad = 0.5 * v.dot(qv.gamma * v) - qv.g.dot(v);
      const double diff =
          block_objective(qb, K, Eigen::VectorXd()) - quad;
      if (t == 0)
        c0 = diff;
      else
        CHECK(std::abs(diff - c0) <= 1e-9 * (1.0 + std::abs(c0)));
    }
  }

  // non-centered: theta = (vech(K), eta)
  {
    auto qb = assemble_noncentered(data, h, 1.0);
    auto qv = gsm::assemble_quadratic(gsm::noncentered_tn_spec(m), data, h);
    gsm::Rng rng(6);
    double c0 = 0.0;
    for (int t = 0; t < 20; ++t) {
      Eigen::MatrixXd K(m, m);
      for (int i = 0; i < m; ++i)
        for (int j = 0; j <= i; ++j) K(i, j) = K(j, i) = rng.normal();
      Eigen::VectorXd eta(m);
      for (int i = 0; i < m; ++i) eta[i] = rng.normal();
      Eigen::VectorXd v(qv.gamma.rows());
      v.head(gsm::vech_size(m)) = gsm::sym_to_vech(K);
      v.tail(m) = eta;
      const double quad = 0.5 * v.dot(qv.gamma * v) - qv.g.dot(v);
      const double diff = block_objective(qb, K, eta) - quad;
      if (t == 0)
        c0 = diff;
      else
        CHECK(std::abs(diff - c0) <= 1e-9 * (1.0 + std::abs(c0)));
    }
  }
}

TEST_CASE("lambda_max produces an empty support that smaller lambdas break") {
  auto q = assemble_centered(tn_data(chain_K(4, 0.45), 300, 12),
                             h_vector(HFunction::trunc_power(1.0, 3.0), 4));
  const double lmax = gsm::lambda_max(q);
  CHECK(lmax > 0.0);
  auto at_max = gsm::fit_regularized(q, lmax);
  CHECK(at_max.support.empty());
  auto above = gsm::fit_regularized(q, lmax * 1.5);
  CHECK(above.support.empty());
  auto below = gsm::fit_regularized(q, lmax * 0.5);
  CHECK(!below.support.empty());
}

TEST_CASE("fit matches the proximal-gradient oracle") {
  auto q = assemble_centered(tn_data(chain_K(4, 0.4), 200, 33),
                             h_vector(HFunction::trunc_power(1.0, 3.0), 4));
  for (double lambda : {0.0, 0.05, 0.2}) {
    auto fit = gsm::fit_regularized(q, lambda);
    CHECK(fit.kkt_residual <= 1e-8);
    CHECK((fit.K - fit.K.transpose()).lpNorm<Eigen::Infinity>() == 0.0);

    auto sys = gsm::build_free_param_system(
        q, lambda, std::numeric_limits<double>::infinity());
    Eigen::VectorXd zstar = gsm::fista(sys);
    Eigen::VectorXd zfit = gsm::vectorize_fit(q, fit);
    CHECK(std::abs(gsm::penalized_objective(sys, zfit) -
                   gsm::penalized_objective(sys, zstar)) <= 1e-6);
    CHECK((zfit - zstar).lpNorm<Eigen::Infinity>() <= 1e-4);
    // reported objective is the penalized objective at the fitted point
    CHECK(std::abs(fit.objective - gsm::penalized_objective(sys, zfit)) <=
          1e-9 * (1.0 + std::abs(fit.objective)));
  }
}

TEST_CASE("fitted point is a local minimum of the penalized objective") {
  auto q = assemble_centered(tn_data(chain_K(3, 0.4), 150, 44),
                             h_vector(HFunction::trunc_power(1.0, 3.0), 3));
  const double lambda = 0.08;
  auto fit = gsm::fit_regularized(q, lambda);
  auto sys = gsm::build_free_param_system(
      q, lambda, std::numeric_limits<double>::infinity());
  Eigen::VectorXd z = gsm::vectorize_fit(q, fit);
  const double f0 = gsm::penalized_objective(sys, z);
  for (int i = 0; i < z.size(); ++i) {
    for (double d : {1e-4, -1e-4}) {
      Eigen::VectorXd zp = z;
      zp[i] += d;
      CHECK(gsm::penalized_objective(sys, zp) >= f0 - 1e-10);
    }
  }
}

TEST_CASE("support lists exactly the off-diagonal nonzeros") {
  auto q = assemble_centered(tn_data(chain_K(5, 0.4), 400, 55),
                             h_vector(HFunction::trunc_power(1.0, 3.0), 5));
  auto fit = gsm::fit_regularized(q, 0.05);
  std::vector<std::vector<bool>> in_support(5, std::vector<bool>(5, false));
  for (auto [i, j] : fit.support) {
    CHECK(i < j);
    in_support[i][j] = true;
  }
  for (int i = 0; i < 5; ++i)
    for (int j = i + 1; j < 5; ++j)
      CHECK(in_support[i][j] == (fit.K(i, j) != 0.0));
}

TEST_CASE("warm starts along the path match cold fits") {
  auto q = assemble_centered(tn_data(chain_K(5, 0.4), 300, 66),
                             h_vector(HFunction::trunc_power(1.0, 3.0), 5));
  PathOptions opts;
  opts.lambda_count = 12;
  opts.ebic_refit = false;
  // resolve the shared minimizer below the comparison tolerance
  opts.fit.tol = 1e-10;
  auto path = gsm::solution_path(q, opts);
  REQUIRE(path.lambdas.size() == 12);
  CHECK(path.fits[0].support.empty());
  for (size_t t = 1; t < path.lambdas.size(); ++t)
    CHECK(path.lambdas[t] < path.lambdas[t - 1]);
  for (size_t t = 0; t < path.lambdas.size(); t += 3) {
    auto cold = gsm::fit_regularized(q, path.lambdas[t], opts.fit);
    CHECK((path.fits[t].K - cold.K).lpNorm<Eigen::Infinity>() <= 1e-8);
  }
}

TEST_CASE("screening does not change the solution") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    auto q = assemble_centered(tn_data(chain_K(5, 0.45), 150, 100 + seed),
                               h_vector(HFunction::trunc_power(1.0, 3.0), 5));
    PathOptions on, off;
    on.lambda_count = off.lambda_count = 8;
    on.ebic_refit = off.ebic_refit = false;
    on.screening = true;
    off.screening = false;
    auto a = gsm::solution_path(q, on);
    auto b = gsm::solution_path(q, off);
    for (size_t t = 0; t < a.fits.size(); ++t) {
      CHECK((a.fits[t].K - b.fits[t].K).lpNorm<Eigen::Infinity>() <= 1e-8);
      CHECK(a.fits[t].support == b.fits[t].support);
    }
  }
}

TEST_CASE("non-convergence carries the last iterate") {
  auto q = assemble_centered(tn_data(chain_K(4, 0.45), 200, 77),
                             h_vector(HFunction::trunc_power(1.0, 3.0), 4));
  FitOptions opts;
  opts.max_sweeps = 1;
  bool threw = false;
  try {
    gsm::fit_regularized(q, 0.01, opts);
  } catch (const ConvergenceError& e) {
    threw = true;
    CHECK(e.last.sweeps == 1);
    CHECK(e.last.K.allFinite());
    CHECK(e.last.kkt_residual > 0.0);
  }
  CHECK(threw);

  PathOptions popts;
  popts.fit.max_sweeps = 1;
  popts.grid = {0.3, 0.2, 0.1};  // explicit grid: failure happens inside the path loop
  try {
    gsm::solution_path(q, popts);
    CHECK(false);
  } catch (const ConvergenceError& e) {
    CHECK(std::string(e.what()).find("lambda[") != std::string::npos);
  }
}

TEST_CASE("ebic structure") {
  auto q = assemble_centered(tn_data(chain_K(3, 0.4), 100, 88),
                             h_vector(HFunction::trunc_power(1.0, 3.0), 3),
                             1.01);
  auto diag_fit = gsm::refit_support(q, {});
  REQUIRE(diag_fit.support.empty());

  // with |S| = 0 both penalty terms vanish: ebic is the pure quadratic part,
  // evaluated on multiplier-free blocks
  auto raw = assemble_centered(tn_data(chain_K(3, 0.4), 100, 88),
                               h_vector(HFunction::trunc_power(1.0, 3.0), 3),
                               1.0);
  double quad = 0.0, lin = 0.0;
  for (int j = 0; j < 3; ++j) {
    Eigen::VectorXd xi = diag_fit.K.row(j).transpose();
    quad += xi.dot(raw.blocks[j] * xi);
    lin += raw.g_block(j).dot(xi);
  }
  const double expect = q.n * quad - 2.0 * q.n * lin;
  CHECK(std::abs(gsm::ebic(q, diag_fit, false) - expect) <=
        1e-9 * (1.0 + std::abs(expect)));

  // adding one edge to the support adds log n + 2 log C(3,1)
  FitResult one_edge = diag_fit;
  one_edge.support.push_back({0, 1});
  const double diff = gsm::ebic(q, one_edge, false) - gsm::ebic(q, diag_fit, false);
  CHECK(std::abs(diff - (std::log(static_cast<double>(q.n)) +
                         2.0 * std::log(3.0))) <= 1e-9);
}

TEST_CASE("ebic selects a support close to the truth") {
  // seeded m=10 simulation: the refit-eBIC choice must beat at least 90%
  // of the grid in Hamming distance to the true edge set
  Eigen::MatrixXd K0 = Eigen::MatrixXd::Identity(10, 10);
  std::vector<std::pair<int, int>> s0;
  for (int j = 0; j + 1 < 10; j += 2) {
    K0(j, j + 1) = K0(j + 1, j) = 0.5;
    s0.push_back({j, j + 1});
  }
  auto q = assemble_centered(tn_data(K0, 2000, 31),
                             h_vector(HFunction::trunc_power(1.0, 3.0), 10));
  PathOptions opts;
  opts.lambda_count = 30;
  auto path = gsm::solution_path(q, opts);
  REQUIRE(path.selected_refit >= 0);

  auto hamming = [&](const std::vector<std::pair<int, int>>& s) {
    std::set<std::pair<int, int>> a(s.begin(), s.end()),
        b(s0.begin(), s0.end());
    int d = 0;
    for (const auto& e : a) d += b.count(e) ? 0 : 1;
    for (const auto& e : b) d += a.count(e) ? 0 : 1;
    return d;
  };
  const int chosen = hamming(path.fits[path.selected_refit].support);
  int worse_or_equal = 0;
  for (const auto& fit : path.fits)
    if (hamming(fit.support) >= chosen) ++worse_or_equal;
  CHECK(worse_or_equal * 10 >= 9 * static_cast<int>(path.fits.size()));
}

TEST_CASE("refit on the full support equals the unpenalized fit") {
  auto q = assemble_centered(tn_data(chain_K(4, 0.4), 500, 99),
                             h_vector(HFunction::trunc_power(1.0, 3.0), 4));
  std::vector<std::pair<int, int>> full;
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j) full.push_back({i, j});
  auto refit = gsm::refit_support(q, full);
  auto fit0 = gsm::fit_regularized(q, 0.0);
  CHECK((refit.K - fit0.K).lpNorm<Eigen::Infinity>() <= 1e-8);
}

TEST_CASE("diagonal-only refit has the closed form") {
  auto q = assemble_centered(tn_data(chain_K(3, 0.4), 200, 111),
                             h_vector(HFunction::trunc_power(1.0, 3.0), 3),
                             1.01);
  auto refit = gsm::refit_support(q, {});
  for (int j = 0; j < 3; ++j) {
    const double expect = q.g_block(j)[j] / (1.01 * q.blocks[j](j, j));
    CHECK(std::abs(refit.K(j, j) - expect) <= 1e-10);
    for (int k = 0; k < 3; ++k)
      if (k != j) CHECK(refit.K(j, k) == 0.0);
  }
}

TEST_CASE("refit rejects an underdetermined system") {
  Eigen::MatrixXd data(1, 2);
  data << 1.0, 1.0;
  auto q = assemble_centered(data, h_vector(HFunction::power(1.0), 2), 1.0);
  bool threw = false;
  try {
    gsm::refit_support(q, {{0, 1}});
  } catch (const NumericError& e) {
    threw = true;
    CHECK(std::string(e.what()).find("sample size") != std::string::npos);
  }
  CHECK(threw);
}

TEST_CASE("refit at the true support is consistent") {
  Eigen::MatrixXd K0 = chain_K(5, 0.4);
  auto q = assemble_centered(tn_data(K0, 10000, 7),
                             h_vector(HFunction::trunc_power(1.0, 3.0), 5));
  std::vector<std::pair<int, int>> s0;
  for (int j = 0; j + 1 < 5; ++j) s0.push_back({j, j + 1});
  auto refit = gsm::refit_support(q, s0);
  CHECK((refit.K - K0).lpNorm<Eigen::Infinity>() <= 0.1);
}

TEST_CASE("column scaling") {
  Eigen::MatrixXd data = nonneg_data(30, 3, 123);
  auto [scaled, sc] = gsm::scale_columns(data);
  for (int j = 0; j < 3; ++j) {
    CHECK(std::abs(scaled.col(j).norm() / std::sqrt(30.0) - 1.0) <= 1e-12);
    CHECK(std::abs(sc.s[j] - data.col(j).norm() / std::sqrt(30.0)) <= 1e-12);
  }
  Eigen::MatrixXd with_zero = data;
  with_zero.col(1).setZero();
  CHECK_THROWS_AS(gsm::scale_columns(with_zero), DomainError);
}

TEST_CASE("unscaling maps a scaled fit back to original units") {
  Eigen::MatrixXd data = tn_data(chain_K(3, 0.4), 4000, 17);
  const Eigen::Vector3d d(3.0, 1.0, 0.5);
  data = data * d.asDiagonal();  // imbalance the column norms
  auto h = h_vector(HFunction::power(1.0), 3);
  auto [scaled, sc] = gsm::scale_columns(data);

  auto fit_scaled = gsm::fit_regularized(assemble_centered(scaled, h, 1.0), 0.0);
  auto mapped = gsm::unscale_fit(fit_scaled, sc);

  // round-trip algebra and support preservation
  CHECK(mapped.support == fit_scaled.support);
  for (int j = 0; j < 3; ++j)
    for (int k = 0; k < 3; ++k)
      CHECK(std::abs(mapped.K(j, k) * sc.s[j] * sc.s[k] -
                     fit_scaled.K(j, k)) <= 1e-12);

  // the rescaled data follow a truncated Gaussian with precision D^-1 K0 D^-1,
  // which the mapped estimate must approach
  Eigen::MatrixXd K_true =
      d.cwiseInverse().asDiagonal() * chain_K(3, 0.4) *
      d.cwiseInverse().asDiagonal();
  CHECK((mapped.K - K_true).lpNorm<Eigen::Infinity>() <=
        0.15 * K_true.lpNorm<Eigen::Infinity>());
}

TEST_CASE("diagnostics fixtures") {
  auto h = HFunction::trunc_power(1.0, 3.0);
  auto d1 = gsm::diagnostics(Eigen::MatrixXd::Identity(5, 5),
                             Eigen::VectorXd::Zero(5), h, 2000, 1);
  CHECK(d1.d_k0 == 1);
  CHECK(std::abs(d1.c_k0 - 1.0) <= 1e-12);
  CHECK(d1.s0.empty());

  Eigen::MatrixXd K2(2, 2);
  K2 << 2.0, 1.0, 1.0, 2.0;
  auto d2 = gsm::diagnostics(K2, Eigen::VectorXd::Zero(2), h, 2000, 1);
  CHECK(std::abs(d2.c_k0 - 3.0) <= 1e-12);
  CHECK(d2.d_k0 == 2);
  REQUIRE(d2.s0.size() == 1);
  CHECK(d2.s0[0] == std::make_pair(0, 1));
  CHECK(d2.c_x > 0.0);

  CHECK_THROWS_AS(gsm::diagnostics(K2, Eigen::VectorXd::Zero(2), h, 50, 1),
                  DomainError);
}

TEST_CASE("diagnostics are stable across seeds") {
  // m=5, two edges, min eigenvalue 0.5
  Eigen::MatrixXd K0 = Eigen::MatrixXd::Identity(5, 5);
  K0(0, 1) = K0(1, 0) = 0.4;
  K0(2, 3) = K0(3, 2) = 0.4;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(K0, Eigen::EigenvaluesOnly);
  K0.diagonal().array() += 0.5 - es.eigenvalues().minCoeff();
  auto h = HFunction::trunc_power(1.0, 3.0);
  auto a = gsm::diagnostics(K0, Eigen::VectorXd::Zero(5), h, 40000, 11);
  auto b = gsm::diagnostics(K0, Eigen::VectorXd::Zero(5), h, 40000, 12);
  CHECK(std::abs(a.alpha_irrep - b.alpha_irrep) < 0.02);
  CHECK(std::abs(a.c_gamma0 - b.c_gamma0) <
        0.05 * (1.0 + std::abs(a.c_gamma0)));
  CHECK(a.s0 == b.s0);
}

TEST_CASE("fit result serializes to parseable json") {
  auto q = assemble_centered(tn_data(chain_K(3, 0.4), 100, 19),
                             h_vector(HFunction::trunc_power(1.0, 3.0), 3));
  auto fit = gsm::fit_regularized(q, 0.05);
  const std::string js = fit.to_json();
  CHECK(js.find("\"m\": 3") != std::string::npos);
  CHECK(js.find("\"K\"") != std::string::npos);
  CHECK(js.find("\"lambda\"") != std::string::npos);
  CHECK(js.find("\"support\"") != std::string::npos);
  CHECK(js.find("\"objective\"") != std::string::npos);
  CHECK(js.find("\"kkt_residual\"") != std::string::npos);
  CHECK(js.back() == '\n');
}

TEST_CASE("path csv has the documented columns") {
  auto q = assemble_centered(tn_data(chain_K(3, 0.4), 120, 23),
                             h_vector(HFunction::trunc_power(1.0, 3.0), 3));
  PathOptions opts;
  opts.lambda_count = 6;
  auto path = gsm::solution_path(q, opts);
  const std::string csv = path.to_csv();
  CHECK(csv.rfind("lambda,df,ebic_raw,ebic_refit\n", 0) == 0);
  CHECK(path.selected_raw >= 0);
  CHECK(path.selected_refit >= 0);
  CHECK(path.ebic_raw.size() == 6);
  CHECK(path.ebic_refit.size() == 6);
  CHECK(path.refits.size() == 6);

  PathOptions no_refit = opts;
  no_refit.ebic_refit = false;
  auto p2 = gsm::solution_path(q, no_refit);
  CHECK(p2.ebic_refit.empty());
  CHECK(p2.selected_refit == -1);
  CHECK(p2.to_csv().rfind("lambda,df,ebic_raw\n", 0) == 0);
}

TEST_CASE("explicit grids are validated") {
  auto q = assemble_centered(tn_data(chain_K(3, 0.4), 120, 29),
                             h_vector(HFunction::trunc_power(1.0, 3.0), 3));
  PathOptions opts;
  opts.grid = {0.5, 0.5, 0.1};
  CHECK_THROWS_AS(gsm::solution_path(q, opts), DomainError);
  opts.grid = {0.1, 0.5};
  CHECK_THROWS_AS(gsm::solution_path(q, opts), DomainError);
  opts.grid = {0.5, 0.1, -0.2};
  CHECK_THROWS_AS(gsm::solution_path(q, opts), DomainError);
}

TEST_CASE("eta penalty ratio") {
  Eigen::MatrixXd K0 = chain_K(3, 0.4);
  auto p = gsm::TNParams::from_mu(K0, Eigen::VectorXd::Constant(3, 0.5));
  auto data = gsm::sample(p, 400, 37).x;
  auto q = assemble_noncentered(data,
                                h_vector(HFunction::trunc_power(1.0, 3.0), 3));

  FitOptions unpen;  // ratio infinity: eta unpenalized
  auto f1 = gsm::fit_regularized(q, 0.1, unpen);
  CHECK(f1.lambda_eta == 0.0);
  CHECK(f1.eta.size() == 3);

  FitOptions pen;
  pen.ratio_k_eta = 2.0;
  auto f2 = gsm::fit_regularized(q, 0.1, pen);
  CHECK(std::abs(f2.lambda_eta - 0.05) <= 1e-15);
  // penalizing eta shrinks its l1 norm
  CHECK(f2.eta.lpNorm<1>() <= f1.eta.lpNorm<1>() + 1e-12);

  // strong eta penalty zeroes eta entirely but keeps the K part sensible
  FitOptions hard;
  hard.ratio_k_eta = 1e-6;
  auto f3 = gsm::fit_regularized(q, 0.1, hard);
  CHECK(f3.eta.lpNorm<Eigen::Infinity>() == 0.0);
}
