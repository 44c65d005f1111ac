#include "gsm/truncated_normal.hpp"

#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <nlohmann/json.hpp>

#include "gsm/errors.hpp"
#include "gsm/rng.hpp"

namespace gsm {

namespace {

void check_nonneg(const Eigen::VectorXd& x) {
  for (Eigen::Index j = 0; j < x.size(); ++j)
    if (x[j] < 0.0)
      throw DomainError("coordinate " + std::to_string(j + 1) +
                        " is negative; domain is the non-negative orthant");
}

const boost::math::normal_distribution<double> kStdNormal(0.0, 1.0);

}  // namespace

TNParams TNParams::from_mu(const Eigen::MatrixXd& K, const Eigen::VectorXd& mu) {
  TNParams p;
  p.m = static_cast<int>(K.rows());
  p.K = K;
  p.mu = mu;
  p.centered = (mu.size() == 0) || (mu.lpNorm<Eigen::Infinity>() == 0.0);
  if (p.mu.size() == 0) p.mu = Eigen::VectorXd::Zero(p.m);
  p.validate();
  return p;
}

TNParams TNParams::from_eta(const Eigen::MatrixXd& K, const Eigen::VectorXd& eta) {
  TNParams p;
  p.m = static_cast<int>(K.rows());
  p.K = K;
  p.centered = eta.lpNorm<Eigen::Infinity>() == 0.0;
  p.mu = Eigen::VectorXd::Zero(p.m);
  p.validate();  // checks K before solving
  if (!p.centered) p.mu = K.ldlt().solve(eta);
  return p;
}

TNParams TNParams::centered_K(const Eigen::MatrixXd& K) {
  return from_mu(K, Eigen::VectorXd::Zero(K.rows()));
}

TNParams TNParams::identity(int m) {
  return centered_K(Eigen::MatrixXd::Identity(m, m));
}

void TNParams::validate() const {
  if (m <= 0) throw DomainError("dimension m must be positive");
  if (K.rows() != m || K.cols() != m)
    throw DomainError("K must be " + std::to_string(m) + "x" + std::to_string(m));
  if (mu.size() != m) throw DomainError("mu must have length m");
  const double asym = (K - K.transpose()).lpNorm<Eigen::Infinity>();
  if (asym > 1e-12)
    throw DomainError("K is not symmetric (max asymmetry " +
                      std::to_string(asym) + ")");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(K, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() <= 1e-10)
    throw DomainError("K is not positive definite (min eigenvalue " +
                      std::to_string(es.eigenvalues().minCoeff()) + ")");
  if (centered && mu.lpNorm<Eigen::Infinity>() != 0.0)
    throw DomainError("centered flag set but mu is nonzero");
}

std::string TNParams::to_json() const {
  nlohmann::ordered_json j;
  j["m"] = m;
  std::vector<double> kflat(static_cast<size_t>(m) * m);
  for (int r = 0; r < m; ++r)
    for (int c = 0; c < m; ++c) kflat[static_cast<size_t>(r) * m + c] = K(r, c);
  j["K"] = kflat;
  j["mu"] = std::vector<double>(mu.data(), mu.data() + m);
  j["centered"] = centered;
  return j.dump(2) + "\n";
}

TNParams TNParams::from_json(const std::string& text, const std::string& origin) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const std::exception& e) {
    throw DomainError("invalid JSON in " + origin + ": " + e.what());
  }
  if (!j.contains("m") || !j.contains("K"))
    throw DomainError(origin + ": fields m and K are required");
  const int m = j["m"].get<int>();
  if (m <= 0) throw DomainError(origin + ": m must be positive");
  auto kflat = j["K"].get<std::vector<double>>();
  if (kflat.size() != static_cast<size_t>(m) * m)
    throw DomainError(origin + ": K must have m*m entries (row-major)");
  Eigen::MatrixXd K(m, m);
  for (int r = 0; r < m; ++r)
    for (int c = 0; c < m; ++c) K(r, c) = kflat[static_cast<size_t>(r) * m + c];
  const bool centered = j.value("centered", !(j.contains("mu") || j.contains("eta")));
  if (j.contains("mu") && j.contains("eta"))
    throw DomainError(origin + ": give mu or eta, not both");
  if (centered || !(j.contains("mu") || j.contains("eta")))
    return TNParams::centered_K(K);
  if (j.contains("mu")) {
    auto v = j["mu"].get<std::vector<double>>();
    if (v.size() != static_cast<size_t>(m))
      throw DomainError(origin + ": mu must have m entries");
    return TNParams::from_mu(K, Eigen::Map<Eigen::VectorXd>(v.data(), m));
  }
  auto v = j["eta"].get<std::vector<double>>();
  if (v.size() != static_cast<size_t>(m))
    throw DomainError(origin + ": eta must have m entries");
  return TNParams::from_eta(K, Eigen::Map<Eigen::VectorXd>(v.data(), m));
}

double log_density_unnormalized(const TNParams& p, const Eigen::VectorXd& x) {
  if (x.size() != p.m) throw DomainError("x must have length m");
  check_nonneg(x);
  const Eigen::VectorXd d = x - p.mu;
  return -0.5 * d.dot(p.K * d);
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> grad_and_diag_hessian(
    const TNParams& p, const Eigen::VectorXd& x) {
  if (x.size() != p.m) throw DomainError("x must have length m");
  check_nonneg(x);
  return {-(p.K * (x - p.mu)), -p.K.diagonal()};
}

SampleMethod parse_sample_method(const std::string& name) {
  if (name == "auto") return SampleMethod::Auto;
  if (name == "rejection") return SampleMethod::Rejection;
  if (name == "gibbs") return SampleMethod::Gibbs;
  throw DomainError("unknown sample method '" + name +
                    "' (auto|rejection|gibbs)");
}

double truncated_normal_draw(double mean, double sd, double u) {
  // standardized lower bound: accept Z >= alpha, x = mean + sd * Z
  const double alpha = -mean / sd;
  double z;
  if (alpha <= 0.0) {
    const double ca = cdf(kStdNormal, alpha);
    z = quantile(kStdNormal, ca + u * (1.0 - ca));
  } else {
    // deep truncation: work in the upper tail with complements
    const double sa = cdf(complement(kStdNormal, alpha));
    z = quantile(complement(kStdNormal, (1.0 - u) * sa));
  }
  double x = mean + sd * z;
  return x > 0.0 ? x : 0.0;
}

namespace {

// Draws one rejection proposal x = mu + L^-T z, z standard normal,
// where K = L L^T.
Eigen::VectorXd mvn_draw(const Eigen::VectorXd& mu,
                         const Eigen::MatrixXd& Lt_inv_basis, Rng& rng,
                         Eigen::VectorXd& z) {
  for (Eigen::Index j = 0; j < z.size(); ++j) z[j] = rng.normal();
  return mu + Lt_inv_basis * z;
}

SampleResult sample_rejection(const TNParams& p, long n, Rng& rng) {
  SampleResult out;
  out.method_used = "rejection";
  const Eigen::LLT<Eigen::MatrixXd> llt(p.K);
  if (llt.info() != Eigen::Success)
    throw NumericError("Cholesky factorization of K failed");
  // x = mu + L^-T z has covariance K^-1
  Eigen::MatrixXd Lt_inv = Eigen::MatrixXd::Identity(p.m, p.m);
  llt.matrixU().solveInPlace(Lt_inv);

  out.x.resize(n, p.m);
  Eigen::VectorXd z(p.m);
  long filled = 0;
  long proposals = 0;
  const long probe = 50000;
  while (filled < n) {
    Eigen::VectorXd x = mvn_draw(p.mu, Lt_inv, rng, z);
    ++proposals;
    if ((x.array() >= 0.0).all()) {
      out.x.row(filled++) = x.transpose();
    }
    if (proposals == probe && filled < std::max(1L, probe / 10000)) {
      throw NumericError(
          "rejection sampler acceptance rate below 1e-4 over a probe batch; "
          "use method=gibbs");
    }
  }
  return out;
}

SampleResult sample_gibbs(const TNParams& p, long n, Rng& rng,
                          const SampleOptions& opts) {
  SampleResult out;
  out.method_used = "gibbs";
  out.warnings.push_back(
      "gibbs draws are approximately independent (burn-in " +
      std::to_string(opts.burn_in) + ", thinning " +
      std::to_string(opts.thinning) + ")");
  const int m = p.m;
  Eigen::VectorXd sd(m);
  for (int j = 0; j < m; ++j) sd[j] = 1.0 / std::sqrt(p.K(j, j));

  // start at the mode of the truncated density approximated coordinate-wise
  Eigen::VectorXd x(m);
  for (int j = 0; j < m; ++j) x[j] = std::max(p.mu[j], sd[j]);

  out.x.resize(n, m);
  auto sweep = [&]() {
    for (int j = 0; j < m; ++j) {
      double dot = 0.0;
      for (int k = 0; k < m; ++k)
        if (k != j) dot += p.K(j, k) * (x[k] - p.mu[k]);
      const double cmean = p.mu[j] - dot / p.K(j, j);
      x[j] = truncated_normal_draw(cmean, sd[j], rng.uniform());
    }
  };
  for (int b = 0; b < opts.burn_in; ++b) sweep();
  for (long i = 0; i < n; ++i) {
    for (int t = 0; t < opts.thinning; ++t) sweep();
    out.x.row(i) = x.transpose();
  }
  return out;
}

double probe_acceptance(const TNParams& p, std::uint64_t seed) {
  Rng rng(derive_seed(seed, 0xACCE77));
  const Eigen::LLT<Eigen::MatrixXd> llt(p.K);
  if (llt.info() != Eigen::Success) return 0.0;
  Eigen::MatrixXd Lt_inv = Eigen::MatrixXd::Identity(p.m, p.m);
  llt.matrixU().solveInPlace(Lt_inv);
  Eigen::VectorXd z(p.m);
  const int probes = 2000;
  int acc = 0;
  for (int i = 0; i < probes; ++i) {
    Eigen::VectorXd x = mvn_draw(p.mu, Lt_inv, rng, z);
    if ((x.array() >= 0.0).all()) ++acc;
  }
  return static_cast<double>(acc) / probes;
}

}  // namespace

SampleResult sample(const TNParams& p, long n, std::uint64_t seed,
                    const SampleOptions& opts) {
  if (n < 1) throw DomainError("sample count n must be >= 1");
  p.validate();
  SampleMethod method = opts.method;
  if (method == SampleMethod::Auto) {
    if (p.m <= 3 || probe_acceptance(p, seed) >= 0.05)
      method = SampleMethod::Rejection;
    else
      method = SampleMethod::Gibbs;
  }
  Rng rng(derive_seed(seed, 0x7A11));
  if (method == SampleMethod::Rejection) return sample_rejection(p, n, rng);
  return sample_gibbs(p, n, rng, opts);
}

}  // namespace gsm
