#include "gsm/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <thread>

#include "gsm/expfam.hpp"
#include "gsm/io.hpp"
#include "gsm/rng.hpp"
#include "gsm/truncated_normal.hpp"

namespace gsm {

namespace {

constexpr int kRocGrid = 201;

// seed streams, one tag per purpose
constexpr std::uint64_t kTagMatrix = 0x4B30;
constexpr std::uint64_t kTagMu = 0x6D750000;
constexpr std::uint64_t kTagData = 0x53500000;

// curve cleanup for interpolation: sort by fpr, keep max tpr per fpr
std::vector<std::pair<double, double>> staircase(
    std::vector<std::pair<double, double>> pts) {
  if (pts.empty()) throw DomainError("empty ROC curve");
  pts.emplace_back(0.0, 0.0);
  std::sort(pts.begin(), pts.end());
  std::vector<std::pair<double, double>> out;
  for (const auto& p : pts) {
    if (!out.empty() && out.back().first == p.first)
      out.back().second = std::max(out.back().second, p.second);
    else
      out.push_back(p);
  }
  return out;
}

// linear interpolation on the cleaned curve, flat beyond the last point
double tpr_at(const std::vector<std::pair<double, double>>& stair, double f) {
  if (f <= stair.front().first) return stair.front().second;
  if (f >= stair.back().first) return stair.back().second;
  auto hi = std::upper_bound(stair.begin(), stair.end(),
                             std::make_pair(f, std::numeric_limits<double>::infinity()));
  auto lo = hi - 1;
  const double span = hi->first - lo->first;
  if (span <= 0.0) return std::max(lo->second, hi->second);
  const double w = (f - lo->first) / span;
  return lo->second + w * (hi->second - lo->second);
}

std::vector<double> grid_sample(
    const std::vector<std::pair<double, double>>& roc) {
  const auto stair = staircase(roc);
  std::vector<double> t(kRocGrid);
  for (int i = 0; i < kRocGrid; ++i)
    t[i] = tpr_at(stair, static_cast<double>(i) / (kRocGrid - 1));
  return t;
}

double grid_auc(const std::vector<double>& t) {
  double area = 0.0;
  const double df = 1.0 / (kRocGrid - 1);
  for (int i = 0; i + 1 < kRocGrid; ++i)
    area += 0.5 * (t[i] + t[i + 1]) * df;
  // roundoff can push a full-box curve infinitesimally past 1
  return std::min(1.0, std::max(0.0, area));
}

std::string sanitize(const std::string& id) {
  std::string out = id;
  std::replace(out.begin(), out.end(), ':', '_');
  return out;
}

std::pair<double, double> confusion_point(
    const std::vector<std::pair<int, int>>& shat,
    const std::vector<std::pair<int, int>>& s0, long total_edges) {
  long tp = 0, fp = 0;
  for (const auto& e : shat) {
    if (std::binary_search(s0.begin(), s0.end(), e))
      ++tp;
    else
      ++fp;
  }
  const long negatives = total_edges - static_cast<long>(s0.size());
  const double tpr = static_cast<double>(tp) / static_cast<double>(s0.size());
  const double fpr = negatives > 0
                         ? static_cast<double>(fp) / static_cast<double>(negatives)
                         : 0.0;
  return {fpr, tpr};
}

}  // namespace

void ExperimentConfig::validate() const {
  if (m < 2) throw DomainError("m must be at least 2");
  if (n < 2) throw DomainError("n must be at least 2");
  if (n_blocks < 1 || m % n_blocks != 0)
    throw DomainError("m must be divisible by n_blocks");
  if (!(pi >= 0.0 && pi <= 1.0)) throw DomainError("pi must lie in [0,1]");
  if (!(edge_range.first <= edge_range.second))
    throw DomainError("edge_range must be a valid interval");
  if (!(min_eigenvalue > 0.0))
    throw DomainError("min_eigenvalue must be positive");
  if (mu_sd < 0.0) throw DomainError("mu_sd must be non-negative");
  if (h_ids.empty()) throw DomainError("at least one h is required");
  for (const auto& id : h_ids) HFunction::parse(id);  // rejects bad ids
  if (lambda_count < 1) throw DomainError("lambda_count must be >= 1");
  if (trials < 1) throw DomainError("trials must be >= 1");
  if (matrices < 1 || trials % matrices != 0)
    throw DomainError("trials must be divisible by matrices");
  if (threads < 1) throw DomainError("threads must be >= 1");
  if (!(ratio_k_eta > 0.0))
    throw DomainError("ratio_k_eta must be positive (or Inf)");
  if (diag_multiplier < 1.0) throw DomainError("diag_multiplier must be >= 1");
}

std::string ExperimentConfig::to_json() const {
  nlohmann::ordered_json j;
  j["m"] = m;
  j["n"] = n;
  j["n_blocks"] = n_blocks;
  j["pi"] = pi;
  j["edge_range"] = {edge_range.first, edge_range.second};
  j["min_eigenvalue"] = min_eigenvalue;
  j["centered"] = centered;
  j["mu_sd"] = mu_sd;
  j["h"] = h_ids;
  j["lambda_count"] = lambda_count;
  j["trials"] = trials;
  j["matrices"] = matrices;
  j["seed"] = seed;
  j["threads"] = threads;
  if (std::isinf(ratio_k_eta))
    j["ratio_k_eta"] = "Inf";
  else
    j["ratio_k_eta"] = ratio_k_eta;
  j["diag_multiplier"] = diag_multiplier;
  j["ebic_refit"] = ebic_refit;
  j["screening"] = screening;
  j["scale"] = scale;
  return j.dump(2);
}

Eigen::MatrixXd gen_K0(const ExperimentConfig& config, std::uint64_t seed) {
  config.validate();
  const int m = config.m;
  const int mb = m / config.n_blocks;
  Rng rng(seed);
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m, m);
  for (int b = 0; b < config.n_blocks; ++b) {
    const int lo = b * mb;
    for (int c = lo; c < lo + mb; ++c)
      for (int r = c + 1; r < lo + mb; ++r) {
        if (rng.uniform() < config.pi) continue;
        const double v = config.edge_range.first +
                         (config.edge_range.second - config.edge_range.first) *
                             rng.uniform();
        A(r, c) = A(c, r) = v;
      }
  }
  // eigenvalues of A + dI are shifted eigenvalues of A, so the target
  // minimum is hit directly
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A,
                                                    Eigen::EigenvaluesOnly);
  const double d = config.min_eigenvalue - es.eigenvalues().minCoeff();
  A.diagonal().array() += d;
  return A;
}

std::vector<std::pair<double, double>> roc_curve(
    const PathResult& path, const std::vector<std::pair<int, int>>& s0) {
  if (path.fits.empty()) throw DomainError("empty path");
  if (s0.empty())
    throw DomainError(
        "true support is empty so TPR is undefined; generate K0 with pi < 1");
  const int m = static_cast<int>(path.fits.front().K.rows());
  if (m < 2)
    throw DomainError("path fits carry no dimension (K is empty)");
  const long total_edges = static_cast<long>(m) * (m - 1) / 2;
  std::vector<std::pair<int, int>> s0s = s0;
  std::sort(s0s.begin(), s0s.end());
  std::vector<std::pair<double, double>> pts;
  pts.emplace_back(0.0, 0.0);
  for (const auto& fit : path.fits)
    pts.push_back(confusion_point(fit.support, s0s, total_edges));
  return pts;
}

double auc(const std::vector<std::pair<double, double>>& roc) {
  return grid_auc(grid_sample(roc));
}

std::vector<std::pair<double, double>> vertical_average(
    const std::vector<std::vector<std::pair<double, double>>>& curves) {
  if (curves.empty()) throw DomainError("no ROC curves to average");
  std::vector<double> acc(kRocGrid, 0.0);
  for (const auto& c : curves) {
    const auto t = grid_sample(c);
    for (int i = 0; i < kRocGrid; ++i) acc[i] += t[i];
  }
  std::vector<std::pair<double, double>> out(kRocGrid);
  for (int i = 0; i < kRocGrid; ++i)
    out[i] = {static_cast<double>(i) / (kRocGrid - 1),
              acc[i] / static_cast<double>(curves.size())};
  return out;
}

namespace {

std::vector<std::pair<int, int>> support_of(const Eigen::MatrixXd& K) {
  std::vector<std::pair<int, int>> s;
  for (int k = 1; k < K.cols(); ++k)
    for (int j = 0; j < k; ++j)
      if (K(j, k) != 0.0) s.emplace_back(j, k);
  return s;
}

void run_trial(const ExperimentConfig& config, long t,
               const std::vector<Eigen::MatrixXd>& k0s, TrialMeta& meta,
               std::vector<std::vector<TrialResult>>& results) {
  const int per_matrix = config.trials / config.matrices;
  meta.trial = t;
  meta.matrix_index = static_cast<int>(t / per_matrix);
  meta.mu_seed = derive_seed(config.seed, kTagMu + static_cast<std::uint64_t>(t));
  meta.data_seed =
      derive_seed(config.seed, kTagData + static_cast<std::uint64_t>(t));
  const Eigen::MatrixXd& K0 = k0s[meta.matrix_index];
  const auto s0 = support_of(K0);

  Eigen::MatrixXd data;
  Eigen::VectorXd mu0;
  try {
    TNParams p;
    if (config.centered) {
      p = TNParams::centered_K(K0);
    } else {
      Rng mu_rng(meta.mu_seed);
      mu0.resize(config.m);
      for (int j = 0; j < config.m; ++j) mu0[j] = config.mu_sd * mu_rng.normal();
      p = TNParams::from_mu(K0, mu0);
    }
    SampleResult sr = sample(p, config.n, meta.data_seed);
    data = std::move(sr.x);
    meta.sample_method = sr.method_used;
    meta.warnings = std::move(sr.warnings);
    meta.data_ok = true;
  } catch (const std::exception& e) {
    meta.error = e.what();
    for (size_t hi = 0; hi < config.h_ids.size(); ++hi) {
      TrialResult& tr = results[hi][t];
      tr.trial = t;
      tr.error = std::string("sampling failed: ") + e.what();
    }
    return;
  }

  for (size_t hi = 0; hi < config.h_ids.size(); ++hi) {
    TrialResult& tr = results[hi][t];
    tr.trial = t;
    try {
      const HFunction h = HFunction::parse(config.h_ids[hi]);
      Eigen::MatrixXd x = data;
      if (config.scale) x = scale_columns(data).first;
      const auto hs = h_vector(h, config.m);
      const BlockQuadratic q =
          config.centered
              ? assemble_centered(x, hs, config.diag_multiplier)
              : assemble_noncentered(x, hs, config.diag_multiplier);
      PathOptions popts;
      popts.fit.ratio_k_eta = config.ratio_k_eta;
      popts.lambda_count = config.lambda_count;
      popts.screening = config.screening;
      popts.ebic_refit = config.ebic_refit;
      const PathResult path = solution_path(q, popts);
      tr.roc = roc_curve(path, s0);
      tr.auc = auc(tr.roc);
      const int sel = config.ebic_refit ? path.selected_refit
                                        : path.selected_raw;
      const long total_edges =
          static_cast<long>(config.m) * (config.m - 1) / 2;
      auto s0s = s0;
      std::sort(s0s.begin(), s0s.end());
      const auto pt =
          confusion_point(path.fits[sel].support, s0s, total_edges);
      tr.ebic_fpr = pt.first;
      tr.ebic_tpr = pt.second;
      tr.ok = true;
    } catch (const std::exception& e) {
      tr.error = e.what();
    }
  }
}

}  // namespace

ExperimentSummary run_experiment(const ExperimentConfig& config) {
  config.validate();
  ExperimentSummary summary;
  summary.config = config;

  std::vector<Eigen::MatrixXd> k0s;
  k0s.reserve(config.matrices);
  for (int a = 0; a < config.matrices; ++a)
    k0s.push_back(gen_K0(
        config, derive_seed(config.seed, kTagMatrix + static_cast<std::uint64_t>(a))));

  summary.trial_meta.resize(config.trials);
  summary.results.assign(config.h_ids.size(),
                         std::vector<TrialResult>(config.trials));

  const int threads = std::max(1, config.threads);
  if (threads == 1) {
    for (long t = 0; t < config.trials; ++t)
      run_trial(config, t, k0s, summary.trial_meta[t], summary.results);
  } else {
    std::atomic<long> next{0};
    auto worker = [&]() {
      for (long t; (t = next.fetch_add(1)) < config.trials;)
        run_trial(config, t, k0s, summary.trial_meta[t], summary.results);
    };
    std::vector<std::thread> pool;
    for (int w = 0; w < threads - 1; ++w) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
  }

  for (size_t hi = 0; hi < config.h_ids.size(); ++hi) {
    HSummary hs;
    hs.h_id = config.h_ids[hi];
    std::vector<std::vector<std::pair<double, double>>> curves;
    std::vector<double> aucs;
    double fsum = 0.0, tsum = 0.0;
    for (long t = 0; t < config.trials; ++t) {
      const TrialResult& tr = summary.results[hi][t];
      if (!tr.ok) continue;
      curves.push_back(tr.roc);
      aucs.push_back(tr.auc);
      fsum += tr.ebic_fpr;
      tsum += tr.ebic_tpr;
    }
    hs.n_ok = static_cast<long>(curves.size());
    if (hs.n_ok > 0) {
      hs.avg_roc = vertical_average(curves);
      double mean = 0.0;
      for (double a : aucs) mean += a;
      mean /= static_cast<double>(aucs.size());
      hs.mean_auc = mean;
      if (aucs.size() > 1) {
        double ss = 0.0;
        for (double a : aucs) ss += (a - mean) * (a - mean);
        hs.sd_auc = std::sqrt(ss / static_cast<double>(aucs.size() - 1));
      }
      hs.mean_ebic_fpr = fsum / static_cast<double>(hs.n_ok);
      hs.mean_ebic_tpr = tsum / static_cast<double>(hs.n_ok);
    }
    summary.per_h.push_back(std::move(hs));
  }
  return summary;
}

void write_summary(const ExperimentSummary& summary, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  for (const auto& hs : summary.per_h) {
    std::string csv = "fpr,tpr\n";
    for (const auto& [f, t] : hs.avg_roc) {
      csv += format_double(f);
      csv += ',';
      csv += format_double(t);
      csv += '\n';
    }
    atomic_write_file((fs::path(dir) / ("roc_" + sanitize(hs.h_id) + ".csv")).string(),
                      csv);
  }
  {
    std::string csv = "h_id,mean_auc,sd_auc\n";
    for (const auto& hs : summary.per_h) {
      csv += hs.h_id;
      csv += ',';
      csv += format_double(hs.mean_auc);
      csv += ',';
      csv += format_double(hs.sd_auc);
      csv += '\n';
    }
    atomic_write_file((fs::path(dir) / "auc_summary.csv").string(), csv);
  }
  {
    std::string csv = "h_id,trial,fpr,tpr\n";
    for (size_t hi = 0; hi < summary.results.size(); ++hi)
      for (const auto& tr : summary.results[hi]) {
        if (!tr.ok) continue;
        csv += summary.config.h_ids[hi];
        csv += ',';
        csv += std::to_string(tr.trial);
        csv += ',';
        csv += format_double(tr.ebic_fpr);
        csv += ',';
        csv += format_double(tr.ebic_tpr);
        csv += '\n';
      }
    atomic_write_file((fs::path(dir) / "ebic_points.csv").string(), csv);
  }
  {
    nlohmann::ordered_json j;
    j["config"] = nlohmann::ordered_json::parse(summary.config.to_json());
    nlohmann::ordered_json trials = nlohmann::ordered_json::array();
    for (const auto& meta : summary.trial_meta) {
      nlohmann::ordered_json tj;
      tj["trial"] = meta.trial;
      tj["matrix_index"] = meta.matrix_index;
      tj["mu_seed"] = meta.mu_seed;
      tj["data_seed"] = meta.data_seed;
      tj["sample_method"] = meta.sample_method;
      tj["warnings"] = meta.warnings;
      tj["data_ok"] = meta.data_ok;
      if (!meta.error.empty()) tj["error"] = meta.error;
      nlohmann::ordered_json per_h = nlohmann::ordered_json::array();
      for (size_t hi = 0; hi < summary.results.size(); ++hi) {
        const TrialResult& tr = summary.results[hi][meta.trial];
        nlohmann::ordered_json hj;
        hj["h_id"] = summary.config.h_ids[hi];
        hj["ok"] = tr.ok;
        if (!tr.ok) hj["error"] = tr.error;
        if (tr.ok) hj["auc"] = tr.auc;
        per_h.push_back(std::move(hj));
      }
      tj["results"] = std::move(per_h);
      trials.push_back(std::move(tj));
    }
    j["trials"] = std::move(trials);
    atomic_write_file((fs::path(dir) / "manifest.json").string(),
                      j.dump(2) + "\n");
  }
}

}  // namespace gsm
