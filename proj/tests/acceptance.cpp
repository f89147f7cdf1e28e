// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails. Runtime budgets are part of each criterion.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "semsheaf/analysis.hpp"
#include "semsheaf/cli.hpp"
#include "semsheaf/dictionary_learning.hpp"
#include "semsheaf/sheaf_learning.hpp"
#include "semsheaf/synthetic_data.hpp"

using namespace semsheaf;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  std::string name;
  double budget_seconds;
  std::function<Outcome()> run;
};

double median(std::vector<double> x) {
  std::sort(x.begin(), x.end());
  const std::size_t n = x.size();
  return n % 2 ? x[n / 2] : 0.5 * (x[n / 2 - 1] + x[n / 2]);
}

std::string fmt(const char* format, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), format, a, b, c);
  return buf;
}

Matrix columns(const Matrix& M, const std::vector<int>& cols) {
  Matrix out(M.rows(), static_cast<Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) out.col(static_cast<Index>(j)) = M.col(cols[j]);
  return out;
}

// Sine of the largest principal angle between span(A) and span(B).
double subspace_distance(const Matrix& A, const Matrix& B) {
  const Matrix QA = Eigen::HouseholderQR<Matrix>(A).householderQ() * Matrix::Identity(A.rows(), A.cols());
  const Matrix QB = Eigen::HouseholderQR<Matrix>(B).householderQ() * Matrix::Identity(B.rows(), B.cols());
  const Eigen::JacobiSVD<Matrix> svd(QA.transpose() * QB);
  const double smallest_cos = std::min(1.0, svd.singularValues().minCoeff());
  return std::sqrt(std::max(0.0, 1.0 - smallest_cos * smallest_cos));
}

// Random sheaf with V <= 6, d <= 8 and a random edge subset.
ConnectionSheaf random_sheaf(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> pickV(2, 6), pickd(1, 8);
  std::bernoulli_distribution coin(0.5);
  ConnectionSheaf sheaf;
  sheaf.num_nodes = pickV(rng);
  sheaf.stalk_dim = pickd(rng);
  for (int u = 0; u < sheaf.num_nodes; ++u) {
    for (int v = u + 1; v < sheaf.num_nodes; ++v) {
      if (coin(rng)) sheaf.edges.push_back({u, v, oracle::random_orthogonal(sheaf.stalk_dim, rng())});
    }
  }
  return sheaf;
}

Outcome prox_correctness() {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> pick_cols(1, 8), pick_rows(1, 6);
  int instances = 0, failures = 0;
  double worst = 0.0;
  for (int t = 0; t < 200; ++t) {
    const Matrix Y = oracle::random_matrix(pick_rows(rng), pick_cols(rng), rng());
    for (int k = 1; k <= Y.cols(); ++k) {
      ++instances;
      const Matrix got = prox_group_20(Y, k);
      const Matrix want = oracle::brute_force_prox(Y, k);
      const bool same_support = nonzero_rows(got.transpose()) == nonzero_rows(want.transpose());
      const double err = (got - want).cwiseAbs().maxCoeff();
      worst = std::max(worst, err);
      if (!same_support || err > 1e-12) ++failures;
    }
  }
  return {failures == 0, fmt("%.0f instances, %.0f mismatches, max abs diff %.1e", instances, failures, worst)};
}

Outcome procrustes_optimality() {
  std::mt19937_64 rng(2);
  int grid_failures = 0;
  double worst_gap = -1e300;
  for (int t = 0; t < 100; ++t) {
    const Matrix Au = oracle::random_matrix(2, 10, rng());
    const Matrix Av = oracle::random_matrix(2, 10, rng());
    double best = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 720; ++k) {
      const double theta = 2.0 * M_PI * k / 720.0;
      Matrix R(2, 2);
      R << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
      best = std::min(best, oracle::misfit(R, Au, Av));
      R.col(1) *= -1.0;
      best = std::min(best, oracle::misfit(R, Au, Av));
    }
    const double loss = oracle::misfit(procrustes_align(Au, Av), Au, Av);
    worst_gap = std::max(worst_gap, loss - best);
    if (loss > best + 1e-3) ++grid_failures;
  }
  double worst_orth = 0.0, worst_recovery = 0.0;
  for (int t = 0; t < 100; ++t) {
    const Index d = 1 + static_cast<Index>(t % 16);
    const Matrix Q = oracle::random_orthogonal(d, rng());
    const Matrix Au = oracle::random_matrix(d, d + 5, rng());
    const Matrix O = procrustes_align(Au, Q * Au);
    worst_orth = std::max(worst_orth, (O.transpose() * O - Matrix::Identity(d, d)).norm());
    worst_recovery = std::max(worst_recovery, (O - Q).norm());
    const Matrix Bv = oracle::random_matrix(d, d + 5, rng());
    const Matrix O2 = procrustes_align(Au, Bv);
    worst_orth = std::max(worst_orth, (O2.transpose() * O2 - Matrix::Identity(d, d)).norm());
  }
  const bool pass = grid_failures == 0 && worst_orth <= 1e-10 && worst_recovery <= 1e-6;
  return {pass, fmt("loss - grid optimum max %.2e, orthogonality %.1e, recovery %.1e", worst_gap, worst_orth,
                    worst_recovery)};
}

Outcome sheaf_algebra() {
  std::mt19937_64 rng(3);
  double lap = 0.0, tv = 0.0, eig = 0.0;
  for (int t = 0; t < 100; ++t) {
    const auto sheaf = random_sheaf(rng);
    const Matrix delta = build_coboundary(sheaf);
    const auto L = build_sheaf_laplacian(sheaf);
    lap = std::max(lap, (L.matrix - oracle::matmul(oracle::transpose(delta), delta)).cwiseAbs().maxCoeff());
    std::vector<Matrix> blocks;
    for (int v = 0; v < sheaf.num_nodes; ++v) blocks.push_back(oracle::random_matrix(sheaf.stalk_dim, 4, rng()));
    double edges = 0.0;
    for (const auto& e : sheaf.edges) {
      edges += oracle::misfit(e.map, blocks[static_cast<std::size_t>(e.u)], blocks[static_cast<std::size_t>(e.v)]);
    }
    const double trace = total_variation(L, blocks);
    if (edges > 0.0) tv = std::max(tv, std::abs(trace - edges) / edges);
    if (edges == 0.0) tv = std::max(tv, std::abs(trace));
    const Eigen::SelfAdjointEigenSolver<Matrix> es(L.matrix);
    const double norm2 = es.eigenvalues().cwiseAbs().maxCoeff();
    if (norm2 > 0.0) eig = std::min(eig, es.eigenvalues().minCoeff() / norm2);
  }
  // Path tree with consistent maps O_uv = G_v G_u^T.
  bool tree_ok = true;
  for (Index d : {1, 3, 8}) {
    ConnectionSheaf tree;
    tree.num_nodes = 6;
    tree.stalk_dim = d;
    std::vector<Matrix> G;
    for (int v = 0; v < 6; ++v) G.push_back(oracle::random_orthogonal(d, rng()));
    for (int v = 1; v < 6; ++v) tree.edges.push_back({v / 2, v, G[static_cast<std::size_t>(v)] * G[static_cast<std::size_t>(v / 2)].transpose()});
    tree_ok = tree_ok && global_section_dim(build_sheaf_laplacian(tree), 1e-10) == d;
  }
  const bool pass = lap <= 1e-12 && tv <= 1e-8 && eig >= -1e-8 && tree_ok;
  return {pass, fmt("|L - dTd| %.1e, trace vs edge sum %.1e, min eig/|L| %.1e", lap, tv, eig) +
                    (tree_ok ? ", tree kernel = d" : ", tree kernel != d")};
}

Outcome surrogate_stationarity() {
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Matrix Dq = oracle::random_matrix(4, 4, 10 * seed + 1);
    const Matrix Sq = oracle::random_matrix(4, 20, 10 * seed + 2);
    const Matrix X = oracle::random_matrix(4, 20, 10 * seed + 3);
    const double gamma = 0.1;
    const auto lD = oracle::fd_gradient([&](const Matrix& D) { return objective_p2(D, Sq, X, gamma); }, Dq);
    const auto sD = oracle::fd_gradient([&](const Matrix& D) { return surrogate_objective(D, Sq, Dq, Sq, X, gamma); }, Dq);
    const auto lS = oracle::fd_gradient([&](const Matrix& S) { return objective_p2(Dq, S, X, gamma); }, Sq);
    const auto sS = oracle::fd_gradient([&](const Matrix& S) { return surrogate_objective(Dq, S, Dq, Sq, X, gamma); }, Sq);
    worst = std::max(worst, (lD - sD).norm() / lD.norm());
    worst = std::max(worst, (lS - sS).norm() / lS.norm());
  }
  return {worst <= 1e-4, fmt("20 points, max relative gradient gap %.2e", worst)};
}

Outcome dictionary_recovery() {
  SyntheticSpec spec;
  spec.num_agents = 4;
  spec.families = contiguous_families(4, 2);
  spec.dim = 16;
  spec.samples = 256;
  spec.support_size = 4;
  spec.noise_sigma = 0.0;
  spec.map_sharing = MapSharing::Identity;
  spec.seed = 7;
  const auto net = generate(spec);
  const auto X = net.stacked();
  LearnConfig config;
  config.budgets = {4};
  config.gamma = 0.01;
  const auto result = learn_dictionary(X, config);
  const Matrix& D = result.dictionary.atoms;

  double fit = 0.0;
  for (Index i = 0; i < X.num_agents(); ++i) {
    fit += (X.block(i) - D * result.codes[static_cast<std::size_t>(i)].codes).squaredNorm();
  }
  const double rel_fit = fit / X.stacked().squaredNorm();
  const double norm_err = (D.colwise().norm().array() - 1.0).abs().maxCoeff();

  // Agents of one family must share a row support, and that support must span
  // the planted atoms (atoms are identifiable up to a rotation inside it).
  bool supports_ok = true;
  double worst_angle = 0.0;
  for (int v = 0; v < spec.num_agents; ++v) {
    const auto support = nonzero_rows(result.codes[static_cast<std::size_t>(v)].codes);
    const int f = spec.family_of(v);
    const auto first = nonzero_rows(result.codes[static_cast<std::size_t>(f * 2)].codes);
    supports_ok = supports_ok && support == first && support.size() == 4;
    const double angle = subspace_distance(columns(D, support), columns(net.true_dictionary, net.true_supports[static_cast<std::size_t>(f)]));
    worst_angle = std::max(worst_angle, angle);
  }
  supports_ok = supports_ok && worst_angle <= 1e-3;
  const bool pass = rel_fit <= 1e-3 && norm_err <= 1e-6 && supports_ok && result.report.converged;
  std::ostringstream detail;
  detail << "fit " << fmt("%.1e", rel_fit) << ", atom norm error " << fmt("%.1e", norm_err)
         << ", support angle " << fmt("%.1e", worst_angle) << ", converged " << result.report.converged << " in "
         << result.report.iterations << " iterations";
  return {pass, detail.str()};
}

Outcome topology_recovery() {
  std::vector<double> best_ari;
  int wins = 0;
  std::ostringstream per_seed;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    SyntheticSpec spec;
    spec.num_agents = 9;
    spec.families = contiguous_families(9, 3);
    spec.dim = 16;
    spec.samples = 256;
    spec.support_size = 4;
    spec.between_family_divergence = 1.0;
    spec.noise_sigma = 0.05;
    spec.map_sharing = MapSharing::PerFamily;
    spec.seed = seed;
    const auto net = generate(spec);
    LearnConfig config;
    config.budgets = {4};
    config.gamma = 0.01;
    config.seed = seed;
    const auto dict = learn_dictionary(net.stacked(), config);
    config.edge_rule = TopK{36};
    const auto denoised = learn_sheaf(denoised_representations(dict.dictionary, dict.codes), config);
    const auto baseline = learn_sheaf(net.matrices(), config);
    double ari = 0.0;
    for (const auto& p : threshold_sweep(denoised, net.true_families)) ari = std::max(ari, p.ari);
    best_ari.push_back(ari);
    const double sep_d = edge_loss_stats(denoised.candidates, net.true_families).separation.value_or(-1e300);
    const double sep_b = edge_loss_stats(baseline.candidates, net.true_families).separation.value_or(-1e300);
    wins += sep_d > sep_b ? 1 : 0;
    per_seed << " [" << seed << ": ari " << fmt("%.2f", ari) << ", sep " << fmt("%.1f/%.1f", sep_d, sep_b) << "]";
  }
  const double med = median(best_ari);
  const bool pass = med >= 0.9 && wins >= 9;
  return {pass, fmt("median best ARI %.3f, denoised separation larger in %.0f/10 seeds;", med, wins) + per_seed.str()};
}

Outcome accuracy_sparsity() {
  const std::vector<int> budgets{4, 8, 12, 16};
  std::vector<double> rhos;
  int monotone = 0;
  std::ostringstream per_seed;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    SyntheticSpec spec;
    spec.num_agents = 6;
    spec.families = contiguous_families(6, 2);
    spec.dim = 16;
    spec.samples = 300;
    spec.num_classes = 10;
    spec.support_size = 12;
    spec.within_family_noise = 1.0;
    spec.between_family_divergence = 0.25;
    spec.noise_sigma = 0.05;
    spec.map_sharing = MapSharing::PerFamily;
    spec.energy_decay = 0.85;
    spec.normalize_codes = true;
    spec.seed = seed;
    const auto net = generate(spec);
    const auto X = net.stacked();
    const auto split = split_columns(spec.samples, seed);
    std::vector<double> acc, edges;
    for (int b : budgets) {
      LearnConfig config;
      config.budgets = {b};
      config.gamma = 0.01;
      config.seed = seed;
      config.edge_rule = Threshold{0.8};
      const auto dict = learn_dictionary(X, config);
      const auto sheaf = learn_sheaf(denoised_representations(dict.dictionary, dict.codes), config);
      const auto report = average_accuracy(sheaf, dict.dictionary, dict.codes, net.labels, split);
      acc.push_back(report.mean_accuracy.value_or(std::nan("")));
      edges.push_back(static_cast<double>(sheaf.edges.size()));
    }
    const double rho = spearman(std::vector<double>(budgets.begin(), budgets.end()), acc);
    rhos.push_back(std::isnan(rho) ? -1.0 : rho);
    const bool mono = std::is_sorted(edges.rbegin(), edges.rend());
    monotone += mono ? 1 : 0;
    per_seed << " [" << seed << ": acc";
    for (double a : acc) per_seed << " " << fmt("%.3f", a);
    per_seed << ", edges";
    for (double e : edges) per_seed << " " << e;
    per_seed << "]";
  }
  const double med = median(rhos);
  const bool pass = med >= 0.8 && monotone >= 7;
  return {pass, fmt("median Spearman %.3f, edge count monotone in %.0f/10 seeds;", med, monotone) + per_seed.str()};
}

Outcome determinism() {
  const auto root = oracle::temp_dir("acceptance_determinism");
  write_json(root / "spec.json", {{"num_agents", 6}, {"num_families", 2}, {"d", 12}, {"n", 120}, {"support_size", 4},
                                  {"noise_sigma", 0.05}, {"seed", 3}});
  std::ostringstream out, err;
  for (const char* run : {"a", "b"}) {
    const int code = run_cli({"pipeline", "--spec", (root / "spec.json").string(), "--out", (root / run).string(),
                              "--budget", "4", "--sweep", "budget=2,4,8"},
                             out, err);
    if (code != 0) return {false, "pipeline exited with " + std::to_string(code) + ": " + err.str()};
  }
  int files = 0, differing = 0;
  for (const auto& entry : fs::recursive_directory_iterator(root / "a")) {
    if (!entry.is_regular_file()) continue;
    ++files;
    const auto other = root / "b" / fs::relative(entry.path(), root / "a");
    if (!fs::exists(other) || read_file(entry.path()) != read_file(other)) ++differing;
  }
  int files_b = 0;
  for (const auto& entry : fs::recursive_directory_iterator(root / "b")) files_b += entry.is_regular_file() ? 1 : 0;
  const bool pass = differing == 0 && files == files_b && files > 0;
  return {pass, fmt("%.0f files compared, %.0f differ", files, differing + std::abs(files - files_b))};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {"prox correctness", 5, prox_correctness},
      {"procrustes optimality", 10, procrustes_optimality},
      {"sheaf algebra", 30, sheaf_algebra},
      {"surrogate stationarity", 30, surrogate_stationarity},
      {"dictionary recovery", 120, dictionary_recovery},
      {"topology recovery", 300, topology_recovery},
      {"accuracy-sparsity trend", 300, accuracy_sparsity},
      {"determinism", 60, determinism},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs < c.budget_seconds;
    const bool pass = o.pass && in_time;
    failed += pass ? 0 : 1;
    std::printf("%s %s: %s; %.1f s of %.0f s%s\n", pass ? "PASS" : "FAIL", c.name.c_str(), o.detail.c_str(), secs,
                c.budget_seconds, in_time ? "" : " (over time budget)");
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
