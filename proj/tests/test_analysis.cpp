#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "oracles.hpp"
#include "semsheaf/analysis.hpp"
#include "semsheaf/synthetic_data.hpp"

using namespace semsheaf;

namespace {

std::vector<int> random_labels(std::size_t n, int classes, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, classes - 1);
  std::vector<int> labels(n);
  for (auto& l : labels) l = pick(rng);
  return labels;
}

// Columns drawn around well separated class means.
Matrix clustered(Index d, const std::vector<int>& labels, double spread, std::uint64_t seed) {
  const int classes = *std::max_element(labels.begin(), labels.end()) + 1;
  const Matrix means = oracle::random_matrix(d, classes, seed, 3.0);
  Matrix X = oracle::random_matrix(d, static_cast<Index>(labels.size()), seed + 1, spread);
  for (std::size_t j = 0; j < labels.size(); ++j) X.col(static_cast<Index>(j)) += means.col(labels[j]);
  return X;
}

ConnectionSheaf single_edge(int V, Index d, int u, int v, const Matrix& map) {
  ConnectionSheaf sheaf;
  sheaf.num_nodes = V;
  sheaf.stalk_dim = d;
  sheaf.edges.push_back({u, v, map});
  return sheaf;
}

}  // namespace

TEST_CASE("semantic signature examples") {
  CHECK(semantic_signature({0, Matrix::Zero(4, 6), 4}).values == Vector::Zero(4));
  Matrix S = Matrix::Zero(4, 3);
  S(2, 0) = 2.0;
  const auto sig = semantic_signature({5, S, 1});
  CHECK(sig.agent_id == 5);
  CHECK(sig.values == 2.0 * Vector::Unit(4, 2));
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Matrix R = oracle::random_matrix(5, 7, seed);
    const auto values = semantic_signature({0, R, 5}).values;
    for (Index r = 0; r < 5; ++r) {
      double sum = 0.0;
      for (Index c = 0; c < 7; ++c) sum += R(r, c) * R(r, c);
      CHECK(std::abs(values(r) - std::sqrt(sum)) <= 1e-12 * std::sqrt(sum));
    }
  }
}

TEST_CASE("signature similarity examples") {
  Vector a(3), b(3), z = Vector::Zero(3);
  a << 1, 2, 0;
  b << 0, 0, 5;
  const auto r = signature_similarity({{0, a}, {1, 3.0 * a}, {2, b}, {3, z}});
  CHECK(r.similarity(0, 1) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(r.similarity(0, 2) == 0.0);
  CHECK(r.similarity(3, 0) == 0.0);
  CHECK(r.similarity(3, 3) == 0.0);
  CHECK(std::count(r.zero_pairs.begin(), r.zero_pairs.end(), std::make_pair(0, 3)) == 1);
  CHECK(std::count(r.zero_pairs.begin(), r.zero_pairs.end(), std::make_pair(3, 3)) == 1);
  CHECK(oracle::thrown_kind([&] { signature_similarity({{0, a}, {1, Vector::Ones(4)}}); }) ==
        ErrorKind::DimensionMismatch);
}

TEST_CASE("signature similarity is symmetric with unit diagonal") {
  std::vector<SemanticSignature> sigs;
  for (int i = 0; i < 6; ++i) {
    sigs.push_back(semantic_signature({i, oracle::random_matrix(5, 4, 10 + static_cast<std::uint64_t>(i)), 5}));
  }
  const Matrix M = signature_similarity(sigs).similarity;
  CHECK((M - M.transpose()).norm() == 0.0);
  for (Index i = 0; i < 6; ++i) CHECK(M(i, i) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("two-family signatures are more similar within families") {
  SyntheticSpec spec;
  spec.num_agents = 6;
  spec.families = contiguous_families(6, 2);
  spec.dim = 12;
  spec.support_size = 4;
  spec.seed = 4;
  const auto net = generate(spec);
  std::vector<SemanticSignature> sigs;
  for (int v = 0; v < 6; ++v) {
    sigs.push_back(semantic_signature({v, net.true_codes[static_cast<std::size_t>(spec.family_of(v))], 4}));
  }
  const Matrix M = signature_similarity(sigs).similarity;
  double within = 0.0, between = 0.0;
  int nw = 0, nb = 0;
  for (int u = 0; u < 6; ++u) {
    for (int v = u + 1; v < 6; ++v) {
      if (spec.family_of(u) == spec.family_of(v)) {
        within += M(u, v);
        ++nw;
      } else {
        between += M(u, v);
        ++nb;
      }
    }
  }
  CHECK(within / nw > between / nb);
  CHECK(between == 0.0);
}

TEST_CASE("train/test split") {
  const auto s = split_columns(100, 7);
  CHECK(s.train.size() == 80);
  CHECK(s.test.size() == 20);
  CHECK(std::is_sorted(s.train.begin(), s.train.end()));
  CHECK(std::is_sorted(s.test.begin(), s.test.end()));
  std::set<Index> all(s.train.begin(), s.train.end());
  all.insert(s.test.begin(), s.test.end());
  CHECK(all.size() == 100);
  CHECK(split_columns(100, 7).test == s.test);
  CHECK(split_columns(100, 8).test != s.test);
}

TEST_CASE("nearest centroid accuracy") {
  Matrix train(1, 4), test(1, 3);
  train << 0.0, 0.2, 10.0, 10.2;
  test << 0.5, 9.0, 7.0;
  CHECK(nearest_centroid_accuracy(train, {0, 0, 1, 1}, test, {0, 1, 1}) == doctest::Approx(1.0));
  CHECK(nearest_centroid_accuracy(train, {0, 0, 1, 1}, test, {1, 1, 1}) == doctest::Approx(2.0 / 3.0));
  // Equidistant point goes to the lower class.
  Matrix mid(1, 1);
  mid << 5.1;
  CHECK(nearest_centroid_accuracy(train, {0, 0, 1, 1}, mid, {0}) == 1.0);
  // A class never seen in training is never predicted.
  Matrix far(1, 1);
  far << 100.0;
  CHECK(nearest_centroid_accuracy(train, {0, 0, 2, 2}, far, {2}) == 1.0);
}

TEST_CASE("average accuracy from an exact copy equals self-accuracy") {
  const auto labels = random_labels(200, 4, 1);
  const Matrix A = clustered(6, labels, 2.0, 2);
  const Matrix Q = oracle::random_orthogonal(6, 3);
  const std::vector<Matrix> reps{A, Q * A};
  const auto sheaf = learn_sheaf(reps, [] {
    LearnConfig c;
    c.edge_rule = TopK{1};
    return c;
  }());
  const auto split = split_columns(200, 5);
  const auto report = average_accuracy(sheaf, reps, labels, split);
  REQUIRE(report.agents.size() == 2);
  for (const auto& a : report.agents) {
    REQUIRE(a.accuracy.has_value());
    CHECK(*a.accuracy == a.self_accuracy);
    CHECK(a.self_accuracy < 1.0);
    CHECK(a.self_accuracy > 0.5);
  }
  CHECK(report.agents[0].neighbors == std::vector<int>{1});
}

TEST_CASE("average accuracy on shuffled labels is at chance level") {
  const std::size_t n = 2000;
  const int classes = 10;
  const auto labels = random_labels(n, classes, 11);
  const Matrix A = oracle::random_matrix(8, static_cast<Index>(n), 12);
  const Matrix B = oracle::random_matrix(8, static_cast<Index>(n), 13);
  const auto sheaf = single_edge(2, 8, 0, 1, procrustes_align(A, B));
  const auto split = split_columns(static_cast<Index>(n), 14);
  const auto report = average_accuracy(sheaf, std::vector<Matrix>{A, B}, labels, split);
  const double p = 1.0 / classes;
  const double sd = std::sqrt(p * (1.0 - p) / static_cast<double>(split.test.size()));
  for (const auto& a : report.agents) CHECK(std::abs(*a.accuracy - p) <= 3.0 * sd);
}

TEST_CASE("average accuracy is invariant to a change of basis of a neighbor") {
  const auto labels = random_labels(150, 3, 21);
  const std::vector<Matrix> reps{clustered(5, labels, 3.0, 22), clustered(5, labels, 3.0, 24),
                                 clustered(5, labels, 3.0, 26)};
  ConnectionSheaf sheaf;
  sheaf.num_nodes = 3;
  sheaf.stalk_dim = 5;
  sheaf.edges.push_back({0, 1, procrustes_align(reps[0], reps[1])});
  sheaf.edges.push_back({1, 2, procrustes_align(reps[1], reps[2])});
  const auto split = split_columns(150, 27);
  const auto before = average_accuracy(sheaf, reps, labels, split);

  // Node 1 changes basis by G; both of its edge maps absorb the change.
  const Matrix G = oracle::random_orthogonal(5, 28);
  auto rotated = reps;
  rotated[1] = G * reps[1];
  auto moved = sheaf;
  moved.edges[0].map = G * sheaf.edges[0].map;
  moved.edges[1].map = sheaf.edges[1].map * G.transpose();
  const auto after = average_accuracy(moved, rotated, labels, split);
  for (std::size_t v = 0; v < 3; ++v) {
    CHECK(*after.agents[v].accuracy == *before.agents[v].accuracy);
    CHECK(after.agents[v].self_accuracy == before.agents[v].self_accuracy);
    CHECK(*after.agents[v].accuracy >= 0.0);
    CHECK(*after.agents[v].accuracy <= 1.0);
  }
}

TEST_CASE("isolated agents are flagged, not scored") {
  const auto labels = random_labels(50, 2, 31);
  const std::vector<Matrix> reps{clustered(3, labels, 1.0, 32), clustered(3, labels, 1.0, 33),
                                 clustered(3, labels, 1.0, 34)};
  const auto sheaf = single_edge(3, 3, 0, 2, Matrix::Identity(3, 3));
  const auto report = average_accuracy(sheaf, reps, labels, split_columns(50, 1));
  CHECK(report.agents[0].accuracy.has_value());
  CHECK_FALSE(report.agents[1].accuracy.has_value());
  CHECK(report.agents[1].neighbors.empty());
  REQUIRE(report.mean_accuracy.has_value());
  CHECK(*report.mean_accuracy == doctest::Approx(0.5 * (*report.agents[0].accuracy + *report.agents[2].accuracy)));

  ConnectionSheaf none;
  none.num_nodes = 3;
  none.stalk_dim = 3;
  CHECK_FALSE(average_accuracy(none, reps, labels, split_columns(50, 1)).mean_accuracy.has_value());
}

TEST_CASE("dictionary overload reconstructs D S_i") {
  const auto labels = random_labels(60, 3, 41);
  const Matrix D = oracle::random_orthogonal(4, 42);
  const std::vector<SparseCodes> codes{{0, clustered(4, labels, 1.0, 43), 4}, {1, clustered(4, labels, 1.0, 45), 4}};
  const auto sheaf = single_edge(2, 4, 0, 1, oracle::random_orthogonal(4, 47));
  const auto split = split_columns(60, 2);
  const auto a = average_accuracy(sheaf, {D, 0.0}, codes, labels, split);
  const auto b = average_accuracy(sheaf, std::vector<Matrix>{D * codes[0].codes, D * codes[1].codes}, labels, split);
  CHECK(*a.mean_accuracy == *b.mean_accuracy);
}

TEST_CASE("edge loss statistics") {
  SUBCASE("equal losses separate by zero") {
    const auto s = edge_loss_stats(std::vector<double>{0.3, 0.3}, std::vector<double>{0.3, 0.3, 0.3});
    REQUIRE(s.separation.has_value());
    CHECK(*s.separation == 0.0);
  }
  SUBCASE("known moments") {
    const auto s = edge_loss_stats(std::vector<double>{0.1, 0.3}, std::vector<double>{0.5, 0.9});
    CHECK(s.homophilic_mean == doctest::Approx(0.2));
    CHECK(s.homophilic_var == doctest::Approx(0.01));
    CHECK(s.heterophilic_var == doctest::Approx(0.04));
    CHECK(*s.separation == doctest::Approx(0.5 / std::sqrt(0.025)));
  }
  SUBCASE("single family leaves the heterophilic sample empty") {
    std::vector<EdgeCandidate> cands{{0, 1, {}, 1.0, 0.2, 0.2}, {0, 2, {}, 1.0, 0.4, 0.4}};
    const auto s = edge_loss_stats(cands, {0, 0, 0});
    CHECK(s.heterophilic_empty);
    CHECK_FALSE(s.homophilic_empty);
    CHECK_FALSE(s.separation.has_value());
    CHECK(s.homophilic == std::vector<double>{0.2, 0.4});
  }
  SUBCASE("histogram counts every sample once") {
    const auto s = edge_loss_stats(std::vector<double>{0.01, 0.07, 0.12}, std::vector<double>{0.5}, 0.05);
    int hom = 0, het = 0;
    for (const auto& b : s.histogram) (b.label == "homophilic" ? hom : het) += b.count;
    CHECK(hom == 3);
    CHECK(het == 1);
    CHECK(s.histogram.front().left == 0.0);
    CHECK(s.histogram.front().count == 1);
    CHECK(oracle::thrown_kind([] { edge_loss_stats(std::vector<double>{}, std::vector<double>{}, 0.0); }) ==
          ErrorKind::BadConfig);
  }
}

TEST_CASE("separation on normalized losses is scale invariant") {
  const std::vector<int> families{0, 0, 0, 1, 1, 1};
  std::vector<Matrix> reps;
  for (int v = 0; v < 6; ++v) reps.push_back(oracle::random_matrix(4, 10, 50 + static_cast<std::uint64_t>(v)));
  LearnConfig config;
  config.edge_rule = TopK{15};
  const auto base = edge_loss_stats(learn_sheaf(reps, config).candidates, families);
  for (auto& r : reps) r *= 3.7;
  const auto scaled = edge_loss_stats(learn_sheaf(reps, config).candidates, families);
  CHECK(*scaled.separation == doctest::Approx(*base.separation).epsilon(1e-9));
}

TEST_CASE("histogram CSV") {
  const auto s = edge_loss_stats(std::vector<double>{0.01}, std::vector<double>{0.06}, 0.05);
  std::ostringstream out;
  write_histogram_csv(out, s);
  std::istringstream lines(out.str());
  std::string header;
  std::getline(lines, header);
  CHECK(header == "bin_left,bin_right,count,class");
  int rows = 0;
  for (std::string line; std::getline(lines, line);) ++rows;
  CHECK(rows == static_cast<int>(s.histogram.size()));
}

TEST_CASE("connected components") {
  CHECK(connected_components(5, {{1, 3}, {3, 4}}) == std::vector<int>{0, 1, 2, 1, 1});
  CHECK(connected_components(3, {}) == std::vector<int>{0, 1, 2});
}

TEST_CASE("adjusted Rand index matches pair counting") {
  CHECK(adjusted_rand_index({0, 0, 1, 1}, {5, 5, 2, 2}) == doctest::Approx(1.0));
  std::mt19937_64 rng(61);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + static_cast<std::size_t>(trial % 12);
    std::uniform_int_distribution<int> ka(0, 3), kb(0, 4);
    std::vector<int> a(n), b(n);
    for (auto& x : a) x = ka(rng);
    for (auto& x : b) x = kb(rng);
    CHECK(adjusted_rand_index(a, b) == doctest::Approx(oracle::brute_force_ari(a, b)).epsilon(1e-12));
  }
}

TEST_CASE("topology quality examples") {
  const std::vector<int> families{0, 0, 0, 1, 1, 2};
  ConnectionSheaf sheaf;
  sheaf.num_nodes = 6;
  sheaf.stalk_dim = 1;
  for (auto [u, v] : std::vector<std::pair<int, int>>{{0, 1}, {0, 2}, {1, 2}, {3, 4}}) {
    sheaf.edges.push_back({u, v, Matrix::Identity(1, 1)});
  }
  auto r = topology_quality(sheaf, families);
  CHECK(r.ari == doctest::Approx(1.0));
  CHECK(r.num_components == 3);
  CHECK(r.homophilic_edges == 4);
  CHECK(r.heterophilic_edges == 0);

  sheaf.edges.clear();
  r = topology_quality(sheaf, families);
  CHECK(r.num_components == 6);
  CHECK(r.ari < 1.0);

  sheaf.edges.push_back({2, 3, Matrix::Identity(1, 1)});
  CHECK(topology_quality(sheaf, families).heterophilic_edges == 1);
}

TEST_CASE("threshold sweep") {
  ConnectionSheaf sheaf;
  sheaf.num_nodes = 4;
  sheaf.stalk_dim = 1;
  sheaf.candidates = {{0, 1, {}, 0.0, 0.1, 0.1}, {2, 3, {}, 0.0, 0.1, 0.1}, {1, 2, {}, 0.0, 0.7, 0.7}};
  const auto sweep = threshold_sweep(sheaf, {0, 0, 1, 1});
  REQUIRE(sweep.size() == 2);
  CHECK(sweep[0].tau == 0.1);
  CHECK(sweep[0].num_edges == 2);
  CHECK(sweep[0].ari == doctest::Approx(1.0));
  CHECK(sweep[1].num_edges == 3);
  CHECK(sweep[1].ari < 1.0);
}

TEST_CASE("spearman correlation") {
  CHECK(spearman({1, 2, 3, 4}, {10, 20, 30, 40}) == doctest::Approx(1.0));
  CHECK(spearman({1, 2, 3, 4}, {4, 3, 2, 1}) == doctest::Approx(-1.0));
  CHECK(std::isnan(spearman({1, 1, 1}, {1, 2, 3})));
  // Ties get average ranks: ranks {1.5, 1.5, 3} against {1, 2, 3}.
  CHECK(spearman({0, 0, 1}, {1, 2, 3}) == doctest::Approx(std::sqrt(3.0) / 2.0));
}
