#include "semsheaf/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>

namespace semsheaf {
namespace {

double mean_of(const std::vector<double>& x) {
  if (x.empty()) return 0.0;
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double variance_of(const std::vector<double>& x) {
  if (x.empty()) return 0.0;
  const double m = mean_of(x);
  double acc = 0.0;
  for (double v : x) acc += (v - m) * (v - m);
  return acc / static_cast<double>(x.size());
}

std::vector<double> ranks(const std::vector<double>& x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> r(x.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) r[order[t]] = avg;
    i = j + 1;
  }
  return r;
}

double choose2(double x) { return 0.5 * x * (x - 1.0); }

}  // namespace

SemanticSignature semantic_signature(const SparseCodes& codes) {
  return {codes.agent_id, codes.codes.rowwise().norm()};
}

SimilarityReport signature_similarity(const std::vector<SemanticSignature>& signatures) {
  const auto V = static_cast<Index>(signatures.size());
  SimilarityReport out;
  out.similarity = Matrix::Zero(V, V);
  for (Index i = 0; i < V; ++i) {
    if (signatures[i].values.size() != signatures.front().values.size()) {
      throw Error(ErrorKind::DimensionMismatch, "signatures differ in length");
    }
  }
  for (Index i = 0; i < V; ++i) {
    for (Index j = i; j < V; ++j) {
      const Vector& a = signatures[i].values;
      const Vector& b = signatures[j].values;
      const double na = a.norm();
      const double nb = b.norm();
      if (na == 0.0 || nb == 0.0) {
        out.zero_pairs.emplace_back(static_cast<int>(i), static_cast<int>(j));
        continue;
      }
      const double s = i == j ? 1.0 : a.dot(b) / (na * nb);
      out.similarity(i, j) = s;
      out.similarity(j, i) = s;
    }
  }
  return out;
}

TrainTestSplit split_columns(Index n, std::uint64_t seed, double train_fraction) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw Error(ErrorKind::BadConfig, "train fraction must lie in (0, 1)");
  }
  std::vector<Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Index{0});
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  const auto ntrain = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n)));
  TrainTestSplit split;
  split.train.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(ntrain));
  split.test.assign(idx.begin() + static_cast<std::ptrdiff_t>(ntrain), idx.end());
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

double nearest_centroid_accuracy(const Matrix& train, const std::vector<int>& train_labels, const Matrix& test,
                                 const std::vector<int>& test_labels) {
  if (static_cast<Index>(train_labels.size()) != train.cols() || static_cast<Index>(test_labels.size()) != test.cols() ||
      train.rows() != test.rows()) {
    throw Error(ErrorKind::DimensionMismatch, "classifier inputs disagree in shape");
  }
  if (test.cols() == 0) return 0.0;
  std::map<int, std::pair<Vector, int>> sums;
  for (Index j = 0; j < train.cols(); ++j) {
    auto [it, fresh] = sums.try_emplace(train_labels[static_cast<std::size_t>(j)], Vector::Zero(train.rows()), 0);
    it->second.first += train.col(j);
    ++it->second.second;
  }
  std::vector<int> classes;
  Matrix centroids(train.rows(), static_cast<Index>(sums.size()));
  for (const auto& [label, acc] : sums) {
    centroids.col(static_cast<Index>(classes.size())) = acc.first / static_cast<double>(acc.second);
    classes.push_back(label);
  }
  int correct = 0;
  for (Index j = 0; j < test.cols(); ++j) {
    Index best = 0;
    (centroids.colwise() - test.col(j)).colwise().squaredNorm().minCoeff(&best);
    if (!classes.empty() && classes[static_cast<std::size_t>(best)] == test_labels[static_cast<std::size_t>(j)]) {
      ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(test.cols());
}

AccuracyReport average_accuracy(const ConnectionSheaf& sheaf, const std::vector<Matrix>& representations,
                                const std::vector<int>& labels, const TrainTestSplit& split, Execution execution) {
  const int V = sheaf.num_nodes;
  if (static_cast<int>(representations.size()) != V) {
    throw Error(ErrorKind::DimensionMismatch, "need one representation per sheaf node");
  }
  for (const auto& A : representations) {
    if (A.cols() != static_cast<Index>(labels.size())) {
      throw Error(ErrorKind::DimensionMismatch, "labels do not match the sample count");
    }
  }
  std::vector<int> train_labels;
  std::vector<int> test_labels;
  for (Index j : split.train) train_labels.push_back(labels[static_cast<std::size_t>(j)]);
  for (Index j : split.test) test_labels.push_back(labels[static_cast<std::size_t>(j)]);
  const auto columns = [](const Matrix& A, const std::vector<Index>& idx) {
    Matrix out(A.rows(), static_cast<Index>(idx.size()));
    for (std::size_t t = 0; t < idx.size(); ++t) out.col(static_cast<Index>(t)) = A.col(idx[t]);
    return out;
  };

  AccuracyReport report;
  report.agents.resize(static_cast<std::size_t>(V));
  for_each_index(execution, V, [&](std::ptrdiff_t v) {
    AgentAccuracy& out = report.agents[static_cast<std::size_t>(v)];
    out.agent = static_cast<int>(v);
    const Matrix& own = representations[static_cast<std::size_t>(v)];
    const Matrix train = columns(own, split.train);
    out.self_accuracy = nearest_centroid_accuracy(train, train_labels, columns(own, split.test), test_labels);
    for (const auto& e : sheaf.edges) {
      Matrix received;
      int neighbor = -1;
      if (e.v == v) {
        neighbor = e.u;
        received = e.map * columns(representations[static_cast<std::size_t>(e.u)], split.test);
      } else if (e.u == v) {
        neighbor = e.v;
        received = e.map.transpose() * columns(representations[static_cast<std::size_t>(e.v)], split.test);
      } else {
        continue;
      }
      out.neighbors.push_back(neighbor);
      out.per_neighbor.push_back(nearest_centroid_accuracy(train, train_labels, received, test_labels));
    }
    if (!out.per_neighbor.empty()) out.accuracy = mean_of(out.per_neighbor);
  });

  std::vector<double> scored;
  for (const auto& a : report.agents) {
    if (a.accuracy) scored.push_back(*a.accuracy);
  }
  if (!scored.empty()) report.mean_accuracy = mean_of(scored);
  return report;
}

AccuracyReport average_accuracy(const ConnectionSheaf& sheaf, const Dictionary& dict,
                                const std::vector<SparseCodes>& codes, const std::vector<int>& labels,
                                const TrainTestSplit& split, Execution execution) {
  return average_accuracy(sheaf, denoised_representations(dict, codes), labels, split, execution);
}

EdgeLossStats edge_loss_stats(const std::vector<double>& homophilic, const std::vector<double>& heterophilic,
                              double bin_width) {
  if (!(bin_width > 0.0)) throw Error(ErrorKind::BadConfig, "histogram bin width must be > 0");
  EdgeLossStats s;
  s.homophilic = homophilic;
  s.heterophilic = heterophilic;
  s.bin_width = bin_width;
  s.homophilic_empty = homophilic.empty();
  s.heterophilic_empty = heterophilic.empty();
  s.homophilic_mean = mean_of(homophilic);
  s.homophilic_var = variance_of(homophilic);
  s.heterophilic_mean = mean_of(heterophilic);
  s.heterophilic_var = variance_of(heterophilic);
  if (!s.homophilic_empty && !s.heterophilic_empty) {
    const double diff = s.heterophilic_mean - s.homophilic_mean;
    const double pooled = std::sqrt(0.5 * (s.homophilic_var + s.heterophilic_var));
    if (pooled > 0.0) {
      s.separation = diff / pooled;
    } else {
      s.separation = diff == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), diff);
    }
  }

  double top = 0.0;
  for (double x : homophilic) top = std::max(top, x);
  for (double x : heterophilic) top = std::max(top, x);
  const auto nbins = static_cast<int>(std::floor(top / bin_width)) + 1;
  const auto fill = [&](const std::vector<double>& xs, const std::string& label) {
    std::vector<int> counts(static_cast<std::size_t>(nbins), 0);
    for (double x : xs) {
      const int b = std::clamp(static_cast<int>(std::floor(x / bin_width)), 0, nbins - 1);
      ++counts[static_cast<std::size_t>(b)];
    }
    for (int b = 0; b < nbins; ++b) {
      s.histogram.push_back({b * bin_width, (b + 1) * bin_width, counts[static_cast<std::size_t>(b)], label});
    }
  };
  fill(homophilic, "homophilic");
  fill(heterophilic, "heterophilic");
  return s;
}

EdgeLossStats edge_loss_stats(const std::vector<EdgeCandidate>& candidates, const std::vector<int>& families,
                              double bin_width, bool normalized) {
  std::vector<double> hom;
  std::vector<double> het;
  for (const auto& c : candidates) {
    if (c.u < 0 || c.v < 0 || static_cast<std::size_t>(std::max(c.u, c.v)) >= families.size()) {
      throw Error(ErrorKind::DimensionMismatch, "family labels do not cover every candidate edge");
    }
    const double loss = normalized ? c.norm_loss : c.raw_loss;
    (families[static_cast<std::size_t>(c.u)] == families[static_cast<std::size_t>(c.v)] ? hom : het).push_back(loss);
  }
  return edge_loss_stats(hom, het, bin_width);
}

void write_histogram_csv(std::ostream& out, const EdgeLossStats& stats) {
  out << "bin_left,bin_right,count,class\n";
  out.precision(17);
  for (const auto& b : stats.histogram) out << b.left << ',' << b.right << ',' << b.count << ',' << b.label << '\n';
}

std::vector<int> connected_components(int num_nodes, const std::vector<std::pair<int, int>>& edges) {
  std::vector<int> parent(static_cast<std::size_t>(num_nodes));
  std::iota(parent.begin(), parent.end(), 0);
  const auto find = [&](int x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
      parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
      x = parent[static_cast<std::size_t>(x)];
    }
    return x;
  };
  for (const auto& [a, b] : edges) {
    if (a < 0 || b < 0 || a >= num_nodes || b >= num_nodes) {
      throw Error(ErrorKind::DimensionMismatch, "edge endpoint out of range");
    }
    const int ra = find(a);
    const int rb = find(b);
    if (ra != rb) parent[static_cast<std::size_t>(std::max(ra, rb))] = std::min(ra, rb);
  }
  std::vector<int> label(static_cast<std::size_t>(num_nodes), -1);
  std::map<int, int> ids;
  for (int v = 0; v < num_nodes; ++v) {
    const int root = find(v);
    label[static_cast<std::size_t>(v)] = ids.try_emplace(root, static_cast<int>(ids.size())).first->second;
  }
  return label;
}

double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) throw Error(ErrorKind::DimensionMismatch, "partitions differ in size");
  const auto n = static_cast<double>(a.size());
  std::map<std::pair<int, int>, int> table;
  std::map<int, int> rows;
  std::map<int, int> cols;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ++table[{a[i], b[i]}];
    ++rows[a[i]];
    ++cols[b[i]];
  }
  double index = 0.0;
  for (const auto& [key, c] : table) index += choose2(c);
  double sum_a = 0.0;
  for (const auto& [key, c] : rows) sum_a += choose2(c);
  double sum_b = 0.0;
  for (const auto& [key, c] : cols) sum_b += choose2(c);
  const double total = choose2(n);
  const double expected = total > 0.0 ? sum_a * sum_b / total : 0.0;
  const double max_index = 0.5 * (sum_a + sum_b);
  if (max_index == expected) {
    // Degenerate partitions (all singletons or one block on both sides).
    return table.size() == rows.size() && table.size() == cols.size() ? 1.0 : 0.0;
  }
  return (index - expected) / (max_index - expected);
}

TopologyReport topology_quality(const ConnectionSheaf& sheaf, const std::vector<int>& true_families) {
  if (static_cast<int>(true_families.size()) != sheaf.num_nodes) {
    throw Error(ErrorKind::DimensionMismatch, "need one family label per node");
  }
  std::vector<std::pair<int, int>> edges;
  TopologyReport r;
  for (const auto& e : sheaf.edges) {
    edges.emplace_back(e.u, e.v);
    if (true_families[static_cast<std::size_t>(e.u)] == true_families[static_cast<std::size_t>(e.v)]) {
      ++r.homophilic_edges;
    } else {
      ++r.heterophilic_edges;
    }
  }
  r.components = connected_components(sheaf.num_nodes, edges);
  r.num_components = r.components.empty() ? 0 : *std::max_element(r.components.begin(), r.components.end()) + 1;
  r.ari = adjusted_rand_index(r.components, true_families);
  return r;
}

std::vector<ThresholdPoint> threshold_sweep(const ConnectionSheaf& sheaf, const std::vector<int>& true_families) {
  std::vector<double> taus;
  for (const auto& c : sheaf.candidates) taus.push_back(c.norm_loss);
  std::sort(taus.begin(), taus.end());
  taus.erase(std::unique(taus.begin(), taus.end()), taus.end());
  std::vector<ThresholdPoint> out;
  for (double tau : taus) {
    ConnectionSheaf s;
    s.num_nodes = sheaf.num_nodes;
    s.stalk_dim = sheaf.stalk_dim;
    for (const auto& c : sheaf.candidates) {
      if (c.norm_loss <= tau) s.edges.push_back(c);
    }
    out.push_back({tau, static_cast<int>(s.edges.size()), topology_quality(s, true_families).ari});
  }
  return out;
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw Error(ErrorKind::DimensionMismatch, "spearman inputs differ in length");
  const auto rx = ranks(x);
  const auto ry = ranks(y);
  const double mx = mean_of(rx);
  const double my = mean_of(ry);
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace semsheaf
