#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "semsheaf/core_model.hpp"
#include "semsheaf/sheaf_learning.hpp"

namespace semsheaf {

/// Row Euclidean norms of an agent's codes.
struct SemanticSignature {
  int agent_id = 0;
  Vector values;
};

SemanticSignature semantic_signature(const SparseCodes& codes);

struct SimilarityReport {
  Matrix similarity;
  /// Pairs (i <= j) involving a zero signature; their similarity is 0.
  std::vector<std::pair<int, int>> zero_pairs;
};

/// Pairwise cosine similarity. Throws DimensionMismatch on unequal lengths.
SimilarityReport signature_similarity(const std::vector<SemanticSignature>& signatures);

struct TrainTestSplit {
  std::vector<Index> train;
  std::vector<Index> test;
};

/// Seeded shuffle of the column indices; the first round(fraction * n) are
/// training columns. Both lists are returned sorted.
TrainTestSplit split_columns(Index n, std::uint64_t seed, double train_fraction = 0.8);

/// Nearest class centroid: centroids from the training columns, accuracy on
/// the test columns. Classes absent from training are never predicted; ties
/// go to the lower class index.
double nearest_centroid_accuracy(const Matrix& train, const std::vector<int>& train_labels, const Matrix& test,
                                 const std::vector<int>& test_labels);

struct AgentAccuracy {
  int agent = 0;
  /// Mean accuracy over neighbors; empty when the agent has no neighbors.
  std::optional<double> accuracy;
  std::vector<int> neighbors;
  std::vector<double> per_neighbor;
  /// Accuracy of the agent's classifier on its own test representations.
  double self_accuracy = 0.0;
};

struct AccuracyReport {
  std::vector<AgentAccuracy> agents;
  /// Mean over agents with neighbors; empty if there are none.
  std::optional<double> mean_accuracy;
};

/// Each agent classifies test representations received from its neighbors in
/// the selected edge set: D S_u mapped by O_uv (or O_uv^T for the reverse
/// orientation), scored with centroids fit on its own training columns.
AccuracyReport average_accuracy(const ConnectionSheaf& sheaf, const Dictionary& dict,
                                const std::vector<SparseCodes>& codes, const std::vector<int>& labels,
                                const TrainTestSplit& split, Execution execution = Execution::Parallel);

/// Same, with arbitrary per-agent representations in place of D S_i.
AccuracyReport average_accuracy(const ConnectionSheaf& sheaf, const std::vector<Matrix>& representations,
                                const std::vector<int>& labels, const TrainTestSplit& split,
                                Execution execution = Execution::Parallel);

struct HistogramBin {
  double left = 0.0;
  double right = 0.0;
  int count = 0;
  std::string label;
};

struct EdgeLossStats {
  std::vector<double> homophilic;
  std::vector<double> heterophilic;
  double homophilic_mean = 0.0;
  double homophilic_var = 0.0;
  double heterophilic_mean = 0.0;
  double heterophilic_var = 0.0;
  /// (heterophilic mean - homophilic mean) / sqrt((var_hom + var_het) / 2),
  /// with population variances. Empty when either class is empty.
  std::optional<double> separation;
  bool homophilic_empty = false;
  bool heterophilic_empty = false;
  double bin_width = 0.05;
  std::vector<HistogramBin> histogram;
};

/// Splits candidate losses by whether the endpoints share a family.
EdgeLossStats edge_loss_stats(const std::vector<EdgeCandidate>& candidates, const std::vector<int>& families,
                              double bin_width = 0.05, bool normalized = true);

/// Same from plain samples.
EdgeLossStats edge_loss_stats(const std::vector<double>& homophilic, const std::vector<double>& heterophilic,
                              double bin_width = 0.05);

/// CSV with columns bin_left, bin_right, count, class.
void write_histogram_csv(std::ostream& out, const EdgeLossStats& stats);

/// Component label per node; labels follow the smallest node of each component.
std::vector<int> connected_components(int num_nodes, const std::vector<std::pair<int, int>>& edges);

/// Hubert-Arabie adjusted Rand index. Identical partitions score 1.
double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b);

struct TopologyReport {
  std::vector<int> components;
  int num_components = 0;
  double ari = 0.0;
  int homophilic_edges = 0;
  int heterophilic_edges = 0;
};

TopologyReport topology_quality(const ConnectionSheaf& sheaf, const std::vector<int>& true_families);

struct ThresholdPoint {
  double tau = 0.0;
  int num_edges = 0;
  double ari = 0.0;
};

/// Topology quality of the threshold rule at every distinct candidate loss.
std::vector<ThresholdPoint> threshold_sweep(const ConnectionSheaf& sheaf, const std::vector<int>& true_families);

/// Spearman rank correlation with average ranks for ties. NaN when either
/// input is constant.
double spearman(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace semsheaf
