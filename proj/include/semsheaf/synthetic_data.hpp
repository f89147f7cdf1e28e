#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "semsheaf/core_model.hpp"

namespace semsheaf {

/// How the planted orthogonal misalignment Q_v is drawn.
enum class MapSharing {
  PerAgent,   // independent Haar map per agent
  PerFamily,  // one Haar map shared by all agents of a family
  Identity,   // Q_v = I (no misalignment)
};

std::string to_string(MapSharing sharing);
MapSharing parse_map_sharing(const std::string& text);

struct SyntheticSpec {
  int num_agents = 4;
  /// Family index per agent, values 0..F-1 with every family non-empty.
  /// Empty means a single family.
  std::vector<int> families;
  Index dim = 16;
  Index samples = 256;
  int num_classes = 10;
  /// Planted row support k* per family.
  int support_size = 4;
  double within_family_noise = 0.5;
  /// 0 gives identical family supports, 1 gives disjoint ones.
  double between_family_divergence = 1.0;
  double noise_sigma = 0.05;
  std::uint64_t seed = 0;

  MapSharing map_sharing = MapSharing::PerAgent;
  /// Row k of the support is scaled by energy_decay^k.
  double energy_decay = 1.0;
  /// Rescale each family's codes to unit mean column energy.
  bool normalize_codes = false;

  int num_families() const;
  int family_of(int agent) const;
  /// Throws BadSpec.
  void validate() const;
};

/// Evenly split V agents into F contiguous families.
std::vector<int> contiguous_families(int num_agents, int num_families);

struct SyntheticNetwork {
  std::vector<AgentEmbeddings> embeddings;
  std::vector<int> labels;
  std::vector<Matrix> true_maps;
  std::vector<int> true_families;
  Matrix true_dictionary;
  /// Row supports per family, in planting order.
  std::vector<std::vector<int>> true_supports;
  /// Noiseless codes per family.
  std::vector<Matrix> true_codes;

  StackedEmbeddings stacked() const { return validate_network(embeddings); }
  std::vector<Matrix> matrices() const;
};

/// Haar-distributed orthogonal matrix (QR of a Gaussian with sign fix).
Matrix haar_orthogonal(Index d, std::uint64_t seed);

/// Deterministic sub-seed derivation.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// X_v = Q_v D* S*_f(v) + sigma G_v. Deterministic in spec.seed.
SyntheticNetwork generate(const SyntheticSpec& spec);

}  // namespace semsheaf
