#include "semsheaf/synthetic_data.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace semsheaf {
namespace {

Matrix gaussian(Index rows, Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) m(i, j) = normal(rng);
  }
  return m;
}

Matrix haar_from(Index d, std::mt19937_64& rng) {
  const Eigen::HouseholderQR<Matrix> qr(gaussian(d, d, rng));
  Matrix Q = qr.householderQ();
  const Matrix& packed = qr.matrixQR();
  for (Index j = 0; j < d; ++j) {
    if (packed(j, j) < 0.0) Q.col(j) = -Q.col(j);
  }
  return Q;
}

}  // namespace

std::string to_string(MapSharing sharing) {
  switch (sharing) {
    case MapSharing::PerAgent: return "per_agent";
    case MapSharing::PerFamily: return "per_family";
    case MapSharing::Identity: return "identity";
  }
  return "per_agent";
}

MapSharing parse_map_sharing(const std::string& text) {
  if (text == "per_agent") return MapSharing::PerAgent;
  if (text == "per_family") return MapSharing::PerFamily;
  if (text == "identity") return MapSharing::Identity;
  throw Error(ErrorKind::BadSpec, "unknown map_sharing '" + text + "'");
}

int SyntheticSpec::num_families() const {
  if (families.empty()) return 1;
  return *std::max_element(families.begin(), families.end()) + 1;
}

int SyntheticSpec::family_of(int agent) const {
  return families.empty() ? 0 : families[static_cast<std::size_t>(agent)];
}

void SyntheticSpec::validate() const {
  if (num_agents < 1) throw Error(ErrorKind::BadSpec, "num_agents must be >= 1");
  if (dim < 1 || samples < 1) throw Error(ErrorKind::BadSpec, "d and n must be >= 1");
  if (num_classes < 1) throw Error(ErrorKind::BadSpec, "num_classes must be >= 1");
  if (support_size < 1 || support_size > dim) {
    throw Error(ErrorKind::BadSpec, "support_size must lie in [1, d]");
  }
  if (!(within_family_noise >= 0.0) || !(noise_sigma >= 0.0)) {
    throw Error(ErrorKind::BadSpec, "noise levels must be >= 0");
  }
  if (!(between_family_divergence >= 0.0 && between_family_divergence <= 1.0)) {
    throw Error(ErrorKind::BadSpec, "between_family_divergence must lie in [0, 1]");
  }
  if (!(energy_decay > 0.0) || !std::isfinite(energy_decay)) {
    throw Error(ErrorKind::BadSpec, "energy_decay must be positive");
  }
  if (!families.empty()) {
    if (static_cast<int>(families.size()) != num_agents) {
      throw Error(ErrorKind::BadSpec, "families must list one family per agent");
    }
    const int F = num_families();
    std::vector<int> sizes(static_cast<std::size_t>(std::max(F, 0)), 0);
    for (int f : families) {
      if (f < 0) throw Error(ErrorKind::BadSpec, "family indices must be >= 0");
      ++sizes[static_cast<std::size_t>(f)];
    }
    if (std::find(sizes.begin(), sizes.end(), 0) != sizes.end()) {
      throw Error(ErrorKind::BadSpec, "family indices must be contiguous from 0");
    }
  }
  const int replaced = static_cast<int>(std::lround(between_family_divergence * support_size));
  const long needed = static_cast<long>(support_size - replaced) + static_cast<long>(num_families()) * replaced;
  if (needed > dim) {
    throw Error(ErrorKind::BadSpec, "family supports need " + std::to_string(needed) + " rows but d = " +
                                        std::to_string(dim));
  }
}

std::vector<int> contiguous_families(int num_agents, int num_families) {
  if (num_families < 1 || num_families > num_agents) {
    throw Error(ErrorKind::BadSpec, "need 1 <= F <= V");
  }
  std::vector<int> out(static_cast<std::size_t>(num_agents));
  for (int v = 0; v < num_agents; ++v) out[static_cast<std::size_t>(v)] = v * num_families / num_agents;
  return out;
}

std::vector<Matrix> SyntheticNetwork::matrices() const {
  std::vector<Matrix> out;
  out.reserve(embeddings.size());
  for (const auto& e : embeddings) out.push_back(e.matrix);
  return out;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer over the combined value.
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

Matrix haar_orthogonal(Index d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return haar_from(d, rng);
}

SyntheticNetwork generate(const SyntheticSpec& spec) {
  spec.validate();
  const Index d = spec.dim;
  const Index n = spec.samples;
  const int V = spec.num_agents;
  const int F = spec.num_families();
  const int k = spec.support_size;

  std::mt19937_64 rng(derive_seed(spec.seed, 0));
  SyntheticNetwork net;
  net.true_dictionary = haar_from(d, rng);

  std::vector<int> perm(static_cast<std::size_t>(d));
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  const int replaced = static_cast<int>(std::lround(spec.between_family_divergence * k));
  for (int f = 0; f < F; ++f) {
    std::vector<int> support(perm.begin(), perm.begin() + (k - replaced));
    const auto pool = perm.begin() + (k - replaced) + f * replaced;
    support.insert(support.end(), pool, pool + replaced);
    net.true_supports.push_back(std::move(support));
  }

  const Matrix means = gaussian(d, spec.num_classes, rng);
  net.labels.resize(static_cast<std::size_t>(n));
  for (Index j = 0; j < n; ++j) net.labels[static_cast<std::size_t>(j)] = static_cast<int>(j % spec.num_classes);
  std::shuffle(net.labels.begin(), net.labels.end(), rng);

  std::normal_distribution<double> normal(0.0, 1.0);
  for (int f = 0; f < F; ++f) {
    Matrix codes = Matrix::Zero(d, n);
    const auto& support = net.true_supports[static_cast<std::size_t>(f)];
    for (Index j = 0; j < n; ++j) {
      const int y = net.labels[static_cast<std::size_t>(j)];
      double weight = 1.0;
      for (int row : support) {
        codes(row, j) = (means(row, y) + spec.within_family_noise * normal(rng)) * weight;
        weight *= spec.energy_decay;
      }
    }
    if (spec.normalize_codes) {
      const double energy = std::sqrt(codes.squaredNorm() / static_cast<double>(n));
      if (energy > 0.0) codes /= energy;
    }
    net.true_codes.push_back(std::move(codes));
  }

  std::vector<Matrix> family_maps;
  for (int f = 0; f < F; ++f) family_maps.push_back(haar_from(d, rng));

  net.true_families.resize(static_cast<std::size_t>(V));
  net.true_maps.resize(static_cast<std::size_t>(V));
  net.embeddings.resize(static_cast<std::size_t>(V));
  for (int v = 0; v < V; ++v) net.true_families[static_cast<std::size_t>(v)] = spec.family_of(v);

  // Agents draw from independent sub-streams, so this loop may run in any order.
  for_each_index(Execution::Parallel, V, [&](std::ptrdiff_t v) {
    const auto slot = static_cast<std::size_t>(v);
    std::mt19937_64 agent_rng(derive_seed(spec.seed, 1 + static_cast<std::uint64_t>(v)));
    const int f = net.true_families[slot];
    switch (spec.map_sharing) {
      case MapSharing::PerAgent: net.true_maps[slot] = haar_from(d, agent_rng); break;
      case MapSharing::PerFamily: net.true_maps[slot] = family_maps[static_cast<std::size_t>(f)]; break;
      case MapSharing::Identity: net.true_maps[slot] = Matrix::Identity(d, d); break;
    }
    Matrix X = net.true_maps[slot] * (net.true_dictionary * net.true_codes[static_cast<std::size_t>(f)]);
    if (spec.noise_sigma > 0.0) X += spec.noise_sigma * gaussian(d, n, agent_rng);
    net.embeddings[slot] = AgentEmbeddings{static_cast<int>(v), std::move(X)};
  });
  return net;
}

}  // namespace semsheaf
