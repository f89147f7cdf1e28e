#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "semsheaf/error.hpp"
#include "semsheaf/parallel.hpp"

namespace semsheaf {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// One agent's latent matrix: d rows (embedding dimension), n columns
/// (samples). Columns are sample-aligned across all agents of a network.
struct AgentEmbeddings {
  int agent_id = 0;
  Matrix matrix;

  Index dim() const { return matrix.rows(); }
  Index samples() const { return matrix.cols(); }
};

/// Validated network: V agent blocks plus their horizontal concatenation
/// X = [X_1, ..., X_V] (d x nV), in agent index order.
class StackedEmbeddings {
 public:
  StackedEmbeddings() = default;

  const std::vector<AgentEmbeddings>& blocks() const { return blocks_; }
  const Matrix& stacked() const { return stacked_; }
  const Matrix& block(Index agent) const { return blocks_[agent].matrix; }

  Index num_agents() const { return static_cast<Index>(blocks_.size()); }
  Index dim() const { return stacked_.rows(); }
  Index samples() const { return blocks_.empty() ? 0 : blocks_.front().samples(); }

 private:
  friend StackedEmbeddings validate_network(std::vector<AgentEmbeddings> blocks);

  std::vector<AgentEmbeddings> blocks_;
  Matrix stacked_;
};

/// Shared semantic space: d x d, columns are atoms.
struct Dictionary {
  Matrix atoms;
  double gamma = 0.0;
};

/// Agent codes S_i (d x n) with a row-support budget d'_i.
struct SparseCodes {
  int agent_id = 0;
  Matrix codes;
  int budget = 0;
};

struct TopK {
  int count = 1;
};
struct Threshold {
  double tau = 0.8;
};
using EdgeRule = std::variant<TopK, Threshold>;

/// Parses "topk:<E0>" or "threshold:<tau>".
EdgeRule parse_edge_rule(const std::string& text);
std::string format_edge_rule(const EdgeRule& rule);

enum class InitMethod { Spectral, Random };

struct LearnConfig {
  double gamma = 0.1;
  double rho = 1.0;
  /// Either one entry (broadcast to every agent) or one per agent.
  std::vector<int> budgets;
  double alpha0 = 0.9;
  double mu = 0.01;
  int max_iters = 2000;
  double eps_abs = 1e-6;
  double eps_rel = 1e-4;
  std::uint64_t seed = 0;
  EdgeRule edge_rule = Threshold{0.8};
  std::optional<std::vector<std::pair<int, int>>> candidate_edges;
  InitMethod init = InitMethod::Spectral;
  /// When set, the (2,0) projection keeps these rows per agent instead of
  /// selecting the largest ones. Used to study the fixed-support regime.
  std::optional<std::vector<std::vector<int>>> fixed_supports;
  Execution execution = Execution::Parallel;

  /// Step size alpha_q = alpha0 / (1 + mu q).
  double step_size(int q) const { return alpha0 / (1.0 + mu * q); }

  /// Budget for agent i after broadcasting.
  int budget(Index agent, Index dim) const;

  /// Throws BadConfig / BadBudget on invalid settings.
  void validate(Index num_agents, Index dim) const;
};

/// Checks equal shapes and finiteness, then stacks. Throws DimensionMismatch
/// or NonFiniteData.
StackedEmbeddings validate_network(std::vector<AgentEmbeddings> blocks);

/// Inverse of the stacking: splits a d x (nV) matrix into V blocks of n columns.
std::vector<Matrix> unstack(const Matrix& stacked, Index num_agents);

/// Stacks d x n blocks vertically into the (dV) x n 0-cochain layout.
Matrix stack_cochain(const std::vector<Matrix>& blocks);

/// D * S_i. Throws DimensionMismatch.
Matrix reconstruct(const Dictionary& dict, const SparseCodes& codes);

/// Number of rows with nonzero Euclidean norm.
int count_nonzero_rows(const Matrix& m);

/// Indices of nonzero rows, ascending.
std::vector<int> nonzero_rows(const Matrix& m);

}  // namespace semsheaf
