#pragma once

#include <vector>

#include "semsheaf/core_model.hpp"

namespace semsheaf {

/// Iterate of the splitting scheme. Codes S_i are d x n; the consensus
/// variables Z_i and their duals U_i live in the transposed n x d layout.
struct SolverState {
  Matrix D;
  std::vector<Matrix> S;
  Matrix P;
  std::vector<Matrix> Z;
  Matrix R;
  std::vector<Matrix> U;
  double rho = 1.0;
  int step = 0;
  double alpha = 1.0;

  // Residuals of the most recent step.
  double primal_dict = 0.0;
  std::vector<double> primal_codes;
  double dual_dict = 0.0;
  std::vector<double> dual_codes;
  double scale_dict = 0.0;
  std::vector<double> scale_codes;
  int zero_column_events = 0;

  Matrix stacked_codes() const;
  double max_primal() const;
  double max_dual() const;
};

struct ConvergenceReport {
  int iterations = 0;
  bool converged = false;
  std::vector<double> primal_residual;
  std::vector<double> dual_residual;
  std::vector<double> objective;
  int zero_column_events = 0;
};

struct DictionaryResult {
  Dictionary dictionary;
  std::vector<SparseCodes> codes;
  ConvergenceReport report;
  /// Set when max_iters was reached without meeting the residual tolerances.
  bool max_iters_exceeded = false;
};

/// 1/2 ||X - D S||_F^2 - gamma * logdet(D^T D). Throws SingularGramian.
double objective_p2(const Matrix& D, const Matrix& S, const Matrix& X, double gamma);

/// log det(D^T D) via Cholesky. Throws SingularGramian.
double logdet_gram(const Matrix& D);

/// Strongly convex surrogate of objective_p2 around (Dq, Sq): both bilinear
/// halves frozen in turn, and the logdet term linearized with its exact
/// gradient 2 Dq (Dq^T Dq)^{-1}.
double surrogate_objective(const Matrix& D, const Matrix& S, const Matrix& Dq, const Matrix& Sq, const Matrix& X,
                           double gamma);

/// Projection onto {Z : at most `budget` nonzero columns}: keeps the budget
/// columns of largest Euclidean norm; ties keep the lower column index.
/// Throws BadBudget unless 1 <= budget <= Y.cols().
Matrix prox_group_20(const Matrix& Y, int budget);

/// Keeps only the listed columns of Y.
Matrix project_support(const Matrix& Y, const std::vector<int>& columns);

/// Closed-form dictionary update
///   D~ = (X S^T + rho (P - R) + gamma D (D^T D)^{-1}) (S S^T + rho I)^{-1}.
Matrix update_dictionary(const SolverState& state, const StackedEmbeddings& X, double gamma);

/// Closed-form code update for one agent
///   S~_i = (D^T D + rho I)^{-1} (D^T X_i + rho (Z_i^T - U_i^T)).
Matrix update_codes(const SolverState& state, const StackedEmbeddings& X, Index agent);

/// Column-wise normalization of M + R_dual. A zero column is replaced by
/// e_1; `zero_columns` (if given) counts such events.
Matrix project_oblique(const Matrix& M, const Matrix& R_dual, int* zero_columns = nullptr);

/// Initial iterate: D0 (spectral or random unit columns), S0 = D0^T X,
/// P0 = D0, Z0_i = prox(S0_i^T), zero duals.
SolverState initialize_state(const StackedEmbeddings& X, const LearnConfig& config);

/// One pass of the recursion; returns the next state.
SolverState sca_admm_step(const SolverState& state, const StackedEmbeddings& X, const LearnConfig& config);

/// True when every primal and dual residual is within eps_abs + eps_rel * scale.
bool residuals_converged(const SolverState& state, const LearnConfig& config);

/// Runs sca_admm_step until the residual test passes or max_iters.
DictionaryResult learn_dictionary(const StackedEmbeddings& X, const LearnConfig& config);

}  // namespace semsheaf
