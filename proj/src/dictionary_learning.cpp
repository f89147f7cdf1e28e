#include "semsheaf/dictionary_learning.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <numeric>
#include <random>

namespace semsheaf {
namespace {

// An agent direction becomes a new atom when more than this fraction of it
// (sine of its angle to the current atom span) is unexplained.
constexpr double kNoveltyThreshold = 0.5;

// Singular values below this fraction of the largest are treated as rank
// deficiency when seeding atoms from agent data.
constexpr double kRankTolerance = 1e-10;

Eigen::LLT<Matrix> factor_gram(const Matrix& D) {
  const Matrix gram = D.transpose() * D;
  Eigen::LLT<Matrix> llt(gram);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorKind::SingularGramian, "dictionary Gramian is not positive definite");
  }
  const Vector diag = llt.matrixLLT().diagonal();
  if (diag.minCoeff() <= 1e-12 * std::max(1.0, diag.maxCoeff())) {
    throw Error(ErrorKind::SingularGramian, "dictionary Gramian is numerically singular");
  }
  return llt;
}

// D (D^T D)^{-1}
Matrix gram_inverse_product(const Matrix& D) {
  const auto llt = factor_gram(D);
  return llt.solve(D.transpose()).transpose();
}

Matrix random_unit_columns(Index d, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix D(d, d);
  for (Index j = 0; j < d; ++j) {
    for (Index i = 0; i < d; ++i) D(i, j) = normal(rng);
  }
  return project_oblique(D, Matrix::Zero(d, d));
}

// Greedy subspace seeding: each agent contributes the directions of its
// dominant budget-dimensional subspace not already spanned by the atoms
// chosen so far; random directions orthogonal to them fill the rest.
Matrix spectral_dictionary(const StackedEmbeddings& X, const LearnConfig& config, std::mt19937_64& rng) {
  const Index d = X.dim();
  std::vector<Vector> atoms;
  for (Index i = 0; i < X.num_agents() && static_cast<Index>(atoms.size()) < d; ++i) {
    const Eigen::JacobiSVD<Matrix> svd(X.block(i), Eigen::ComputeThinU);
    const Vector& sv = svd.singularValues();
    if (sv.size() == 0 || sv(0) <= 0.0) continue;
    Index rank = 0;
    while (rank < sv.size() && sv(rank) > kRankTolerance * sv(0)) ++rank;
    const Index k = std::min<Index>(config.budget(i, d), rank);
    const Matrix dominant = svd.matrixU().leftCols(k);

    Matrix fresh = dominant;
    if (!atoms.empty()) {
      Matrix current(d, static_cast<Index>(atoms.size()));
      for (std::size_t j = 0; j < atoms.size(); ++j) current.col(static_cast<Index>(j)) = atoms[j];
      const Matrix basis = Eigen::HouseholderQR<Matrix>(current).householderQ() * Matrix::Identity(d, current.cols());
      fresh -= basis * (basis.transpose() * dominant);
    }
    const Eigen::JacobiSVD<Matrix> novelty(fresh, Eigen::ComputeThinV);
    for (Index j = 0; j < novelty.singularValues().size(); ++j) {
      if (novelty.singularValues()(j) <= kNoveltyThreshold || static_cast<Index>(atoms.size()) >= d) break;
      Vector atom = dominant * novelty.matrixV().col(j);
      atoms.push_back(atom / atom.norm());
    }
  }

  std::normal_distribution<double> normal(0.0, 1.0);
  while (static_cast<Index>(atoms.size()) < d) {
    Vector g(d);
    for (Index r = 0; r < d; ++r) g(r) = normal(rng);
    for (const auto& a : atoms) g -= a.dot(g) * a;
    // Re-orthogonalize once more against accumulated rounding.
    for (const auto& a : atoms) g -= a.dot(g) * a;
    const double nrm = g.norm();
    if (nrm > 1e-8) atoms.push_back(g / nrm);
  }

  Matrix D(d, d);
  for (Index j = 0; j < d; ++j) D.col(j) = atoms[static_cast<std::size_t>(j)];
  return D;
}

Matrix project_codes(const Matrix& Y, const LearnConfig& config, Index agent, Index dim) {
  if (config.fixed_supports) return project_support(Y, (*config.fixed_supports)[static_cast<std::size_t>(agent)]);
  return prox_group_20(Y, config.budget(agent, dim));
}

}  // namespace

Matrix SolverState::stacked_codes() const {
  if (S.empty()) return Matrix();
  const Index n = S.front().cols();
  Matrix out(S.front().rows(), n * static_cast<Index>(S.size()));
  for (std::size_t i = 0; i < S.size(); ++i) out.middleCols(static_cast<Index>(i) * n, n) = S[i];
  return out;
}

double SolverState::max_primal() const {
  double m = primal_dict;
  for (double r : primal_codes) m = std::max(m, r);
  return m;
}

double SolverState::max_dual() const {
  double m = dual_dict;
  for (double r : dual_codes) m = std::max(m, r);
  return m;
}

double logdet_gram(const Matrix& D) {
  const auto llt = factor_gram(D);
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

double objective_p2(const Matrix& D, const Matrix& S, const Matrix& X, double gamma) {
  if (D.rows() != X.rows() || D.cols() != S.rows() || S.cols() != X.cols()) {
    throw Error(ErrorKind::DimensionMismatch, "objective operands have incompatible shapes");
  }
  const double fit = 0.5 * (X - D * S).squaredNorm();
  if (gamma == 0.0) {
    // Still report a singular Gramian; the objective is undefined there.
    factor_gram(D);
    return fit;
  }
  return fit - gamma * logdet_gram(D);
}

double surrogate_objective(const Matrix& D, const Matrix& S, const Matrix& Dq, const Matrix& Sq, const Matrix& X,
                           double gamma) {
  const double fit_d = 0.5 * (X - D * Sq).squaredNorm();
  const double fit_s = 0.5 * (X - Dq * S).squaredNorm();
  const Matrix grad_logdet = 2.0 * gram_inverse_product(Dq);
  return fit_d + fit_s - gamma * (grad_logdet.array() * (D - Dq).array()).sum();
}

Matrix prox_group_20(const Matrix& Y, int budget) {
  const Index cols = Y.cols();
  if (budget < 1 || budget > cols) {
    throw Error(ErrorKind::BadBudget,
                "budget " + std::to_string(budget) + " outside [1, " + std::to_string(cols) + "]");
  }
  if (budget == cols) return Y;
  const Vector norms = Y.colwise().squaredNorm().transpose();
  std::vector<Index> order(static_cast<std::size_t>(cols));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return norms(a) > norms(b); });
  Matrix Z = Matrix::Zero(Y.rows(), cols);
  for (int k = 0; k < budget; ++k) Z.col(order[static_cast<std::size_t>(k)]) = Y.col(order[static_cast<std::size_t>(k)]);
  return Z;
}

Matrix project_support(const Matrix& Y, const std::vector<int>& columns) {
  Matrix Z = Matrix::Zero(Y.rows(), Y.cols());
  for (int c : columns) {
    if (c < 0 || c >= Y.cols()) throw Error(ErrorKind::BadBudget, "support column out of range");
    Z.col(c) = Y.col(c);
  }
  return Z;
}

Matrix update_dictionary(const SolverState& state, const StackedEmbeddings& X, double gamma) {
  const Index d = X.dim();
  if (state.D.rows() != d || state.D.cols() != d || static_cast<Index>(state.S.size()) != X.num_agents()) {
    throw Error(ErrorKind::DimensionMismatch, "solver state does not match the network");
  }
  // Accumulate S S^T and X S^T in agent order.
  Matrix A = state.rho * Matrix::Identity(d, d);
  Matrix rhs = state.rho * (state.P - state.R);
  for (Index i = 0; i < X.num_agents(); ++i) {
    const Matrix& Si = state.S[static_cast<std::size_t>(i)];
    A.noalias() += Si * Si.transpose();
    rhs.noalias() += X.block(i) * Si.transpose();
  }
  if (gamma != 0.0) rhs += gamma * gram_inverse_product(state.D);
  // D~ A = rhs with A symmetric positive definite.
  return A.llt().solve(rhs.transpose()).transpose();
}

Matrix update_codes(const SolverState& state, const StackedEmbeddings& X, Index agent) {
  const Index d = X.dim();
  if (agent < 0 || agent >= X.num_agents()) throw Error(ErrorKind::DimensionMismatch, "agent index out of range");
  const auto a = static_cast<std::size_t>(agent);
  const Matrix B = state.D.transpose() * state.D + state.rho * Matrix::Identity(d, d);
  const Matrix rhs = state.D.transpose() * X.block(agent) + state.rho * (state.Z[a] - state.U[a]).transpose();
  return B.llt().solve(rhs);
}

Matrix project_oblique(const Matrix& M, const Matrix& R_dual, int* zero_columns) {
  if (M.rows() != R_dual.rows() || M.cols() != R_dual.cols()) {
    throw Error(ErrorKind::DimensionMismatch, "oblique projection operands differ in shape");
  }
  Matrix out = M + R_dual;
  for (Index k = 0; k < out.cols(); ++k) {
    const double nrm = out.col(k).norm();
    if (nrm > 0.0 && std::isfinite(nrm)) {
      out.col(k) /= nrm;
    } else {
      std::clog << "semsheaf: warning: zero column " << k << " in oblique projection, using e_1\n";
      out.col(k).setZero();
      out(0, k) = 1.0;
      if (zero_columns) ++*zero_columns;
    }
  }
  return out;
}

SolverState initialize_state(const StackedEmbeddings& X, const LearnConfig& config) {
  config.validate(X.num_agents(), X.dim());
  const Index d = X.dim();
  std::mt19937_64 rng(config.seed);

  SolverState state;
  state.rho = config.rho;
  state.step = 0;
  state.alpha = config.step_size(0);
  state.D = config.init == InitMethod::Spectral ? spectral_dictionary(X, config, rng) : random_unit_columns(d, rng);
  state.P = state.D;
  state.R = Matrix::Zero(d, d);
  for (Index i = 0; i < X.num_agents(); ++i) {
    state.S.push_back(state.D.transpose() * X.block(i));
    state.Z.push_back(project_codes(state.S.back().transpose(), config, i, d));
    state.U.push_back(Matrix::Zero(X.samples(), d));
  }
  const auto V = static_cast<std::size_t>(X.num_agents());
  state.primal_codes.assign(V, 0.0);
  state.dual_codes.assign(V, 0.0);
  state.scale_codes.assign(V, 0.0);
  return state;
}

SolverState sca_admm_step(const SolverState& state, const StackedEmbeddings& X, const LearnConfig& config) {
  const Index d = X.dim();
  const Index V = X.num_agents();
  config.validate(V, d);
  const double alpha = config.step_size(state.step);

  SolverState next;
  next.rho = state.rho;
  next.step = state.step + 1;
  next.alpha = config.step_size(next.step);
  next.zero_column_events = state.zero_column_events;

  const Matrix D_tilde = update_dictionary(state, X, config.gamma);
  next.D = state.D + alpha * (D_tilde - state.D);

  // Per-agent block: code update, smoothing, (2,0) projection, dual ascent.
  // Each agent writes only its own slots.
  next.S.resize(static_cast<std::size_t>(V));
  next.Z.resize(static_cast<std::size_t>(V));
  next.U.resize(static_cast<std::size_t>(V));
  next.primal_codes.assign(static_cast<std::size_t>(V), 0.0);
  next.dual_codes.assign(static_cast<std::size_t>(V), 0.0);
  next.scale_codes.assign(static_cast<std::size_t>(V), 0.0);

  const Matrix B = state.D.transpose() * state.D + state.rho * Matrix::Identity(d, d);
  const Eigen::LLT<Matrix> B_factor(B);
  const Matrix Dt = state.D.transpose();

  for_each_index(config.execution, V, [&](std::ptrdiff_t i) {
    const auto a = static_cast<std::size_t>(i);
    const Matrix rhs = Dt * X.block(i) + state.rho * (state.Z[a] - state.U[a]).transpose();
    const Matrix S_tilde = B_factor.solve(rhs);
    Matrix S_next = state.S[a] + alpha * (S_tilde - state.S[a]);
    const Matrix St = S_next.transpose();
    Matrix Z_next = project_codes(St + state.U[a], config, i, d);
    next.U[a] = state.U[a] + St - Z_next;
    next.primal_codes[a] = (St - Z_next).norm();
    next.dual_codes[a] = state.rho * (Z_next - state.Z[a]).norm();
    next.scale_codes[a] = std::max(S_next.norm(), Z_next.norm());
    next.S[a] = std::move(S_next);
    next.Z[a] = std::move(Z_next);
  });

  next.P = project_oblique(next.D, state.R, &next.zero_column_events);
  next.R = state.R + next.D - next.P;

  next.primal_dict = (next.D - next.P).norm();
  next.dual_dict = state.rho * (next.P - state.P).norm();
  next.scale_dict = std::max(next.D.norm(), next.P.norm());
  return next;
}

bool residuals_converged(const SolverState& state, const LearnConfig& config) {
  auto within = [&](double residual, double scale) { return residual <= config.eps_abs + config.eps_rel * scale; };
  if (!within(state.primal_dict, state.scale_dict) || !within(state.dual_dict, state.scale_dict)) return false;
  for (std::size_t i = 0; i < state.primal_codes.size(); ++i) {
    if (!within(state.primal_codes[i], state.scale_codes[i]) || !within(state.dual_codes[i], state.scale_codes[i])) {
      return false;
    }
  }
  return true;
}

DictionaryResult learn_dictionary(const StackedEmbeddings& X, const LearnConfig& config) {
  SolverState state = initialize_state(X, config);
  DictionaryResult result;
  ConvergenceReport& report = result.report;

  for (int q = 0; q < config.max_iters; ++q) {
    state = sca_admm_step(state, X, config);
    report.primal_residual.push_back(state.max_primal());
    report.dual_residual.push_back(state.max_dual());
    double objective = std::numeric_limits<double>::quiet_NaN();
    try {
      objective = objective_p2(state.D, state.stacked_codes(), X.stacked(), config.gamma);
    } catch (const Error&) {
      // Degenerate iterate; recorded as NaN.
    }
    report.objective.push_back(objective);
    report.iterations = q + 1;
    if (residuals_converged(state, config)) {
      report.converged = true;
      break;
    }
  }
  report.zero_column_events = state.zero_column_events;
  result.max_iters_exceeded = !report.converged;

  result.dictionary.atoms = state.P;
  result.dictionary.gamma = config.gamma;
  for (Index i = 0; i < X.num_agents(); ++i) {
    const auto a = static_cast<std::size_t>(i);
    Matrix codes = state.S[a];
    const Matrix& Z = state.Z[a];
    for (Index r = 0; r < codes.rows(); ++r) {
      if ((Z.col(r).array() == 0.0).all()) codes.row(r).setZero();
    }
    result.codes.push_back(SparseCodes{X.blocks()[a].agent_id, std::move(codes), config.budget(i, X.dim())});
  }
  return result;
}

}  // namespace semsheaf
