#pragma once

#include <utility>
#include <vector>

#include "semsheaf/core_model.hpp"

namespace semsheaf {

/// One candidate edge (u < v) with its fitted map O_uv (maps node u's space
/// into node v's) and its misalignment loss.
struct EdgeCandidate {
  int u = 0;
  int v = 0;
  Matrix map;
  double raw_loss = 0.0;
  /// raw_loss / ||A_u||_F^2 (lower node index as reference).
  double norm_loss = 0.0;
  /// raw_loss / ||A_v||_F^2, kept for analysis of the directional choice.
  double norm_loss_reverse = 0.0;
};

/// Connection graph: selected edges with orthogonal maps, plus the full table
/// of candidate losses the selection was made from.
struct ConnectionSheaf {
  int num_nodes = 0;
  Index stalk_dim = 0;
  std::vector<EdgeCandidate> edges;
  std::vector<EdgeCandidate> candidates;

  /// Position of edge {a, b} in `edges`, or -1.
  int find_edge(int a, int b) const;
  /// Throws on duplicate or self-loop edges, u >= v, or non-orthogonal maps.
  void validate(double orthogonality_tol = 1e-8) const;
};

/// Dense sheaf Laplacian, (dV) x (dV), with d x d blocks.
struct SheafLaplacian {
  Matrix matrix;
  Index stalk_dim = 0;
  int num_nodes = 0;

  Index dimension() const { return matrix.rows(); }
  auto block(int a, int b) const { return matrix.block(a * stalk_dim, b * stalk_dim, stalk_dim, stalk_dim); }
};

/// argmin over orthogonal O of ||O A_u - A_v||_F, computed as W Y^T from the
/// SVD W Sigma Y^T = A_v A_u^T. Throws DimensionMismatch / NonFiniteData.
Matrix procrustes_align(const Matrix& A_u, const Matrix& A_v);

struct EdgeLoss {
  double raw = 0.0;
  double normalized = 0.0;
};

/// raw = ||O A_u - A_v||_F^2, normalized = raw / ||A_u||_F^2.
/// Throws ZeroReference when A_u is zero, DimensionMismatch on shapes.
EdgeLoss edge_loss(const Matrix& O, const Matrix& A_u, const Matrix& A_v);

/// All unordered pairs (u, v), u < v, in lexicographic order.
std::vector<std::pair<int, int>> all_pairs(int num_nodes);

/// Fits every candidate edge (in parallel across edges) and keeps those the
/// edge rule selects. TopK keeps the smallest raw losses, ties broken toward
/// lexicographically smaller (u, v); Threshold keeps norm_loss <= tau.
ConnectionSheaf learn_sheaf(const std::vector<Matrix>& representations, const LearnConfig& config);

/// Representations used for alignment: D S_i when a dictionary is given.
std::vector<Matrix> denoised_representations(const Dictionary& dict, const std::vector<SparseCodes>& codes);

/// (d|E|) x (dV) coboundary: edge (u, v) row block holds O_uv at node u and
/// -I at node v.
Matrix build_coboundary(const ConnectionSheaf& sheaf);

SheafLaplacian build_sheaf_laplacian(const ConnectionSheaf& sheaf);

/// tr(X^T L X) for the vertically stacked cochain of the agent blocks.
double total_variation(const SheafLaplacian& L, const std::vector<Matrix>& blocks);
double total_variation(const SheafLaplacian& L, const StackedEmbeddings& X);

/// Sum over edges of ||O_uv X_u - X_v||_F^2.
double edge_sum_variation(const ConnectionSheaf& sheaf, const std::vector<Matrix>& blocks);

/// ||O_uv x_u - x_v|| <= eps for the stored orientation of edge {u, v}.
/// Throws UnknownEdge.
bool is_local_section(const ConnectionSheaf& sheaf, std::pair<int, int> edge, const Vector& x_u, const Vector& x_v,
                      double eps);

/// Number of eigenvalues <= eps * lambda_max (numerical kernel dimension).
int global_section_dim(const SheafLaplacian& L, double eps);

}  // namespace semsheaf
