#include "semsheaf/sheaf_learning.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

namespace semsheaf {

int ConnectionSheaf::find_edge(int a, int b) const {
  const int u = std::min(a, b);
  const int v = std::max(a, b);
  for (std::size_t e = 0; e < edges.size(); ++e) {
    if (edges[e].u == u && edges[e].v == v) return static_cast<int>(e);
  }
  return -1;
}

void ConnectionSheaf::validate(double orthogonality_tol) const {
  std::set<std::pair<int, int>> seen;
  for (const auto& e : edges) {
    if (e.u >= e.v || e.u < 0 || e.v >= num_nodes) {
      throw Error(ErrorKind::BadSpec, "edge (" + std::to_string(e.u) + ", " + std::to_string(e.v) + ") is not u < v < V");
    }
    if (!seen.insert({e.u, e.v}).second) throw Error(ErrorKind::BadSpec, "duplicate edge");
    if (e.map.rows() != stalk_dim || e.map.cols() != stalk_dim) {
      throw Error(ErrorKind::DimensionMismatch, "edge map has the wrong shape");
    }
    const double resid = (e.map.transpose() * e.map - Matrix::Identity(stalk_dim, stalk_dim)).norm();
    if (resid > orthogonality_tol) throw Error(ErrorKind::BadSpec, "edge map is not orthogonal");
  }
}

Matrix procrustes_align(const Matrix& A_u, const Matrix& A_v) {
  if (A_u.rows() != A_v.rows() || A_u.cols() != A_v.cols()) {
    throw Error(ErrorKind::DimensionMismatch, "Procrustes operands differ in shape");
  }
  if (!A_u.allFinite() || !A_v.allFinite()) throw Error(ErrorKind::NonFiniteData, "Procrustes operand is not finite");
  const Matrix cross = A_v * A_u.transpose();
  // Jacobi SVD: deterministic, singular values in descending order.
  const Eigen::JacobiSVD<Matrix> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixU() * svd.matrixV().transpose();
}

EdgeLoss edge_loss(const Matrix& O, const Matrix& A_u, const Matrix& A_v) {
  if (A_u.rows() != A_v.rows() || A_u.cols() != A_v.cols() || O.rows() != A_v.rows() || O.cols() != A_u.rows()) {
    throw Error(ErrorKind::DimensionMismatch, "edge loss operands have incompatible shapes");
  }
  const double reference = A_u.squaredNorm();
  if (reference == 0.0) throw Error(ErrorKind::ZeroReference, "reference representation is zero");
  const double raw = (O * A_u - A_v).squaredNorm();
  return {raw, raw / reference};
}

std::vector<std::pair<int, int>> all_pairs(int num_nodes) {
  std::vector<std::pair<int, int>> pairs;
  for (int u = 0; u < num_nodes; ++u) {
    for (int v = u + 1; v < num_nodes; ++v) pairs.emplace_back(u, v);
  }
  return pairs;
}

ConnectionSheaf learn_sheaf(const std::vector<Matrix>& representations, const LearnConfig& config) {
  const int V = static_cast<int>(representations.size());
  if (V == 0) throw Error(ErrorKind::DimensionMismatch, "no representations");
  const Index d = representations.front().rows();
  for (const auto& A : representations) {
    if (A.rows() != d || A.cols() != representations.front().cols()) {
      throw Error(ErrorKind::DimensionMismatch, "representations differ in shape");
    }
    if (!A.allFinite()) throw Error(ErrorKind::NonFiniteData, "representation is not finite");
  }

  std::vector<std::pair<int, int>> pairs = config.candidate_edges ? *config.candidate_edges : all_pairs(V);
  for (auto& [a, b] : pairs) {
    if (a == b || a < 0 || b < 0 || a >= V || b >= V) {
      throw Error(ErrorKind::BadConfig, "candidate edge (" + std::to_string(a) + ", " + std::to_string(b) + ") is invalid");
    }
    if (a > b) std::swap(a, b);
  }
  std::sort(pairs.begin(), pairs.end());
  if (std::adjacent_find(pairs.begin(), pairs.end()) != pairs.end()) {
    throw Error(ErrorKind::BadConfig, "duplicate candidate edge");
  }
  for (int node = 0; node < V; ++node) {
    if (representations[static_cast<std::size_t>(node)].squaredNorm() == 0.0) {
      for (const auto& [a, b] : pairs) {
        if (a == node || b == node) {
          throw Error(ErrorKind::ZeroReference, "agent " + std::to_string(node) + " has a zero representation");
        }
      }
    }
  }
  if (const auto* top = std::get_if<TopK>(&config.edge_rule)) {
    if (top->count < 0 || static_cast<std::size_t>(top->count) > pairs.size()) {
      throw Error(ErrorKind::BadBudget, "E0 = " + std::to_string(top->count) + " exceeds " +
                                            std::to_string(pairs.size()) + " candidate edges");
    }
  }

  ConnectionSheaf sheaf;
  sheaf.num_nodes = V;
  sheaf.stalk_dim = d;
  sheaf.candidates.resize(pairs.size());
  for_each_index(config.execution, static_cast<std::ptrdiff_t>(pairs.size()), [&](std::ptrdiff_t e) {
    const auto [u, v] = pairs[static_cast<std::size_t>(e)];
    const Matrix& A_u = representations[static_cast<std::size_t>(u)];
    const Matrix& A_v = representations[static_cast<std::size_t>(v)];
    EdgeCandidate& c = sheaf.candidates[static_cast<std::size_t>(e)];
    c.u = u;
    c.v = v;
    c.map = procrustes_align(A_u, A_v);
    c.raw_loss = (c.map * A_u - A_v).squaredNorm();
    c.norm_loss = c.raw_loss / A_u.squaredNorm();
    c.norm_loss_reverse = c.raw_loss / A_v.squaredNorm();
  });

  std::vector<std::size_t> keep;
  if (const auto* top = std::get_if<TopK>(&config.edge_rule)) {
    std::vector<std::size_t> order(pairs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    // Candidates are already in lexicographic order, so a stable sort on
    // loss resolves ties toward smaller (u, v).
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return sheaf.candidates[a].raw_loss < sheaf.candidates[b].raw_loss;
    });
    keep.assign(order.begin(), order.begin() + top->count);
    std::sort(keep.begin(), keep.end());
  } else {
    const double tau = std::get<Threshold>(config.edge_rule).tau;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      if (sheaf.candidates[i].norm_loss <= tau) keep.push_back(i);
    }
  }
  for (std::size_t i : keep) sheaf.edges.push_back(sheaf.candidates[i]);
  return sheaf;
}

std::vector<Matrix> denoised_representations(const Dictionary& dict, const std::vector<SparseCodes>& codes) {
  std::vector<Matrix> out;
  out.reserve(codes.size());
  for (const auto& c : codes) out.push_back(reconstruct(dict, c));
  return out;
}

Matrix build_coboundary(const ConnectionSheaf& sheaf) {
  const Index d = sheaf.stalk_dim;
  Matrix delta = Matrix::Zero(d * static_cast<Index>(sheaf.edges.size()), d * sheaf.num_nodes);
  for (std::size_t e = 0; e < sheaf.edges.size(); ++e) {
    const auto& edge = sheaf.edges[e];
    const Index row = static_cast<Index>(e) * d;
    delta.block(row, edge.u * d, d, d) = edge.map;
    delta.block(row, edge.v * d, d, d) = -Matrix::Identity(d, d);
  }
  return delta;
}

SheafLaplacian build_sheaf_laplacian(const ConnectionSheaf& sheaf) {
  const Index d = sheaf.stalk_dim;
  SheafLaplacian L;
  L.stalk_dim = d;
  L.num_nodes = sheaf.num_nodes;
  L.matrix = Matrix::Zero(d * sheaf.num_nodes, d * sheaf.num_nodes);
  for (const auto& e : sheaf.edges) {
    // Restriction maps F_u = O_uv, F_v = I.
    L.matrix.block(e.u * d, e.u * d, d, d).noalias() += e.map.transpose() * e.map;
    L.matrix.block(e.v * d, e.v * d, d, d) += Matrix::Identity(d, d);
    L.matrix.block(e.u * d, e.v * d, d, d) = -e.map.transpose();
    L.matrix.block(e.v * d, e.u * d, d, d) = -e.map;
  }
  return L;
}

double total_variation(const SheafLaplacian& L, const std::vector<Matrix>& blocks) {
  const Matrix x = stack_cochain(blocks);
  if (x.rows() != L.dimension()) {
    throw Error(ErrorKind::DimensionMismatch, "cochain has " + std::to_string(x.rows()) + " rows, Laplacian is " +
                                                  std::to_string(L.dimension()));
  }
  return (x.transpose() * L.matrix * x).trace();
}

double total_variation(const SheafLaplacian& L, const StackedEmbeddings& X) {
  std::vector<Matrix> blocks;
  for (const auto& b : X.blocks()) blocks.push_back(b.matrix);
  return total_variation(L, blocks);
}

double edge_sum_variation(const ConnectionSheaf& sheaf, const std::vector<Matrix>& blocks) {
  double total = 0.0;
  for (const auto& e : sheaf.edges) {
    total += (e.map * blocks[static_cast<std::size_t>(e.u)] - blocks[static_cast<std::size_t>(e.v)]).squaredNorm();
  }
  return total;
}

bool is_local_section(const ConnectionSheaf& sheaf, std::pair<int, int> edge, const Vector& x_u, const Vector& x_v,
                      double eps) {
  const int idx = sheaf.find_edge(edge.first, edge.second);
  if (idx < 0) {
    throw Error(ErrorKind::UnknownEdge,
                "edge (" + std::to_string(edge.first) + ", " + std::to_string(edge.second) + ") is not in the sheaf");
  }
  const auto& e = sheaf.edges[static_cast<std::size_t>(idx)];
  if (x_u.size() != sheaf.stalk_dim || x_v.size() != sheaf.stalk_dim) {
    throw Error(ErrorKind::DimensionMismatch, "section vectors must have the stalk dimension");
  }
  // Vectors are given for the stored orientation (u, v) with u < v.
  return (e.map * x_u - x_v).norm() <= eps;
}

int global_section_dim(const SheafLaplacian& L, double eps) {
  if (L.dimension() == 0) return 0;
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(L.matrix, Eigen::EigenvaluesOnly);
  const Vector& lambda = eig.eigenvalues();
  const double lambda_max = std::max(0.0, lambda.maxCoeff());
  int count = 0;
  for (Index i = 0; i < lambda.size(); ++i) {
    if (lambda(i) <= eps * lambda_max) ++count;
  }
  return count;
}

}  // namespace semsheaf
