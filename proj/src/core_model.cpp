#include "semsheaf/core_model.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

namespace semsheaf {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::NonFiniteData: return "NonFiniteData";
    case ErrorKind::SingularGramian: return "SingularGramian";
    case ErrorKind::BadBudget: return "BadBudget";
    case ErrorKind::ZeroColumn: return "ZeroColumn";
    case ErrorKind::ZeroReference: return "ZeroReference";
    case ErrorKind::UnknownEdge: return "UnknownEdge";
    case ErrorKind::BadSpec: return "BadSpec";
    case ErrorKind::BadConfig: return "BadConfig";
    case ErrorKind::FormatError: return "FormatError";
    case ErrorKind::ChecksumError: return "ChecksumError";
    case ErrorKind::ManifestMismatch: return "ManifestMismatch";
    case ErrorKind::Usage: return "Usage";
  }
  return "Unknown";
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Usage:
    case ErrorKind::BadConfig:
    case ErrorKind::BadSpec:
      return 1;
    case ErrorKind::SingularGramian:
    case ErrorKind::ZeroColumn:
      return 3;
    default:
      return 2;
  }
}

EdgeRule parse_edge_rule(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) {
    throw Error(ErrorKind::Usage, "edge rule must be topk:<E0> or threshold:<tau>, got '" + text + "'");
  }
  const std::string name = text.substr(0, colon);
  const std::string value = text.substr(colon + 1);
  try {
    std::size_t used = 0;
    if (name == "topk") {
      const int count = std::stoi(value, &used);
      if (used != value.size() || count < 0) throw std::invalid_argument(value);
      return TopK{count};
    }
    if (name == "threshold") {
      const double tau = std::stod(value, &used);
      if (used != value.size() || !(tau >= 0.0)) throw std::invalid_argument(value);
      return Threshold{tau};
    }
  } catch (const std::logic_error&) {
    throw Error(ErrorKind::Usage, "bad edge rule value in '" + text + "'");
  }
  throw Error(ErrorKind::Usage, "unknown edge rule '" + name + "'");
}

std::string format_edge_rule(const EdgeRule& rule) {
  if (const auto* top = std::get_if<TopK>(&rule)) return "topk:" + std::to_string(top->count);
  // Shortest text that parses back to the same double.
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), std::get<Threshold>(rule).tau);
  return "threshold:" + std::string(buf, res.ptr);
}

int LearnConfig::budget(Index agent, Index dim) const {
  if (budgets.empty()) return static_cast<int>(dim);
  if (budgets.size() == 1) return budgets.front();
  return budgets.at(static_cast<std::size_t>(agent));
}

void LearnConfig::validate(Index num_agents, Index dim) const {
  if (!(gamma >= 0.0)) throw Error(ErrorKind::BadConfig, "gamma must be >= 0");
  if (!(rho > 0.0)) throw Error(ErrorKind::BadConfig, "rho must be > 0");
  if (!(alpha0 > 0.0 && alpha0 <= 1.0)) throw Error(ErrorKind::BadConfig, "alpha0 must lie in (0, 1]");
  if (!(mu >= 0.0)) throw Error(ErrorKind::BadConfig, "mu must be >= 0");
  if (max_iters < 1) throw Error(ErrorKind::BadConfig, "max_iters must be >= 1");
  if (!(eps_abs >= 0.0) || !(eps_rel >= 0.0)) throw Error(ErrorKind::BadConfig, "tolerances must be >= 0");
  if (budgets.size() > 1 && static_cast<Index>(budgets.size()) != num_agents) {
    throw Error(ErrorKind::BadConfig, "budgets must have one entry or one per agent");
  }
  for (Index i = 0; i < num_agents; ++i) {
    const int k = budget(i, dim);
    if (k < 1 || k > dim) {
      throw Error(ErrorKind::BadBudget, "budget " + std::to_string(k) + " outside [1, " + std::to_string(dim) + "]");
    }
  }
  if (fixed_supports) {
    if (static_cast<Index>(fixed_supports->size()) != num_agents) {
      throw Error(ErrorKind::BadConfig, "fixed_supports needs one entry per agent");
    }
    for (const auto& rows : *fixed_supports) {
      for (int r : rows) {
        if (r < 0 || r >= dim) throw Error(ErrorKind::BadConfig, "fixed support row out of range");
      }
    }
  }
}

StackedEmbeddings validate_network(std::vector<AgentEmbeddings> blocks) {
  if (blocks.empty()) throw Error(ErrorKind::DimensionMismatch, "network has no agents");
  const Index d = blocks.front().dim();
  const Index n = blocks.front().samples();
  for (const auto& b : blocks) {
    if (b.dim() != d || b.samples() != n) {
      std::ostringstream msg;
      msg << "agent " << b.agent_id << " is " << b.dim() << "x" << b.samples() << ", expected " << d << "x"
          << n;
      throw Error(ErrorKind::DimensionMismatch, msg.str());
    }
    if (!b.matrix.allFinite()) {
      throw Error(ErrorKind::NonFiniteData, "agent " + std::to_string(b.agent_id) + " contains non-finite entries");
    }
  }
  StackedEmbeddings out;
  out.stacked_.resize(d, n * static_cast<Index>(blocks.size()));
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    out.stacked_.middleCols(static_cast<Index>(i) * n, n) = blocks[i].matrix;
  }
  out.blocks_ = std::move(blocks);
  return out;
}

std::vector<Matrix> unstack(const Matrix& stacked, Index num_agents) {
  if (num_agents <= 0 || stacked.cols() % num_agents != 0) {
    throw Error(ErrorKind::DimensionMismatch, "column count is not a multiple of the agent count");
  }
  const Index n = stacked.cols() / num_agents;
  std::vector<Matrix> out;
  out.reserve(static_cast<std::size_t>(num_agents));
  for (Index i = 0; i < num_agents; ++i) out.emplace_back(stacked.middleCols(i * n, n));
  return out;
}

Matrix stack_cochain(const std::vector<Matrix>& blocks) {
  if (blocks.empty()) return Matrix();
  const Index d = blocks.front().rows();
  const Index n = blocks.front().cols();
  Matrix out(d * static_cast<Index>(blocks.size()), n);
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    if (blocks[i].rows() != d || blocks[i].cols() != n) {
      throw Error(ErrorKind::DimensionMismatch, "cochain blocks differ in shape");
    }
    out.middleRows(static_cast<Index>(i) * d, d) = blocks[i];
  }
  return out;
}

Matrix reconstruct(const Dictionary& dict, const SparseCodes& codes) {
  if (dict.atoms.cols() != codes.codes.rows()) {
    throw Error(ErrorKind::DimensionMismatch, "dictionary has " + std::to_string(dict.atoms.cols()) +
                                                  " atoms but codes have " + std::to_string(codes.codes.rows()) +
                                                  " rows");
  }
  return dict.atoms * codes.codes;
}

int count_nonzero_rows(const Matrix& m) {
  int count = 0;
  for (Index r = 0; r < m.rows(); ++r) {
    if ((m.row(r).array() != 0.0).any()) ++count;
  }
  return count;
}

std::vector<int> nonzero_rows(const Matrix& m) {
  std::vector<int> rows;
  for (Index r = 0; r < m.rows(); ++r) {
    if ((m.row(r).array() != 0.0).any()) rows.push_back(static_cast<int>(r));
  }
  return rows;
}

}  // namespace semsheaf
