#include "semsheaf/serialize.hpp"

#include <set>

namespace semsheaf {
namespace {

template <class T>
json optional_json(const std::optional<T>& value) {
  return value ? json(*value) : json(nullptr);
}

void check_keys(const json& j, const std::set<std::string>& allowed, ErrorKind kind, const char* what) {
  if (!j.is_object()) throw Error(kind, std::string(what) + " must be a JSON object");
  for (const auto& item : j.items()) {
    if (!allowed.count(item.key())) throw Error(kind, std::string("unknown ") + what + " key '" + item.key() + "'");
  }
}

}  // namespace

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const json& j) {
  if (!j.is_array()) throw Error(ErrorKind::FormatError, "matrix must be an array of rows");
  const auto rows = static_cast<Index>(j.size());
  const auto cols = rows == 0 ? Index{0} : static_cast<Index>(j.front().size());
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    const json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Index>(row.size()) != cols) {
      throw Error(ErrorKind::FormatError, "matrix rows differ in length");
    }
    for (Index c = 0; c < cols; ++c) m(i, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

json config_to_json(const LearnConfig& c) {
  json j = {
      {"gamma", c.gamma},
      {"rho", c.rho},
      {"budgets", c.budgets},
      {"alpha0", c.alpha0},
      {"mu", c.mu},
      {"max_iters", c.max_iters},
      {"eps_abs", c.eps_abs},
      {"eps_rel", c.eps_rel},
      {"seed", c.seed},
      {"edge_rule", format_edge_rule(c.edge_rule)},
      {"init", c.init == InitMethod::Spectral ? "spectral" : "random"},
  };
  if (c.candidate_edges) {
    json edges = json::array();
    for (const auto& [u, v] : *c.candidate_edges) edges.push_back({u, v});
    j["candidate_edges"] = edges;
  } else {
    j["candidate_edges"] = nullptr;
  }
  return j;
}

LearnConfig config_from_json(const json& j, LearnConfig c) {
  check_keys(j,
             {"gamma", "rho", "budgets", "alpha0", "mu", "max_iters", "eps_abs", "eps_rel", "seed", "edge_rule", "init",
              "candidate_edges"},
             ErrorKind::BadConfig, "config");
  try {
    if (j.contains("gamma")) c.gamma = j.at("gamma").get<double>();
    if (j.contains("rho")) c.rho = j.at("rho").get<double>();
    if (j.contains("budgets")) {
      const json& b = j.at("budgets");
      c.budgets = b.is_array() ? b.get<std::vector<int>>() : std::vector<int>{b.get<int>()};
    }
    if (j.contains("alpha0")) c.alpha0 = j.at("alpha0").get<double>();
    if (j.contains("mu")) c.mu = j.at("mu").get<double>();
    if (j.contains("max_iters")) c.max_iters = j.at("max_iters").get<int>();
    if (j.contains("eps_abs")) c.eps_abs = j.at("eps_abs").get<double>();
    if (j.contains("eps_rel")) c.eps_rel = j.at("eps_rel").get<double>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("edge_rule")) c.edge_rule = parse_edge_rule(j.at("edge_rule").get<std::string>());
    if (j.contains("init")) {
      const auto init = j.at("init").get<std::string>();
      if (init == "spectral") {
        c.init = InitMethod::Spectral;
      } else if (init == "random") {
        c.init = InitMethod::Random;
      } else {
        throw Error(ErrorKind::BadConfig, "init must be 'spectral' or 'random'");
      }
    }
    if (j.contains("candidate_edges")) {
      const json& e = j.at("candidate_edges");
      if (e.is_null()) {
        c.candidate_edges.reset();
      } else {
        std::vector<std::pair<int, int>> edges;
        for (const auto& pair : e) {
          if (!pair.is_array() || pair.size() != 2) throw Error(ErrorKind::BadConfig, "candidate edge must be [u, v]");
          edges.emplace_back(pair[0].get<int>(), pair[1].get<int>());
        }
        c.candidate_edges = std::move(edges);
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::BadConfig, std::string("config: ") + e.what());
  } catch (const Error& e) {
    throw Error(ErrorKind::BadConfig, e.what());
  }
  return c;
}

json spec_to_json(const SyntheticSpec& s) {
  return {
      {"num_agents", s.num_agents},
      {"families", s.families},
      {"d", s.dim},
      {"n", s.samples},
      {"num_classes", s.num_classes},
      {"support_size", s.support_size},
      {"within_family_noise", s.within_family_noise},
      {"between_family_divergence", s.between_family_divergence},
      {"noise_sigma", s.noise_sigma},
      {"seed", s.seed},
      {"map_sharing", to_string(s.map_sharing)},
      {"energy_decay", s.energy_decay},
      {"normalize_codes", s.normalize_codes},
  };
}

SyntheticSpec spec_from_json(const json& j, SyntheticSpec s) {
  check_keys(j,
             {"num_agents", "families", "num_families", "d", "n", "num_classes", "support_size", "within_family_noise",
              "between_family_divergence", "noise_sigma", "seed", "map_sharing", "energy_decay", "normalize_codes"},
             ErrorKind::BadSpec, "spec");
  try {
    if (j.contains("num_agents")) s.num_agents = j.at("num_agents").get<int>();
    if (j.contains("families")) s.families = j.at("families").get<std::vector<int>>();
    if (j.contains("num_families")) s.families = contiguous_families(s.num_agents, j.at("num_families").get<int>());
    if (j.contains("d")) s.dim = j.at("d").get<Index>();
    if (j.contains("n")) s.samples = j.at("n").get<Index>();
    if (j.contains("num_classes")) s.num_classes = j.at("num_classes").get<int>();
    if (j.contains("support_size")) s.support_size = j.at("support_size").get<int>();
    if (j.contains("within_family_noise")) s.within_family_noise = j.at("within_family_noise").get<double>();
    if (j.contains("between_family_divergence")) {
      s.between_family_divergence = j.at("between_family_divergence").get<double>();
    }
    if (j.contains("noise_sigma")) s.noise_sigma = j.at("noise_sigma").get<double>();
    if (j.contains("seed")) s.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("map_sharing")) s.map_sharing = parse_map_sharing(j.at("map_sharing").get<std::string>());
    if (j.contains("energy_decay")) s.energy_decay = j.at("energy_decay").get<double>();
    if (j.contains("normalize_codes")) s.normalize_codes = j.at("normalize_codes").get<bool>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::BadSpec, std::string("spec: ") + e.what());
  }
  s.validate();
  return s;
}

json sheaf_to_json(const ConnectionSheaf& sheaf) {
  json edges = json::array();
  for (const auto& e : sheaf.edges) {
    edges.push_back({{"u", e.u},
                     {"v", e.v},
                     {"map", matrix_to_json(e.map)},
                     {"raw_loss", e.raw_loss},
                     {"norm_loss", e.norm_loss},
                     {"norm_loss_reverse", e.norm_loss_reverse}});
  }
  json candidates = json::array();
  for (const auto& e : sheaf.candidates) {
    candidates.push_back(
        {{"u", e.u}, {"v", e.v}, {"raw_loss", e.raw_loss}, {"norm_loss", e.norm_loss}, {"norm_loss_reverse", e.norm_loss_reverse}});
  }
  return {{"num_nodes", sheaf.num_nodes}, {"stalk_dim", sheaf.stalk_dim}, {"edges", edges}, {"candidates", candidates}};
}

ConnectionSheaf sheaf_from_json(const json& j) {
  ConnectionSheaf sheaf;
  try {
    sheaf.num_nodes = j.at("num_nodes").get<int>();
    sheaf.stalk_dim = j.at("stalk_dim").get<Index>();
    const auto read_edge = [](const json& e, bool with_map) {
      EdgeCandidate c;
      c.u = e.at("u").get<int>();
      c.v = e.at("v").get<int>();
      c.raw_loss = e.at("raw_loss").get<double>();
      c.norm_loss = e.at("norm_loss").get<double>();
      c.norm_loss_reverse = e.value("norm_loss_reverse", 0.0);
      if (with_map) c.map = matrix_from_json(e.at("map"));
      return c;
    };
    for (const auto& e : j.at("edges")) sheaf.edges.push_back(read_edge(e, true));
    if (j.contains("candidates")) {
      for (const auto& e : j.at("candidates")) sheaf.candidates.push_back(read_edge(e, false));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::FormatError, std::string("sheaf: ") + e.what());
  }
  sheaf.validate(1e-8);
  return sheaf;
}

json report_to_json(const ConvergenceReport& r) {
  return {{"iterations", r.iterations},
          {"converged", r.converged},
          {"primal_residual", r.primal_residual},
          {"dual_residual", r.dual_residual},
          {"objective", r.objective},
          {"zero_column_events", r.zero_column_events}};
}

json signatures_to_json(const std::vector<SemanticSignature>& signatures) {
  json out = json::array();
  for (const auto& s : signatures) {
    out.push_back({{"agent_id", s.agent_id}, {"values", std::vector<double>(s.values.begin(), s.values.end())}});
  }
  return out;
}

json similarity_to_json(const SimilarityReport& r) {
  json zero = json::array();
  for (const auto& [a, b] : r.zero_pairs) zero.push_back({a, b});
  return {{"similarity", matrix_to_json(r.similarity)}, {"zero_signature_pairs", zero}};
}

json accuracy_to_json(const AccuracyReport& r) {
  json agents = json::array();
  for (const auto& a : r.agents) {
    agents.push_back({{"agent", a.agent},
                      {"accuracy", optional_json(a.accuracy)},
                      {"no_neighbors", !a.accuracy.has_value()},
                      {"neighbors", a.neighbors},
                      {"per_neighbor", a.per_neighbor},
                      {"self_accuracy", a.self_accuracy}});
  }
  return {{"agents", agents}, {"mean_accuracy", optional_json(r.mean_accuracy)}, {"neighbor_source", "selected_edges"}};
}

json loss_stats_to_json(const EdgeLossStats& s) {
  json bins = json::array();
  for (const auto& b : s.histogram) {
    bins.push_back({{"bin_left", b.left}, {"bin_right", b.right}, {"count", b.count}, {"class", b.label}});
  }
  return {{"homophilic", s.homophilic},
          {"heterophilic", s.heterophilic},
          {"homophilic_mean", s.homophilic_mean},
          {"homophilic_var", s.homophilic_var},
          {"heterophilic_mean", s.heterophilic_mean},
          {"heterophilic_var", s.heterophilic_var},
          {"separation", optional_json(s.separation)},
          {"homophilic_empty", s.homophilic_empty},
          {"heterophilic_empty", s.heterophilic_empty},
          {"bin_width", s.bin_width},
          {"histogram", bins}};
}

json topology_to_json(const TopologyReport& r) {
  return {{"components", r.components},
          {"num_components", r.num_components},
          {"ari", r.ari},
          {"homophilic_edges", r.homophilic_edges},
          {"heterophilic_edges", r.heterophilic_edges}};
}

json sweep_to_json(const std::vector<ThresholdPoint>& sweep) {
  json out = json::array();
  for (const auto& p : sweep) out.push_back({{"tau", p.tau}, {"num_edges", p.num_edges}, {"ari", p.ari}});
  return out;
}

}  // namespace semsheaf
