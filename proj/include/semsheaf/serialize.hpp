#pragma once

#include <vector>

#include "semsheaf/analysis.hpp"
#include "semsheaf/dictionary_learning.hpp"
#include "semsheaf/io.hpp"
#include "semsheaf/sheaf_learning.hpp"
#include "semsheaf/synthetic_data.hpp"

namespace semsheaf {

/// Nested row arrays.
json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const json& j);

/// Config schema keys: gamma, rho, budgets (int or list), alpha0, mu,
/// max_iters, eps_abs, eps_rel, seed, edge_rule ("topk:E0" | "threshold:tau"),
/// init ("spectral" | "random"), candidate_edges ([[u, v], ...]).
json config_to_json(const LearnConfig& config);
/// Overlays the keys present in `j` onto `base`. Unknown keys are BadConfig.
LearnConfig config_from_json(const json& j, LearnConfig base = {});

json spec_to_json(const SyntheticSpec& spec);
/// Unknown keys are BadSpec.
SyntheticSpec spec_from_json(const json& j, SyntheticSpec base = {});

json sheaf_to_json(const ConnectionSheaf& sheaf);
ConnectionSheaf sheaf_from_json(const json& j);

json report_to_json(const ConvergenceReport& report);
json signatures_to_json(const std::vector<SemanticSignature>& signatures);
json similarity_to_json(const SimilarityReport& report);
json accuracy_to_json(const AccuracyReport& report);
json loss_stats_to_json(const EdgeLossStats& stats);
json topology_to_json(const TopologyReport& report);
json sweep_to_json(const std::vector<ThresholdPoint>& sweep);

}  // namespace semsheaf
