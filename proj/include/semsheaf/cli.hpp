#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "semsheaf/analysis.hpp"
#include "semsheaf/dictionary_learning.hpp"
#include "semsheaf/io.hpp"
#include "semsheaf/synthetic_data.hpp"

namespace semsheaf {

/// Dictionary artifacts as written by dict-learn.
struct DictionaryArtifacts {
  Dictionary dictionary;
  std::vector<SparseCodes> codes;
  json metadata;
};

void write_dictionary_artifacts(const fs::path& dir, const NetworkBundle& bundle, const DictionaryResult& result,
                                const LearnConfig& config);
DictionaryArtifacts read_dictionary_artifacts(const fs::path& dir);

/// Stage drivers. Each writes its artifacts atomically and returns the JSON
/// summary it wrote.
json run_gen(const SyntheticSpec& spec, const fs::path& out_dir);
json run_dict_learn(const fs::path& bundle_dir, const LearnConfig& config, const fs::path& out_dir);
json run_sheaf_learn(const fs::path& bundle_dir, const std::optional<fs::path>& dict_dir, const LearnConfig& config,
                     bool baseline, const fs::path& out_file);
json run_analyze(const fs::path& bundle_dir, const std::optional<fs::path>& dict_dir, const fs::path& sheaf_file,
                 const LearnConfig& config, double bin_width, const std::optional<std::vector<int>>& sweep_budgets,
                 const fs::path& out_dir);

/// Parses "budget=30,70,100".
std::vector<int> parse_budget_sweep(const std::string& text);

/// Entry point: args excludes the program name. Errors are reported as a
/// JSON object on `err`; the return value is the process exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace semsheaf
