#include "semsheaf/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <ostream>
#include <sstream>

#include "semsheaf/serialize.hpp"

namespace semsheaf {
namespace {

constexpr const char* kDictionaryFile = "dictionary.semb";
constexpr const char* kDictionaryMeta = "dictionary.json";

std::vector<Matrix> matrices_of(const StackedEmbeddings& X) {
  std::vector<Matrix> out;
  for (const auto& b : X.blocks()) out.push_back(b.matrix);
  return out;
}

json bundle_fingerprint(const fs::path& bundle_dir) {
  return {{"manifest_checksum", file_checksum(bundle_dir / "manifest.json")}};
}

// Command-line overrides of LearnConfig fields, applied after the config file.
struct ConfigFlags {
  std::string config_file;
  double gamma = 0.0;
  double rho = 0.0;
  double alpha0 = 0.0;
  double mu = 0.0;
  std::vector<int> budgets;
  int max_iters = 0;
  double eps_abs = 0.0;
  double eps_rel = 0.0;
  std::uint64_t seed = 0;
  std::string edge_rule;
  std::string init;
  bool serial = false;
  std::vector<CLI::Option*> options;

  void attach(CLI::App* app, bool dictionary, bool sheaf) {
    app->add_option("--config", config_file, "JSON config file")->check(CLI::ExistingFile);
    options.push_back(app->add_option("--seed", seed, "random seed"));
    if (dictionary) {
      options.push_back(app->add_option("--gamma", gamma, "logdet weight"));
      options.push_back(app->add_option("--rho", rho, "ADMM penalty"));
      options.push_back(app->add_option("--alpha0", alpha0, "initial step size"));
      options.push_back(app->add_option("--mu", mu, "step size decay"));
      options.push_back(app->add_option("--budget", budgets, "row budget d' (one value or one per agent)")
                            ->delimiter(','));
      options.push_back(app->add_option("--max-iters", max_iters, "iteration cap"));
      options.push_back(app->add_option("--eps-abs", eps_abs, "absolute residual tolerance"));
      options.push_back(app->add_option("--eps-rel", eps_rel, "relative residual tolerance"));
      options.push_back(app->add_option("--init", init, "spectral | random"));
    }
    if (sheaf) options.push_back(app->add_option("--edge-rule", edge_rule, "topk:<E0> | threshold:<tau>"));
    app->add_flag("--serial", serial, "run the serial reference kernels");
  }

  bool given(const std::string& name) const {
    for (const auto* o : options) {
      if (o->get_name() == name && o->count() > 0) return true;
    }
    return false;
  }

  LearnConfig resolve() const {
    LearnConfig c;
    if (!config_file.empty()) c = config_from_json(read_json(config_file));
    json overrides = json::object();
    if (given("--gamma")) overrides["gamma"] = gamma;
    if (given("--rho")) overrides["rho"] = rho;
    if (given("--alpha0")) overrides["alpha0"] = alpha0;
    if (given("--mu")) overrides["mu"] = mu;
    if (given("--budget")) overrides["budgets"] = budgets;
    if (given("--max-iters")) overrides["max_iters"] = max_iters;
    if (given("--eps-abs")) overrides["eps_abs"] = eps_abs;
    if (given("--eps-rel")) overrides["eps_rel"] = eps_rel;
    if (given("--seed")) overrides["seed"] = seed;
    if (given("--edge-rule")) overrides["edge_rule"] = edge_rule;
    if (given("--init")) overrides["init"] = init;
    c = config_from_json(overrides, c);
    if (serial) c.execution = Execution::Serial;
    return c;
  }
};

void write_error(std::ostream& err, const std::string& kind, const std::string& message, int code,
                 const std::string& stage) {
  err << json{{"error", {{"kind", kind}, {"message", message}, {"exit_code", code}, {"stage", stage}}}}.dump()
      << "\n";
}

std::vector<Matrix> representations_for(const NetworkBundle& bundle, const std::optional<fs::path>& dict_dir,
                                        bool baseline) {
  if (baseline || !dict_dir) return matrices_of(bundle.embeddings);
  const auto artifacts = read_dictionary_artifacts(*dict_dir);
  if (static_cast<Index>(artifacts.codes.size()) != bundle.embeddings.num_agents()) {
    throw Error(ErrorKind::ManifestMismatch, "dictionary artifacts do not match the bundle's agent count");
  }
  return denoised_representations(artifacts.dictionary, artifacts.codes);
}

}  // namespace

void write_dictionary_artifacts(const fs::path& dir, const NetworkBundle& bundle, const DictionaryResult& result,
                                const LearnConfig& config) {
  fs::create_directories(dir / "codes");
  const std::string dict_bytes = encode_matrix(result.dictionary.atoms);
  write_file_atomic(dir / kDictionaryFile, dict_bytes);
  json codes = json::array();
  const Index d = bundle.embeddings.dim();
  for (std::size_t i = 0; i < result.codes.size(); ++i) {
    const std::string file = "codes/" + bundle.agent_names[i] + ".semb";
    const std::string bytes = encode_matrix(result.codes[i].codes);
    write_file_atomic(dir / file, bytes);
    codes.push_back({{"agent", bundle.agent_names[i]},
                     {"file", file},
                     {"checksum", checksum(bytes)},
                     {"budget", config.budget(static_cast<Index>(i), d)},
                     {"nonzero_rows", nonzero_rows(result.codes[i].codes)}});
  }
  const json meta = {
      {"config", config_to_json(config)},
      {"dictionary", {{"file", kDictionaryFile}, {"checksum", checksum(dict_bytes)}, {"gamma", result.dictionary.gamma}}},
      {"codes", codes},
      {"report", report_to_json(result.report)},
      {"max_iters_exceeded", result.max_iters_exceeded},
  };
  write_json(dir / kDictionaryMeta, meta);
}

DictionaryArtifacts read_dictionary_artifacts(const fs::path& dir) {
  DictionaryArtifacts out;
  out.metadata = read_json(dir / kDictionaryMeta);
  try {
    const json& dict = out.metadata.at("dictionary");
    const std::string bytes = read_file(dir / dict.at("file").get<std::string>());
    if (checksum(bytes) != dict.at("checksum").get<std::string>()) {
      throw Error(ErrorKind::ChecksumError, "dictionary checksum mismatch");
    }
    out.dictionary.atoms = decode_matrix(bytes, (dir / kDictionaryFile).string());
    out.dictionary.gamma = dict.value("gamma", 0.0);
    int agent = 0;
    for (const auto& c : out.metadata.at("codes")) {
      const fs::path file = dir / c.at("file").get<std::string>();
      const std::string code_bytes = read_file(file);
      if (checksum(code_bytes) != c.at("checksum").get<std::string>()) {
        throw Error(ErrorKind::ChecksumError, file.string() + ": checksum mismatch");
      }
      out.codes.push_back({agent++, decode_matrix(code_bytes, file.string()), c.at("budget").get<int>()});
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::FormatError, (dir / kDictionaryMeta).string() + ": " + e.what());
  }
  return out;
}

json run_gen(const SyntheticSpec& spec, const fs::path& out_dir) {
  const SyntheticNetwork net = generate(spec);
  write_network(out_dir, make_bundle(net, spec_to_json(spec)));
  return {{"spec", spec_to_json(spec)}, {"bundle", bundle_fingerprint(out_dir)}};
}

json run_dict_learn(const fs::path& bundle_dir, const LearnConfig& config, const fs::path& out_dir) {
  const NetworkBundle bundle = read_network(bundle_dir);
  const DictionaryResult result = learn_dictionary(bundle.embeddings, config);
  write_dictionary_artifacts(out_dir, bundle, result, config);
  return {{"config", config_to_json(config)},
          {"iterations", result.report.iterations},
          {"converged", result.report.converged},
          {"bundle", bundle_fingerprint(bundle_dir)}};
}

json run_sheaf_learn(const fs::path& bundle_dir, const std::optional<fs::path>& dict_dir, const LearnConfig& config,
                     bool baseline, const fs::path& out_file) {
  const NetworkBundle bundle = read_network(bundle_dir);
  const auto reps = representations_for(bundle, dict_dir, baseline);
  const ConnectionSheaf sheaf = learn_sheaf(reps, config);
  json artifact = sheaf_to_json(sheaf);
  artifact["config"] = config_to_json(config);
  artifact["baseline"] = baseline || !dict_dir;
  artifact["bundle"] = bundle_fingerprint(bundle_dir);
  if (dict_dir && !baseline) {
    artifact["dictionary_checksum"] = file_checksum(*dict_dir / kDictionaryMeta);
  }
  write_json(out_file, artifact);
  return {{"num_edges", sheaf.edges.size()}, {"num_candidates", sheaf.candidates.size()}};
}

json run_analyze(const fs::path& bundle_dir, const std::optional<fs::path>& dict_dir, const fs::path& sheaf_file,
                 const LearnConfig& config, double bin_width, const std::optional<std::vector<int>>& sweep_budgets,
                 const fs::path& out_dir) {
  const NetworkBundle bundle = read_network(bundle_dir);
  const json sheaf_json = read_json(sheaf_file);
  const ConnectionSheaf sheaf = sheaf_from_json(sheaf_json);
  if (sheaf.num_nodes != bundle.embeddings.num_agents()) {
    throw Error(ErrorKind::ManifestMismatch, "sheaf and bundle disagree on the number of agents");
  }
  json report = {{"config", config_to_json(config)},
                 {"bin_width", bin_width},
                 {"bundle", bundle_fingerprint(bundle_dir)},
                 {"sheaf_checksum", file_checksum(sheaf_file)}};

  std::optional<DictionaryArtifacts> artifacts;
  if (dict_dir) artifacts = read_dictionary_artifacts(*dict_dir);
  std::vector<Matrix> reps;
  if (artifacts) {
    std::vector<SemanticSignature> signatures;
    for (const auto& c : artifacts->codes) signatures.push_back(semantic_signature(c));
    report["signatures"] = signatures_to_json(signatures);
    report["signature_similarity"] = similarity_to_json(signature_similarity(signatures));
    reps = denoised_representations(artifacts->dictionary, artifacts->codes);
  } else {
    reps = matrices_of(bundle.embeddings);
  }

  const TrainTestSplit split = split_columns(bundle.embeddings.samples(), config.seed);
  if (bundle.labels) {
    report["accuracy"] = accuracy_to_json(average_accuracy(sheaf, reps, *bundle.labels, split, config.execution));
  } else {
    report["accuracy"] = nullptr;
  }

  if (bundle.families) {
    const EdgeLossStats stats = edge_loss_stats(sheaf.candidates, *bundle.families, bin_width);
    report["edge_loss_stats"] = loss_stats_to_json(stats);
    report["topology"] = topology_to_json(topology_quality(sheaf, *bundle.families));
    report["threshold_sweep"] = sweep_to_json(threshold_sweep(sheaf, *bundle.families));
    std::ostringstream csv;
    write_histogram_csv(csv, stats);
    write_file_atomic(out_dir / "edge_loss_histogram.csv", csv.str());
  } else {
    report["edge_loss_stats"] = nullptr;
    report["topology"] = nullptr;
  }

  if (sweep_budgets) {
    if (!bundle.labels) throw Error(ErrorKind::ManifestMismatch, "budget sweep needs a labels file");
    std::ostringstream csv;
    csv.precision(17);
    csv << "budget,agent,accuracy,num_neighbors,num_edges\n";
    json sweep = json::array();
    for (int b : *sweep_budgets) {
      LearnConfig c = config;
      c.budgets = {b};
      const DictionaryResult result = learn_dictionary(bundle.embeddings, c);
      const ConnectionSheaf s = learn_sheaf(denoised_representations(result.dictionary, result.codes), c);
      const AccuracyReport acc = average_accuracy(s, result.dictionary, result.codes, *bundle.labels, split,
                                                  c.execution);
      for (const auto& a : acc.agents) {
        csv << b << ',' << bundle.agent_names[static_cast<std::size_t>(a.agent)] << ',';
        if (a.accuracy) csv << *a.accuracy;
        csv << ',' << a.neighbors.size() << ',' << s.edges.size() << '\n';
      }
      sweep.push_back({{"budget", b},
                       {"num_edges", s.edges.size()},
                       {"iterations", result.report.iterations},
                       {"converged", result.report.converged},
                       {"accuracy", accuracy_to_json(acc)}});
    }
    write_file_atomic(out_dir / "budget_sweep.csv", csv.str());
    report["budget_sweep"] = sweep;
  }
  write_json(out_dir / "analysis.json", report);
  return {{"num_edges", sheaf.edges.size()}};
}

std::vector<int> parse_budget_sweep(const std::string& text) {
  const std::string prefix = "budget=";
  if (text.rfind(prefix, 0) != 0) throw Error(ErrorKind::Usage, "sweep must look like budget=30,70,100");
  std::vector<int> values;
  std::istringstream in(text.substr(prefix.size()));
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      std::size_t used = 0;
      const int v = std::stoi(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      values.push_back(v);
    } catch (const std::logic_error&) {
      throw Error(ErrorKind::Usage, "bad sweep value '" + item + "'");
    }
  }
  if (values.empty()) throw Error(ErrorKind::Usage, "sweep lists no budgets");
  return values;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sparse sheaf learning for multi-agent semantic alignment", "semsheaf"};
  app.require_subcommand(1);

  std::string spec_file;
  std::string bundle_dir;
  std::string dict_dir;
  std::string out_path;
  std::string sheaf_file;
  std::string sweep;
  bool baseline = false;
  double bin_width = 0.05;
  std::uint64_t spec_seed = 0;

  auto* gen = app.add_subcommand("gen", "generate a synthetic network bundle from a spec JSON");
  gen->add_option("--spec", spec_file, "SyntheticSpec JSON")->required()->check(CLI::ExistingFile);
  gen->add_option("--out", out_path, "bundle directory")->required();
  auto* gen_seed = gen->add_option("--seed", spec_seed, "override the spec seed");

  ConfigFlags dict_flags;
  auto* dict = app.add_subcommand("dict-learn", "learn the shared dictionary and sparse codes");
  dict->add_option("--bundle", bundle_dir, "bundle directory")->required()->check(CLI::ExistingDirectory);
  dict->add_option("--out", out_path, "output directory")->required();
  dict_flags.attach(dict, true, false);

  ConfigFlags sheaf_flags;
  auto* sheaf = app.add_subcommand("sheaf-learn", "learn the connection graph and edge maps");
  sheaf->add_option("--bundle", bundle_dir, "bundle directory")->required()->check(CLI::ExistingDirectory);
  sheaf->add_option("--dict", dict_dir, "dictionary artifact directory")->check(CLI::ExistingDirectory);
  sheaf->add_option("--out", out_path, "sheaf JSON file")->required();
  sheaf->add_flag("--baseline", baseline, "align raw embeddings, skipping denoising");
  sheaf_flags.attach(sheaf, false, true);

  ConfigFlags analyze_flags;
  auto* analyze = app.add_subcommand("analyze", "signatures, accuracy, edge-loss statistics, topology quality");
  analyze->add_option("--bundle", bundle_dir, "bundle directory")->required()->check(CLI::ExistingDirectory);
  analyze->add_option("--dict", dict_dir, "dictionary artifact directory")->check(CLI::ExistingDirectory);
  analyze->add_option("--sheaf", sheaf_file, "sheaf JSON")->required()->check(CLI::ExistingFile);
  analyze->add_option("--out", out_path, "output directory")->required();
  analyze->add_option("--bin-width", bin_width, "histogram bin width");
  analyze->add_option("--sweep", sweep, "budget=<d'1>,<d'2>,...");
  analyze_flags.attach(analyze, true, true);

  ConfigFlags pipe_flags;
  auto* pipeline = app.add_subcommand("pipeline", "gen (optional), dict-learn, sheaf-learn, analyze");
  auto* pipe_spec = pipeline->add_option("--spec", spec_file, "SyntheticSpec JSON")->check(CLI::ExistingFile);
  auto* pipe_bundle =
      pipeline->add_option("--bundle", bundle_dir, "existing bundle directory")->check(CLI::ExistingDirectory);
  pipe_spec->excludes(pipe_bundle);
  pipeline->add_option("--out", out_path, "output directory")->required();
  pipeline->add_option("--bin-width", bin_width, "histogram bin width");
  pipeline->add_option("--sweep", sweep, "budget=<d'1>,<d'2>,...");
  pipe_flags.attach(pipeline, true, true);

  std::string stage = "parse";
  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    write_error(err, "Usage", e.what(), 1, stage);
    return 1;
  }

  try {
    if (gen->parsed()) {
      stage = "gen";
      SyntheticSpec spec = spec_from_json(read_json(spec_file));
      if (gen_seed->count() > 0) spec.seed = spec_seed;
      run_gen(spec, out_path);
      out << "wrote bundle " << out_path << "\n";
    } else if (dict->parsed()) {
      stage = "dict-learn";
      const json summary = run_dict_learn(bundle_dir, dict_flags.resolve(), out_path);
      out << "dictionary learned in " << summary.at("iterations") << " iterations, converged "
          << summary.at("converged") << "\n";
    } else if (sheaf->parsed()) {
      stage = "sheaf-learn";
      std::optional<fs::path> d;
      if (!dict_dir.empty()) d = dict_dir;
      const json summary = run_sheaf_learn(bundle_dir, d, sheaf_flags.resolve(), baseline, out_path);
      out << summary.at("num_edges") << " of " << summary.at("num_candidates") << " candidate edges selected\n";
    } else if (analyze->parsed()) {
      stage = "analyze";
      std::optional<fs::path> d;
      if (!dict_dir.empty()) d = dict_dir;
      std::optional<std::vector<int>> budgets;
      if (!sweep.empty()) budgets = parse_budget_sweep(sweep);
      run_analyze(bundle_dir, d, sheaf_file, analyze_flags.resolve(), bin_width, budgets, out_path);
      out << "wrote " << (fs::path(out_path) / "analysis.json").string() << "\n";
    } else if (pipeline->parsed()) {
      const fs::path root = out_path;
      const LearnConfig config = pipe_flags.resolve();
      std::optional<std::vector<int>> budgets;
      if (!sweep.empty()) budgets = parse_budget_sweep(sweep);
      json summary = {{"config", config_to_json(config)}};
      fs::path bundle = bundle_dir;
      if (!spec_file.empty()) {
        stage = "gen";
        const SyntheticSpec spec = spec_from_json(read_json(spec_file));
        bundle = root / "bundle";
        summary["gen"] = run_gen(spec, bundle);
        summary["spec_seed"] = spec.seed;
      } else if (bundle_dir.empty()) {
        throw Error(ErrorKind::Usage, "pipeline needs --spec or --bundle");
      }
      stage = "dict-learn";
      summary["dict_learn"] = run_dict_learn(bundle, config, root / "dict");
      stage = "sheaf-learn";
      summary["sheaf_learn"] = run_sheaf_learn(bundle, root / "dict", config, false, root / "sheaf.json");
      summary["sheaf_learn_baseline"] = run_sheaf_learn(bundle, std::nullopt, config, true, root / "sheaf_baseline.json");
      stage = "analyze";
      run_analyze(bundle, root / "dict", root / "sheaf.json", config, bin_width, budgets, root / "analysis");
      run_analyze(bundle, std::nullopt, root / "sheaf_baseline.json", config, bin_width, std::nullopt,
                  root / "analysis_baseline");
      summary["config_seed"] = config.seed;
      json listed = json::array();
      for (const char* name : {"bundle/manifest.json", "dict/dictionary.json", "dict/dictionary.semb", "sheaf.json",
                               "sheaf_baseline.json", "analysis/analysis.json", "analysis/edge_loss_histogram.csv",
                               "analysis/budget_sweep.csv", "analysis_baseline/analysis.json"}) {
        if (fs::exists(root / name)) listed.push_back(name);
      }
      summary["artifacts"] = listed;
      write_json(root / "pipeline.json", summary);
      out << "pipeline complete: " << (root / "pipeline.json").string() << "\n";
    }
  } catch (const Error& e) {
    write_error(err, std::string(to_string(e.kind())), e.what(), exit_code(e.kind()), stage);
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    write_error(err, "IOError", e.what(), 2, stage);
    return 2;
  }
  return 0;
}

}  // namespace semsheaf
