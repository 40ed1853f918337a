#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ranges.h>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "adsel/artifact.hpp"
#include "adsel/config.hpp"
#include "adsel/csv.hpp"
#include "adsel/error.hpp"
#include "adsel/eval.hpp"
#include "adsel/feature_table.hpp"
#include "adsel/features.hpp"
#include "adsel/hash.hpp"
#include "adsel/image_io.hpp"
#include "adsel/pipeline.hpp"
#include "adsel/profile.hpp"
#include "adsel/rng.hpp"
#include "adsel/selection.hpp"
#include "adsel/synth.hpp"

namespace fs = std::filesystem;
using namespace adsel;

namespace {

constexpr int kExitItemFailures = 1;
constexpr int kExitError = 2;

// Run-configuration flags shared by the training-related subcommands. Values
// only take effect when given, so a --config file can supply the rest.
struct RunFlags {
  std::string config_file;
  double theta = 0;
  std::size_t k = 0;
  double pcc = 0;
  std::size_t feature_count = 0;
  std::size_t folds = 0;
  std::uint64_t seed = 0;
  std::string criterion;
  std::string fallback;
  std::string features;
  double overhead = 0;
  bool measure_time = false;
  std::map<std::string, CLI::Option*> opts;

  void add(CLI::App* cmd) {
    cmd->add_option("--config", config_file, "key = value configuration file")->check(CLI::ExistingFile);
    opts["theta"] = cmd->add_option("--theta", theta, "Model selection threshold, percentage points (0.5)");
    opts["k"] = cmd->add_option("-k,--k", k, "Neighbours per query (5)");
    opts["pcc_threshold"] = cmd->add_option("--pcc-threshold", pcc, "Correlation pruning threshold (0.75)");
    opts["feature_count"] = cmd->add_option("--feature-count", feature_count, "Features kept by elimination (7)");
    opts["folds"] = cmd->add_option("--folds", folds, "Cross-validation folds (10)");
    opts["seed"] = cmd->add_option("--seed", seed, "Seed for every random stage (0)");
    opts["criterion"] = cmd->add_option("-c,--criterion", criterion, "top1 or top5 (top1)");
    opts["fallback"] = cmd->add_option("--fallback", fallback, "prespecified or abstain (prespecified)");
    opts["features"] = cmd->add_option("--subset", features, "Comma-separated feature subset; skips feature selection");
    opts["premodel_overhead_s"] =
        cmd->add_option("--premodel-overhead", overhead, "Per-image premodel seconds added to end-to-end time (0)");
    opts["measure_time"] = cmd->add_flag("--measure-time", measure_time, "Time scale+predict with a wall clock");
  }

  RunConfig resolve() const {
    RunConfig c;
    if (!config_file.empty()) apply_config(c, read_config(fs::path(config_file)), config_file);
    std::map<std::string, std::string> given;
    for (const auto& [key, opt] : opts) {
      if (opt->count() == 0) continue;
      given[key] = key == "measure_time" ? std::string(measure_time ? "1" : "0") : opt->as<std::string>();
    }
    apply_config(c, given, "command line");
    return c;
  }
};

void configure_logging() {
  auto logger = spdlog::stderr_color_mt("adsel");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  spdlog::set_level(spdlog::level::info);
  if (const char* env = std::getenv("ADSEL_LOG_LEVEL")) {
    auto level = spdlog::level::from_str(env);
    if (level == spdlog::level::off && std::string(env) != "off") {
      spdlog::warn("unknown ADSEL_LOG_LEVEL '{}', keeping info", env);
    } else {
      spdlog::set_level(level);
    }
  }
}

std::ofstream open_out(const std::string& path) {
  if (auto parent = fs::path(path).parent_path(); !parent.empty()) fs::create_directories(parent);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(fmt::format("cannot write {}", path));
  return out;
}

template <class Fill>
void write_file(const std::string& path, Fill&& fill) {
  auto out = open_out(path);
  fill(out);
  if (!out) throw Error(fmt::format("write to {} failed", path));
  spdlog::info("wrote {}", path);
}

struct Inputs {
  FeatureTable features;
  ClassifierProfile profile;
  std::map<std::string, std::string> hashes;
};

ClassifierProfile load_profile_logged(const std::string& path) {
  ClassifierProfile p = load_profile(fs::path(path));
  spdlog::info("profile {}: {} images x {} models", path, p.images(), p.models());
  return p;
}

Inputs load_inputs(const std::string& features_path, const std::string& profile_path) {
  Inputs in{read_feature_csv(fs::path(features_path)), load_profile_logged(profile_path),
            {{"features", sha256_file(features_path)}, {"profile", sha256_file(profile_path)}}};
  check_id_sets(in.features, in.profile);
  return in;
}

// ---------------------------------------------------------------------------

int cmd_extract(const std::string& dir, const std::string& out_path) {
  if (!fs::is_directory(dir)) throw Error(fmt::format("{} is not a directory", dir));
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && is_image_path(e.path())) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  FeatureTable table(std::vector<std::string>(candidate_feature_names().begin(), candidate_feature_names().end()));
  std::size_t failed = 0;
  for (const auto& f : files) {
    try {
      std::string id = f.stem().string();
      if (table.row_index(id)) throw Error(fmt::format("image id '{}' already taken by another file", id));
      table.add_row(id, extract_features(read_image(f)));
    } catch (const std::exception& e) {
      ++failed;
      spdlog::error("{}: {}", f.string(), e.what());
    }
  }
  if (out_path.empty() || out_path == "-") {
    write_feature_csv(std::cout, table);
  } else {
    write_file(out_path, [&](std::ostream& o) { write_feature_csv(o, table); });
  }
  spdlog::info("extracted {} of {} images", table.rows(), files.size());
  return failed ? kExitItemFailures : 0;
}

int cmd_synth(const std::string& spec_path, std::uint64_t seed, std::optional<std::size_t> images,
              const std::string& outdir) {
  std::ifstream in(spec_path);
  if (!in) throw Error(fmt::format("cannot open {}", spec_path));
  SynthSpec spec = parse_synth_spec(in, spec_path);
  if (images) spec.images = *images;
  SynthBundle bundle = generate_synthetic(spec, seed);
  fs::create_directories(outdir);
  write_file((fs::path(outdir) / "profile.csv").string(), [&](std::ostream& o) { write_profile(o, bundle.profile); });
  write_file((fs::path(outdir) / "features.csv").string(), [&](std::ostream& o) { write_feature_csv(o, bundle.features); });
  write_manifest(outdir, {"profile.csv", "features.csv"}, {{"spec", sha256_file(spec_path)}},
                 {{"seed", std::to_string(seed)}, {"images", std::to_string(spec.images)}, {"rng", std::string(Rng::kAlgorithm)}});
  return 0;
}

int cmd_labels(const std::string& profile_path, const std::string& criterion, const std::string& out_path) {
  ClassifierProfile p = load_profile_logged(profile_path);
  auto labels = optimum_labels(p, parse_criterion(criterion));
  if (out_path.empty() || out_path == "-") {
    write_labels_csv(std::cout, p, labels);
  } else {
    write_file(out_path, [&](std::ostream& o) { write_labels_csv(o, p, labels); });
  }
  return 0;
}

int cmd_select_models(const std::string& profile_path, const RunConfig& c, const std::string& out_json,
                      const std::string& out_csv) {
  ClassifierProfile p = load_profile_logged(profile_path);
  ModelSelectionTrace trace = select_inference_models(p, c.criterion, c.theta_pct);
  if (out_json.empty() || out_json == "-") {
    write_trace_json(std::cout, trace);
  } else {
    write_file(out_json, [&](std::ostream& o) { write_trace_json(o, trace); });
  }
  if (!out_csv.empty()) write_file(out_csv, [&](std::ostream& o) { write_trace_csv(o, trace); });
  spdlog::info("selected {}", fmt::format("{}", fmt::join(trace.selected_ids(), " -> ")));
  return 0;
}

int cmd_select_features(const Inputs& in, const RunConfig& c, const std::string& out_json, const std::string& out_csv) {
  ModelSelectionTrace trace = select_inference_models(in.profile, c.criterion, c.theta_pct);
  FeatureSelectionReport r = select_features(in.features, in.profile, trace, c);
  if (out_json.empty() || out_json == "-") {
    write_feature_selection_json(std::cout, r);
  } else {
    write_file(out_json, [&](std::ostream& o) { write_feature_selection_json(o, r); });
  }
  if (!out_csv.empty()) write_file(out_csv, [&](std::ostream& o) { write_feature_selection_csv(o, r); });
  return 0;
}

int cmd_train(const Inputs& in, const RunConfig& c, std::optional<std::size_t> fold, const std::string& out_path) {
  ModelSelectionTrace trace = select_inference_models(in.profile, c.criterion, c.theta_pct);
  auto resolved = resolve_features(in.features, in.profile, trace, c);
  std::vector<std::size_t> rows;
  if (fold) {
    FoldPlan plan = evaluation_folds(in.profile.images(), c);
    if (*fold >= plan.size()) throw Error(fmt::format("fold {} out of range (0..{})", *fold, plan.size() - 1));
    rows = plan.training_rows(*fold);
  }
  PremodelArtifact a = train_artifact(in.features, in.profile, trace, resolved.subset, c, rows, in.hashes);
  write_file(out_path, [&](std::ostream& o) { save_artifact(o, a); });
  return 0;
}

int cmd_evaluate(const Inputs& in, const RunConfig& c, const std::string& out_json, const std::string& out_csv,
                 const std::string& out_decisions) {
  PipelineResult r = run_pipeline(in.features, in.profile, c, in.hashes);
  if (out_json.empty() || out_json == "-") {
    write_reports_json(std::cout, in.profile, r.reports);
  } else {
    write_file(out_json, [&](std::ostream& o) { write_reports_json(o, in.profile, r.reports); });
  }
  if (!out_csv.empty()) write_file(out_csv, [&](std::ostream& o) { write_reports_csv(o, r.reports); });
  if (!out_decisions.empty()) {
    write_file(out_decisions, [&](std::ostream& o) { write_decisions_csv(o, in.profile, r.reports.front()); });
  }
  return 0;
}

std::vector<double> parse_values(const std::string& text) {
  std::vector<double> out;
  for (const auto& f : csv::split(text)) out.push_back(csv::parse_double(f, "--values", 1));
  return out;
}

int cmd_predict(const std::string& cascade_path, const std::string& image, const std::string& values, bool scaled,
                const std::string& features_path, const std::vector<std::string>& ids) {
  const PremodelArtifact a = load_artifact(fs::path(cascade_path));
  const int sources = !image.empty() + !values.empty() + !features_path.empty();
  if (sources != 1) throw Error("give exactly one of --image, --values or --features");
  if (!values.empty()) {
    std::vector<double> v = parse_values(values);
    if (scaled) {
      if (v.size() != a.features.size()) {
        throw Error(fmt::format("{} values given, premodel expects {}", v.size(), a.features.size()));
      }
      for (double x : v) {
        if (x < 0.0 || x > 1.0) throw Error("scaled values must lie in [0, 1]");
      }
      std::cout << prediction_json(predict(a.cascade, v)) << '\n';
    } else {
      std::cout << prediction_json(predict_raw(a, v)) << '\n';
    }
    return 0;
  }
  if (!image.empty()) {
    CandidateFeatureVector f = extract_features(read_image(image));
    std::vector<double> raw;
    for (const auto& name : a.features.names()) {
      auto idx = candidate_feature_index(name);
      if (!idx) throw Error(fmt::format("premodel uses '{}', which is not an extractable feature", name));
      raw.push_back(f.values[*idx]);
    }
    std::cout << prediction_json(predict_raw(a, raw), fs::path(image).stem().string()) << '\n';
    return 0;
  }
  const FeatureTable table = read_feature_csv(fs::path(features_path)).select(a.features);
  std::size_t failed = 0;
  auto emit = [&](std::size_t r) { std::cout << prediction_json(predict_raw(a, table.row(r)), table.image_ids()[r]) << '\n'; };
  if (ids.empty()) {
    for (std::size_t r = 0; r < table.rows(); ++r) emit(r);
  } else {
    for (const auto& id : ids) {
      if (auto r = table.row_index(id)) {
        emit(*r);
      } else {
        ++failed;
        spdlog::error("no feature row for image '{}'", id);
      }
    }
  }
  return failed ? kExitItemFailures : 0;
}

int cmd_report(const std::string& dir) {
  auto issues = verify_manifest(dir);
  for (const auto& i : issues) spdlog::error("{}: {}", i.file, i.problem);
  const fs::path report = fs::path(dir) / "report.json";
  if (fs::exists(report)) {
    std::ifstream in(report);
    auto j = nlohmann::ordered_json::parse(in);
    std::cout << fmt::format("criterion {}  images {}  oracle accuracy {:.4f}\n", j.at("criterion").get<std::string>(),
                             j.at("images").get<std::size_t>(), j.at("oracle_accuracy").get<double>());
    std::cout << fmt::format("{:<24} {:>9} {:>9} {:>9} {:>9} {:>12}\n", "policy", "acc", "f1", "optimal", "abstain",
                             "end_to_end_s");
    for (const auto& p : j.at("policies")) {
      const auto& g = p.at("aggregate");
      std::cout << fmt::format("{:<24} {:>9.4f} {:>9.4f} {:>9.4f} {:>9.4f} {:>12.6f}\n",
                               p.at("policy").get<std::string>(),
                               g.at(j.at("criterion").get<std::string>() == "top5" ? "accuracy_top5" : "accuracy_top1")
                                   .get<double>(),
                               g.at("f1").get<double>(), g.at("optimality").get<double>(),
                               g.at("abstention").get<double>(), g.at("mean_end_to_end_s").get<double>());
    }
  }
  if (issues.empty()) std::cout << "manifest: all hashes match\n";
  return issues.empty() ? 0 : kExitItemFailures;
}

int cmd_pipeline(const Inputs& in, const RunConfig& c, const std::string& outdir) {
  PipelineResult r = run_pipeline(in.features, in.profile, c, in.hashes);
  auto files = write_pipeline_outputs(r, in.profile, c, in.hashes, outdir);
  spdlog::info("cascade {} over features {}; wrote {} files to {}", fmt::join(r.trace.selected_ids(), " -> "),
               fmt::join(r.features.names(), ","), files.size(), outdir);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  configure_logging();
  CLI::App app{"Adaptive model selection: learn a KNN premodel that picks the cheapest classifier per input"};
  app.require_subcommand(1);
  int code = 0;

  std::string dir, out, out_csv, out_decisions, profile_path, features_path, criterion = "top1", spec_path;
  std::string cascade_path, image, values;
  std::vector<std::string> ids;
  bool scaled = false;
  std::uint64_t synth_seed = 0;
  std::size_t synth_images = 0, fold = 0;
  RunFlags flags;

  auto* extract = app.add_subcommand("extract", "Extract candidate features from a directory of PNG/PPM images");
  extract->add_option("images", dir, "Image directory")->required();
  extract->add_option("-o,--out", out, "Feature CSV (stdout when omitted)");
  extract->callback([&] { code = cmd_extract(dir, out); });

  auto* synth = app.add_subcommand("synth", "Generate a synthetic profile and feature table from a JSON spec");
  synth->add_option("spec", spec_path, "Spec file")->required()->check(CLI::ExistingFile);
  synth->add_option("--seed", synth_seed, "Generator seed");
  auto* synth_n = synth->add_option("--images", synth_images, "Override the spec's image count");
  synth->add_option("-o,--out", out, "Output directory")->required();
  synth->callback([&] {
    code = cmd_synth(spec_path, synth_seed, synth_n->count() ? std::optional(synth_images) : std::nullopt, out);
  });

  auto* labels = app.add_subcommand("labels", "Write the optimum model of every profiled image");
  labels->add_option("--profile", profile_path, "Profile CSV")->required();
  labels->add_option("-c,--criterion", criterion, "top1 or top5");
  labels->add_option("-o,--out", out, "Labels CSV (stdout when omitted)");
  labels->callback([&] { code = cmd_labels(profile_path, criterion, out); });

  auto* select_models = app.add_subcommand("select-models", "Choose the cascade's models");
  select_models->add_option("--profile", profile_path, "Profile CSV")->required();
  select_models->add_option("-o,--out", out, "Trace JSON (stdout when omitted)");
  select_models->add_option("--csv", out_csv, "Trace CSV");
  RunFlags sm_flags;
  sm_flags.add(select_models);
  select_models->callback([&] { code = cmd_select_models(profile_path, sm_flags.resolve(), out, out_csv); });

  auto add_inputs = [&](CLI::App* cmd) {
    cmd->add_option("--features", features_path, "Feature CSV")->required();
    cmd->add_option("--profile", profile_path, "Profile CSV")->required();
  };

  auto* select_feats = app.add_subcommand("select-features", "Correlation pruning and greedy feature elimination");
  add_inputs(select_feats);
  select_feats->add_option("-o,--out", out, "Report JSON (stdout when omitted)");
  select_feats->add_option("--csv", out_csv, "Report CSV");
  flags.add(select_feats);

  auto* train = app.add_subcommand("train", "Train a premodel and save it");
  add_inputs(train);
  auto* train_fold = train->add_option("--fold", fold, "Leave out this evaluation fold");
  train->add_option("-o,--out", out, "Premodel file")->required();
  RunFlags train_flags;
  train_flags.add(train);

  auto* evaluate = app.add_subcommand("evaluate", "Cross-validate the premodel against single models and the oracle");
  add_inputs(evaluate);
  evaluate->add_option("-o,--out", out, "Report JSON (stdout when omitted)");
  evaluate->add_option("--csv", out_csv, "Report CSV");
  evaluate->add_option("--decisions", out_decisions, "Per-image premodel decisions CSV");
  RunFlags eval_flags;
  eval_flags.add(evaluate);

  auto* predict_cmd = app.add_subcommand("predict", "Choose a model for an image or a feature vector");
  predict_cmd->add_option("--cascade", cascade_path, "Premodel file")->required()->check(CLI::ExistingFile);
  predict_cmd->add_option("--image", image, "Image file");
  predict_cmd->add_option("--values", values, "Comma-separated feature values in premodel order");
  predict_cmd->add_flag("--scaled", scaled, "Values are already scaled to [0, 1]");
  predict_cmd->add_option("--features", features_path, "Feature CSV; every row unless --id is given");
  predict_cmd->add_option("--id", ids, "Image id(s) to look up in --features");
  predict_cmd->callback([&] { code = cmd_predict(cascade_path, image, values, scaled, features_path, ids); });

  auto* report = app.add_subcommand("report", "Verify a pipeline directory's manifest and summarise its report");
  report->add_option("dir", dir, "Pipeline output directory")->required()->check(CLI::ExistingDirectory);
  report->callback([&] { code = cmd_report(dir); });

  auto* pipeline = app.add_subcommand("pipeline", "Run labels, model selection, feature selection, training, evaluation");
  add_inputs(pipeline);
  pipeline->add_option("-o,--out", out, "Output directory")->required();
  RunFlags pipe_flags;
  pipe_flags.add(pipeline);

  select_feats->callback([&] {
    code = cmd_select_features(load_inputs(features_path, profile_path), flags.resolve(), out, out_csv);
  });
  train->callback([&] {
    code = cmd_train(load_inputs(features_path, profile_path), train_flags.resolve(),
                     train_fold->count() ? std::optional(fold) : std::nullopt, out);
  });
  evaluate->callback([&] {
    code = cmd_evaluate(load_inputs(features_path, profile_path), eval_flags.resolve(), out, out_csv, out_decisions);
  });
  pipeline->callback([&] { code = cmd_pipeline(load_inputs(features_path, profile_path), pipe_flags.resolve(), out); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitError;
  }
  return code;
}
