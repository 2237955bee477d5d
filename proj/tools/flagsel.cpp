// flagsel: extract / enumerate / campaign / train / predict / run.
//
// Exit status: 0 ok, 1 usage, 2 bad input or data, 3 internal invariant.
// Machine output goes to stdout, everything else to stderr.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "flagsel/flagsel.hpp"

namespace fs = std::filesystem;
using namespace flagsel;
using ojson = nlohmann::ordered_json;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitInternal = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::size_t default_jobs() {
  if (const char* env = std::getenv("FLAGSEL_JOBS")) {
    try {
      const long v = std::stol(env);
      if (v > 0) return static_cast<std::size_t>(v);
    } catch (...) {
    }
    std::cerr << "flagsel: ignoring FLAGSEL_JOBS='" << env << "'\n";
  }
  return 1;
}

TaskType task_arg(const std::string& s) {
  try {
    return parse_task_type(s);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
}

BackendArgMap load_arg_map(const std::string& path) {
  if (path.empty()) return BackendArgMap::defaults();
  try {
    return backend_arg_map_from_json(nlohmann::json::parse(read_text_file(path)));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, path + ": " + e.what());
  }
}

std::unique_ptr<BackendRunner> make_backend(const std::string& spec, std::uint64_t seed) {
  if (spec == "mock") return std::make_unique<MockBackend>(seed);
  if (spec.starts_with("exec:")) return std::make_unique<ProcessBackend>(ProcessBackend::from_spec(spec.substr(5)));
  throw UsageError("--backend must be 'mock' or 'exec:<command>'");
}

std::string shell_quote(const std::string& s) {
  if (!s.empty() && s.find_first_not_of("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789-_=.,/:+") ==
                        std::string::npos)
    return s;
  std::string out = "'";
  for (char c : s) out += c == '\'' ? std::string("'\\''") : std::string(1, c);
  return out + "'";
}

std::string join_args(const std::vector<std::string>& args) {
  std::string out;
  for (const auto& a : args) out += (out.empty() ? "" : " ") + shell_quote(a);
  return out;
}

std::string format_number(double v) {
  std::ostringstream s;
  s << std::setprecision(6) << v;
  return s.str();
}

// ---- extract ---------------------------------------------------------------

struct ExtractArgs {
  std::string file;
  bool json = false;
  std::vector<std::string> prefixes;
};

int cmd_extract(const ExtractArgs& a) {
  ExtractOptions opt;
  if (!a.prefixes.empty()) opt.nondet_prefixes = a.prefixes;
  const FeatureVector f = extract_features(read_text_file(a.file), opt);
  if (a.json) {
    std::cout << to_json(f).dump(2) << "\n";
    return 0;
  }
  const auto values = f.to_array();
  for (std::size_t i = 0; i < kFeatureCount; ++i)
    std::cout << std::left << std::setw(34) << kFeatureNames[i] << format_number(values[i]) << "\n";
  return 0;
}

// ---- enumerate -------------------------------------------------------------

struct EnumerateArgs {
  std::optional<std::size_t> index;
  bool json = false;
  std::string arg_map;
};

int cmd_enumerate(const EnumerateArgs& a) {
  std::vector<FlagConfiguration> configs;
  if (a.index) {
    if (*a.index >= kFlagSpaceSize) throw UsageError("--index must be in 0..383");
    configs.push_back(configuration_at(*a.index));
  } else {
    configs = enumerate_flags();
  }
  const BackendArgMap map = load_arg_map(a.arg_map);
  if (a.json) {
    auto entry = [&](const FlagConfiguration& c) {
      ojson j = to_json(c);
      j["backend_args"] = to_backend_args(c, map);
      return j;
    };
    if (a.index) {
      std::cout << entry(configs.front()).dump(2) << "\n";
    } else {
      ojson arr = ojson::array();
      for (const auto& c : configs) arr.push_back(entry(c));
      std::cout << arr.dump(2) << "\n";
    }
    return 0;
  }
  for (const auto& c : configs) std::cout << canonical_index(c) << "\t" << to_canonical_text(c) << "\n";
  return 0;
}

// ---- campaign --------------------------------------------------------------

struct CampaignArgs {
  std::string manifest, backend = "mock", out, arg_map;
  std::size_t jobs = 1;
  std::uint64_t seed = 0;
  bool resume = false;
  bool quiet = false;
};

int cmd_campaign(const CampaignArgs& a) {
  const auto manifest = load_manifest(a.manifest);
  const auto runner = make_backend(a.backend, a.seed);

  CampaignOptions opt;
  opt.jobs = a.jobs;
  opt.arg_map = load_arg_map(a.arg_map);

  Dataset previous;
  if (a.resume && fs::exists(a.out)) {
    previous = read_dataset(a.out);
    for (const auto& r : previous) opt.skip.insert({r.benchmark_id, canonical_index(r.flags)});
    std::cerr << "campaign: resuming, " << previous.size() << " records already present\n";
  }

  std::size_t last_percent = 101;
  if (!a.quiet) {
    opt.progress = [&](std::size_t done, std::size_t total) {
      const std::size_t percent = done * 100 / total;
      if (percent / 10 != last_percent / 10 || done == total) {
        std::cerr << "campaign: " << done << "/" << total << " runs\n";
        last_percent = percent;
      }
    };
  }

  const Dataset fresh = run_campaign(manifest, *runner, opt);
  const Dataset all = previous.empty() ? fresh : merge_in_canonical_order(manifest, previous, fresh);
  write_dataset(a.out, all);

  std::size_t failed = 0;
  for (const auto& r : fresh) failed += r.note.starts_with("run failed") ? 1 : 0;
  std::cerr << "campaign: wrote " << all.size() << " records to " << a.out;
  if (failed) std::cerr << " (" << failed << " failed runs recorded as class 5)";
  std::cerr << "\n";
  return 0;
}

// ---- train -----------------------------------------------------------------

struct TrainArgs {
  std::string data, model_kind, out, task;
  double holdout = 0.2;
  bool json = false;
  // dtc
  std::size_t max_depth = 0, min_samples_leaf = 1;
  // svc
  double c = 1.0, gamma = 0.0;
  std::string kernel = "rbf";
  std::size_t svc_max_rows = 4000;
  // nnr
  std::vector<std::size_t> hidden{32};
  double learning_rate = 0.01;
  std::size_t epochs = 60, batch_size = 32;
  std::uint64_t seed = 42;
};

void print_report(std::ostream& out, const std::string& title, const EvaluationReport& r) {
  out << title << ": " << r.rows << " rows, accuracy " << std::fixed << std::setprecision(4) << r.accuracy()
      << "\n  per-class accuracy:";
  for (int c = 0; c < kClassCount; ++c) {
    const auto acc = r.class_accuracy(c);
    out << "  " << c << "=";
    if (acc) out << std::setprecision(3) << *acc;
    else out << "-";
  }
  out << "\n  confusion (rows true, columns predicted):\n";
  out << "        ";
  for (int c = 0; c < kClassCount; ++c) out << std::setw(8) << c;
  out << "\n";
  for (int t = 0; t < kClassCount; ++t) {
    out << "    " << std::setw(4) << t;
    for (int p = 0; p < kClassCount; ++p) out << std::setw(8) << r.confusion[t][p];
    out << "\n";
  }
  out << std::defaultfloat;
}

int cmd_train(const TrainArgs& a) {
  const ModelKind kind = [&] {
    try {
      return parse_model_kind(a.model_kind);
    } catch (const Error& e) {
      throw UsageError(e.what());
    }
  }();
  if (a.holdout < 0 || a.holdout >= 1) throw UsageError("--holdout must be in [0, 1)");

  const Dataset records = read_dataset(a.data);
  if (records.empty()) throw Error(ErrorCode::DatasetError, a.data + ": dataset has no records");

  std::optional<TaskType> task;
  if (!a.task.empty()) {
    task = task_arg(a.task);
  } else {
    std::set<TaskType> tasks;
    for (const auto& r : records) tasks.insert(r.task);
    if (tasks.size() > 1) throw UsageError("dataset mixes task types; choose one with --task");
    task = *tasks.begin();
  }

  const TrainingMatrix all = build_training_matrix(records, task);
  if (all.rows() == 0) throw Error(ErrorCode::DatasetError, "no records for task " + std::string(to_string(*task)));

  const auto held = validation_mask(all.groups, a.holdout);
  std::vector<bool> keep(held.size());
  for (std::size_t i = 0; i < held.size(); ++i) keep[i] = !held[i];
  const std::size_t held_rows = static_cast<std::size_t>(std::count(held.begin(), held.end(), true));

  TrainingMatrix train = all;
  std::optional<TrainingMatrix> validation;
  if (held_rows > 0 && held_rows < all.rows()) {
    train = all.subset(keep);
    validation = all.subset(held);
  } else if (a.holdout > 0) {
    std::cerr << "train: holdout split left one side empty; training on all " << all.rows() << " rows\n";
  }

  TrainParams params;
  params.dtc.max_depth = a.max_depth;
  params.dtc.min_samples_leaf = a.min_samples_leaf;
  params.svc.C = a.c;
  params.svc.gamma = a.gamma;
  params.svc.max_rows = a.svc_max_rows;
  if (a.kernel == "linear") params.svc.kernel = KernelKind::Linear;
  else if (a.kernel == "rbf") params.svc.kernel = KernelKind::Rbf;
  else throw UsageError("--kernel must be linear or rbf");
  params.nnr.hidden_layers = a.hidden;
  params.nnr.learning_rate = a.learning_rate;
  params.nnr.epochs = a.epochs;
  params.nnr.batch_size = a.batch_size;
  params.nnr.seed = a.seed;

  const TrainedModel model = train_model(kind, train, params, task);
  save_model(a.out, model);
  for (const auto& w : model.warnings) std::cerr << "train: warning: " << w << "\n";

  const EvaluationReport train_report = evaluate(model, train);
  std::optional<EvaluationReport> val_report;
  if (validation) val_report = evaluate(model, *validation);

  if (a.json) {
    ojson j;
    j["model"] = a.out;
    j["kind"] = to_string(kind);
    j["task"] = to_string(*task);
    j["training"] = to_json(train_report);
    j["validation"] = val_report ? to_json(*val_report) : ojson(nullptr);
    j["warnings"] = model.warnings;
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << "model " << to_string(kind) << " for " << to_string(*task) << " written to " << a.out << "\n";
    print_report(std::cout, "training", train_report);
    if (val_report) print_report(std::cout, "validation", *val_report);
  }
  return 0;
}

// ---- predict / run -----------------------------------------------------------

struct PredictArgs {
  std::string model, file, task, arg_map;
  bool emit_args = false, json = false;
  std::size_t jobs = 1;
};

Recommendation predict_for(const PredictArgs& a, const TrainedModel& model) {
  RecommendOptions opt;
  opt.jobs = a.jobs;
  opt.arg_map = load_arg_map(a.arg_map);
  return recommend_file(a.file, model, task_arg(a.task), opt);
}

std::string key_text(const PredictionKey& k) {
  std::string out = "(";
  for (std::size_t i = 0; i < k.parts.size(); ++i) out += (i ? ", " : "") + format_number(k.parts[i]);
  return out + ")";
}

int cmd_predict(const PredictArgs& a) {
  const TrainedModel model = load_model(a.model);
  const Recommendation rec = predict_for(a, model);
  if (a.json) {
    std::cout << to_json(rec).dump(2) << "\n";
  } else if (a.emit_args) {
    std::cout << join_args(rec.backend_args) << "\n";
  } else {
    std::cout << "recommended  " << to_canonical_text(rec.config) << "  (index " << rec.canonical_index
              << ", key " << key_text(rec.key) << ")\n"
              << "backend args " << join_args(rec.backend_args) << "\n\n"
              << "rank  index  key                           flags\n";
    for (std::size_t i = 0; i < rec.top.size(); ++i)
      std::cout << std::setw(4) << i + 1 << "  " << std::setw(5) << rec.top[i].canonical_index << "  " << std::left
                << std::setw(28) << key_text(rec.top[i].key) << std::right << "  "
                << to_canonical_text(rec.top[i].config) << "\n";
  }
  return 0;
}

struct RunArgs {
  PredictArgs predict;
  std::string backend = "mock";
  double time_limit = kDefaultTimeLimit;
  std::uint64_t seed = 0;
  bool json = false;
};

int cmd_run(const RunArgs& a) {
  if (!(a.time_limit > 0)) throw UsageError("--time-limit must be positive");
  const TrainedModel model = load_model(a.predict.model);
  const Recommendation rec = predict_for(a.predict, model);
  const auto runner = make_backend(a.backend, a.seed);

  const BenchmarkEntry bench{fs::path(a.predict.file).stem().string(), a.predict.file, task_arg(a.predict.task),
                             a.time_limit};
  RunResult result;
  try {
    result = runner->run(RunRequest{bench, rec.features, rec.config, rec.backend_args});
    result.outcome.validate();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::InvariantViolation) throw;
    result = {failed_outcome(bench.task, bench.time_limit_seconds), std::string("run failed: ") + e.what()};
  }
  const int label = classify(result.outcome);
  const RunOutcome& o = result.outcome;

  if (a.json) {
    ojson j;
    j["recommended_flags"] = to_canonical_text(rec.config);
    j["canonical_index"] = rec.canonical_index;
    j["backend_args"] = rec.backend_args;
    j["task"] = to_string(o.task);
    if (o.task == TaskType::CoverError) j["verdict"] = to_string(o.verdict);
    else j["coverage_score"] = *o.coverage_score;
    j["elapsed_seconds"] = o.elapsed_seconds;
    j["time_limit_seconds"] = o.time_limit_seconds;
    j["class"] = label;
    j["note"] = result.note;
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << "flags    " << to_canonical_text(rec.config) << "\n";
    if (o.task == TaskType::CoverError) std::cout << "verdict  " << to_string(o.verdict) << "\n";
    else std::cout << "coverage " << format_number(*o.coverage_score) << "\n";
    std::cout << "elapsed  " << format_number(o.elapsed_seconds) << " / " << format_number(o.time_limit_seconds)
              << " s\nclass    " << label << "\n";
    if (!result.note.empty()) std::cout << "note     " << result.note << "\n";
  }
  return 0;
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvariantViolation:
    case ErrorCode::DivergenceDetected:
      return kExitInternal;
    default:
      return kExitData;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Learn and recommend verifier flag configurations for C programs"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "flagsel 0.1.0");

  ExtractArgs ex;
  auto* extract = app.add_subcommand("extract", "Print the 21 structural features of a C file");
  extract->add_option("file", ex.file, "C source file")->required();
  extract->add_flag("--json", ex.json, "JSON object output");
  extract->add_option("--nondet-prefix", ex.prefixes, "Identifier prefix of nondet calls (repeatable)");

  EnumerateArgs en;
  auto* enumerate = app.add_subcommand("enumerate", "List the 384 flag configurations");
  enumerate->add_option("--index", en.index, "Only the configuration with this canonical index");
  enumerate->add_flag("--json", en.json, "JSON output including backend arguments");
  enumerate->add_option("--arg-map", en.arg_map, "Backend argument map (JSON)");

  CampaignArgs ca;
  ca.jobs = default_jobs();
  auto* campaign = app.add_subcommand("campaign", "Run every benchmark under every configuration");
  campaign->add_option("--manifest", ca.manifest, "Manifest JSON")->required();
  campaign->add_option("--backend", ca.backend, "mock or exec:<command>")->capture_default_str();
  campaign->add_option("--out", ca.out, "Dataset to write (JSONL)")->required();
  campaign->add_option("--jobs", ca.jobs, "Concurrent runs (default $FLAGSEL_JOBS or 1)")
      ->check(CLI::PositiveNumber);
  campaign->add_option("--seed", ca.seed, "Mock backend seed")->capture_default_str();
  campaign->add_option("--arg-map", ca.arg_map, "Backend argument map (JSON)");
  campaign->add_flag("--resume", ca.resume, "Keep records already in --out and run only the missing pairs");
  campaign->add_flag("--quiet", ca.quiet, "No progress output");

  TrainArgs tr;
  auto* train = app.add_subcommand("train", "Train a model on a dataset");
  train->add_option("--data", tr.data, "Dataset (JSONL)")->required();
  train->add_option("--model", tr.model_kind, "dtc, svc, nnr or cascade")->required();
  train->add_option("--out", tr.out, "Model file to write")->required();
  train->add_option("--task", tr.task, "cover-error or cover-branches (required for mixed datasets)");
  train->add_option("--holdout", tr.holdout, "Share of benchmarks held out for validation")->capture_default_str();
  train->add_flag("--json", tr.json, "JSON training report");
  train->add_option("--max-depth", tr.max_depth, "dtc: maximum depth, 0 = unlimited")->capture_default_str();
  train->add_option("--min-samples-leaf", tr.min_samples_leaf, "dtc: minimum rows per leaf")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  train->add_option("--C", tr.c, "svc: box constraint")->capture_default_str();
  train->add_option("--kernel", tr.kernel, "svc: linear or rbf")->capture_default_str();
  train->add_option("--gamma", tr.gamma, "svc: rbf width, 0 = 1/dimensions")->capture_default_str();
  train->add_option("--svc-max-rows", tr.svc_max_rows, "svc: rows kept by deterministic subsampling, 0 = all")
      ->capture_default_str();
  train->add_option("--hidden", tr.hidden, "nnr: hidden layer sizes")->delimiter(',')->capture_default_str();
  train->add_option("--learning-rate", tr.learning_rate, "nnr: step size")->capture_default_str();
  train->add_option("--epochs", tr.epochs, "nnr: passes over the data")->capture_default_str();
  train->add_option("--batch-size", tr.batch_size, "nnr: mini-batch size")->capture_default_str();
  train->add_option("--seed", tr.seed, "nnr: initialization and shuffling seed")->capture_default_str();

  PredictArgs pr;
  pr.jobs = default_jobs();
  auto* predict = app.add_subcommand("predict", "Recommend a configuration for a C file");
  predict->add_option("--model", pr.model, "Model file")->required();
  predict->add_option("--file", pr.file, "C source file")->required();
  predict->add_option("--task", pr.task, "cover-error or cover-branches")->required();
  predict->add_flag("--emit-args", pr.emit_args, "Print only the backend arguments");
  predict->add_flag("--json", pr.json, "JSON output");
  predict->add_option("--arg-map", pr.arg_map, "Backend argument map (JSON)");
  predict->add_option("--jobs", pr.jobs, "Threads scoring configurations")->check(CLI::PositiveNumber);

  RunArgs ru;
  ru.predict.jobs = default_jobs();
  auto* run = app.add_subcommand("run", "Recommend a configuration and execute the backend with it");
  run->add_option("--model", ru.predict.model, "Model file")->required();
  run->add_option("--file", ru.predict.file, "C source file")->required();
  run->add_option("--task", ru.predict.task, "cover-error or cover-branches")->required();
  run->add_option("--backend", ru.backend, "mock or exec:<command>")->capture_default_str();
  run->add_option("--time-limit", ru.time_limit, "Seconds")->capture_default_str();
  run->add_option("--seed", ru.seed, "Mock backend seed")->capture_default_str();
  run->add_option("--arg-map", ru.predict.arg_map, "Backend argument map (JSON)");
  run->add_flag("--json", ru.json, "JSON output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    if (*extract) return cmd_extract(ex);
    if (*enumerate) return cmd_enumerate(en);
    if (*campaign) return cmd_campaign(ca);
    if (*train) return cmd_train(tr);
    if (*predict) return cmd_predict(pr);
    if (*run) return cmd_run(ru);
  } catch (const UsageError& e) {
    std::cerr << "flagsel: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << "flagsel: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "flagsel: malformed JSON: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "flagsel: internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitUsage;
}
