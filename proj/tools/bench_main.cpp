#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <string>

#include <CLI11.hpp>

#include "morphbench/bench.hpp"
#include "morphbench/checkpoint.hpp"
#include "morphbench/evaluator.hpp"
#include "morphbench/kernels.hpp"
#include "morphbench/rng.hpp"
#include "morphbench/synthetic.hpp"

namespace {

namespace fs = std::filesystem;
using namespace morphbench;

void apply_thread_env() {
  if (const char* env = std::getenv("MORPHBENCH_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) kernels::set_threads(n);
  }
}

struct SynthArgs {
  std::string spec_path;
  std::string out_dir;
  int count = 0;      // 0 keeps the spec's value
  int64_t seed = -1;  // <0 keeps the spec's value
};

int run_synth(const SynthArgs& a) {
  SyntheticSpec spec =
      a.spec_path.empty() ? default_synthetic_spec() : load_synthetic_spec(a.spec_path);
  if (a.count > 0) spec.count = a.count;
  if (a.seed >= 0) spec.seed = static_cast<uint64_t>(a.seed);
  const DecisionTreeSchema schema = build_gzd5_schema();
  const SynthResult result = generate_synthetic(spec, schema, a.out_dir);
  std::printf("wrote %zu galaxies to %s\n", result.catalog.records.size(), a.out_dir.c_str());
  return 0;
}

struct TrainArgs {
  std::string family;
  std::string config = "tiny";
  std::string data_dir;
  std::string out_dir;
  TrainOptions opts;
  uint64_t seed = 0;
  double test_fraction = 0.2;
  double val_fraction = 0.2;
};

int run_train(const TrainArgs& a) {
  const DecisionTreeSchema schema = build_gzd5_schema();
  const Catalog catalog = load_catalog(fs::path(a.data_dir) / "catalog.csv", schema);
  const DataSplits splits = make_splits(catalog, a.test_fraction, a.val_fraction, a.seed);
  std::printf("catalog: %zu train / %zu val / %zu held out\n", splits.train.records.size(),
              splits.val.records.size(), splits.test.records.size());

  TrainOptions opts = a.opts;
  opts.seed = family_train_seed(a.seed, a.family);
  const TrainResult result = train(a.family, a.config, splits.train, splits.val, opts);

  fs::create_directories(a.out_dir);
  CheckpointMeta meta{a.family, a.config, opts.dropout_rate, a.seed};
  save_checkpoint((fs::path(a.out_dir) / "checkpoint.mbck").string(), meta, result.params);
  save_train_log(result.log, fs::path(a.out_dir) / "trainlog.csv",
                 fs::path(a.out_dir) / "trainlog.json");
  std::printf("trained %s/%s: %d epochs (%s), best val loss %.6g at epoch %d\n",
              a.family.c_str(), a.config.c_str(), result.log.epochs_run,
              result.log.stop_reason.c_str(), result.log.best_val_loss, result.log.best_epoch);
  return 0;
}

struct EvalArgs {
  std::string checkpoint;
  std::string data_dir;
  std::string out_dir;
  int passes = 5;
  double threshold = 0.5;
  int64_t resplit = -1;  // <0 reuses the checkpoint's split seed
  double test_fraction = 0.2;
};

int run_eval(const EvalArgs& a) {
  auto [meta, params] = load_checkpoint(a.checkpoint);
  const DecisionTreeSchema schema = build_gzd5_schema();
  const NetworkDescription net =
      build_network(meta.family, meta.config, schema.total_answers(), meta.dropout_rate);

  const Catalog catalog = load_catalog(fs::path(a.data_dir) / "catalog.csv", schema);
  const uint64_t split_seed = a.resplit >= 0 ? static_cast<uint64_t>(a.resplit) : meta.seed;
  const Catalog test =
      split_catalog(catalog, a.test_fraction, hash_u64(split_seed, hash_str(0, "test-split")))
          .second;
  std::printf("evaluating %s/%s on %zu held-out galaxies (split seed %llu)\n",
              meta.family.c_str(), meta.config.c_str(), test.records.size(),
              static_cast<unsigned long long>(split_seed));

  EvalOptions eopts;
  eopts.passes = a.passes;
  eopts.threshold = a.threshold;
  eopts.seed = hash_u64(split_seed, hash_str(0, meta.family + "/eval"));
  eopts.model_label = meta.family;
  const EvalResult result = evaluate_catalog(net, params, test, eopts);

  fs::create_directories(a.out_dir);
  save_predictions_csv(fs::path(a.out_dir) / "predictions.csv", result.predictions, schema);
  save_metrics_csv(fs::path(a.out_dir) / "metrics.csv", result.metrics);
  save_metrics_table(fs::path(a.out_dir) / "metrics.txt", result.metrics);
  std::printf("overall weighted precision/recall/F1: %.3f/%.3f/%.3f\n",
              result.metrics.overall_precision, result.metrics.overall_recall,
              result.metrics.overall_f1);
  return 0;
}

struct ReportArgs {
  std::string in_dir;
  std::string out_dir;
};

int run_report(const ReportArgs& a) {
  const fs::path in_dir(a.in_dir);
  const fs::path out_dir(a.out_dir.empty() ? a.in_dir : a.out_dir);
  const DecisionTreeSchema schema = build_gzd5_schema();

  std::vector<std::string> families;
  std::string config_echo = "(configuration file not found)";
  if (fs::exists(in_dir / "config.json")) {
    const BenchConfig config = load_bench_config(in_dir / "config.json");
    families = config.families;
    config_echo = bench_config_to_json(config);
  } else {
    for (const char* f : {"residual", "dense-connect", "compound-scaled"})
      if (fs::exists(in_dir / f / "metrics.csv")) families.emplace_back(f);
    if (families.empty())
      throw std::runtime_error("no config.json or family results under " + in_dir.string());
  }

  std::vector<FamilyResult> results;
  for (const std::string& family : families)
    results.push_back(load_family_result(in_dir, family, schema));
  save_report_files(results, config_echo, out_dir);
  std::printf("report written to %s\n", (out_dir / "report.txt").c_str());
  return 0;
}

struct AllArgs {
  std::string config_path;
  std::string out_dir;  // overrides the config's out_dir when set
  int64_t seed = -1;    // overrides the config's seed when >= 0
};

int run_all(const AllArgs& a) {
  BenchConfig config = a.config_path.empty() ? BenchConfig{} : load_bench_config(a.config_path);
  if (!a.out_dir.empty()) config.out_dir = a.out_dir;
  if (a.seed >= 0) config.seed = static_cast<uint64_t>(a.seed);

  const std::vector<FamilyResult> results = run_benchmark(config);
  bool all_ok = true;
  for (const FamilyResult& fr : results) {
    if (fr.ok) {
      std::printf("%s: %d epochs (%s), overall weighted F1 %.3f\n", fr.family.c_str(),
                  fr.log.epochs_run, fr.log.stop_reason.c_str(), fr.metrics.overall_f1);
    } else {
      std::printf("%s: FAILED (%s)\n", fr.family.c_str(), fr.error.c_str());
      all_ok = false;
    }
  }
  std::printf("report written to %s\n",
              (fs::path(config.out_dir) / "report.txt").string().c_str());
  return all_ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  apply_thread_env();

  CLI::App app{"Train and compare convolutional families on galaxy morphology vote fractions"};
  app.require_subcommand(1);

  SynthArgs synth_args;
  CLI::App* synth = app.add_subcommand("synth", "Generate a synthetic galaxy catalog");
  synth->add_option("--spec", synth_args.spec_path, "Generator spec JSON (default: four-class)")
      ->check(CLI::ExistingFile);
  synth->add_option("--out", synth_args.out_dir, "Output directory")->required();
  synth->add_option("--count", synth_args.count, "Override the spec's galaxy count");
  synth->add_option("--seed", synth_args.seed, "Override the spec's seed");

  TrainArgs train_args;
  CLI::App* train_cmd = app.add_subcommand("train", "Train one architecture family");
  train_cmd->add_option("--family", train_args.family, "residual | dense-connect | compound-scaled")
      ->required()
      ->check(CLI::IsMember({"residual", "dense-connect", "compound-scaled"}));
  train_cmd->add_option("--config", train_args.config, "full | tiny")
      ->check(CLI::IsMember({"full", "tiny"}));
  train_cmd->add_option("--data", train_args.data_dir, "Directory holding catalog.csv")
      ->required()
      ->check(CLI::ExistingDirectory);
  train_cmd->add_option("--out", train_args.out_dir, "Output directory")->required();
  train_cmd->add_option("--batch-size", train_args.opts.batch_size, "Minibatch size");
  train_cmd->add_option("--patience", train_args.opts.patience, "Early-stopping patience");
  train_cmd->add_option("--lr", train_args.opts.learning_rate, "Adam learning rate");
  train_cmd->add_option("--max-epochs", train_args.opts.max_epochs, "Epoch cap");
  train_cmd->add_option("--dropout-rate", train_args.opts.dropout_rate, "Dropout rate");
  train_cmd->add_option("--validation-repeats", train_args.opts.validation_repeats,
                        "Stochastic validation passes averaged per epoch");
  train_cmd->add_option("--seed", train_args.seed, "Run seed (drives splits and training)");
  train_cmd->add_option("--test-fraction", train_args.test_fraction, "Held-out fraction");
  train_cmd->add_option("--val-fraction", train_args.val_fraction,
                        "Validation fraction of the remainder");

  EvalArgs eval_args;
  CLI::App* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on held-out data");
  eval_cmd->add_option("--checkpoint", eval_args.checkpoint, "Checkpoint file")
      ->required()
      ->check(CLI::ExistingFile);
  eval_cmd->add_option("--data", eval_args.data_dir, "Directory holding catalog.csv")
      ->required()
      ->check(CLI::ExistingDirectory);
  eval_cmd->add_option("--out", eval_args.out_dir, "Output directory")->required();
  eval_cmd->add_option("--passes", eval_args.passes, "Monte-Carlo dropout passes");
  eval_cmd->add_option("--threshold", eval_args.threshold, "Question applicability cut");
  eval_cmd->add_option("--resplit", eval_args.resplit,
                       "Re-derive the held-out split from this seed instead of the checkpoint's");
  eval_cmd->add_option("--test-fraction", eval_args.test_fraction, "Held-out fraction");

  ReportArgs report_args;
  CLI::App* report_cmd =
      app.add_subcommand("report", "Assemble the comparison report from saved runs");
  report_cmd->add_option("--in", report_args.in_dir, "Benchmark output directory")
      ->required()
      ->check(CLI::ExistingDirectory);
  report_cmd->add_option("--out", report_args.out_dir, "Report directory (default: --in)");

  AllArgs all_args;
  CLI::App* all_cmd =
      app.add_subcommand("all", "Run the whole benchmark: data, training, evaluation, report");
  all_cmd->add_option("--config", all_args.config_path, "Benchmark config JSON")
      ->check(CLI::ExistingFile);
  all_cmd->add_option("--out", all_args.out_dir, "Override the config's output directory");
  all_cmd->add_option("--seed", all_args.seed, "Override the config's seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) return run_synth(synth_args);
    if (train_cmd->parsed()) return run_train(train_args);
    if (eval_cmd->parsed()) return run_eval(eval_args);
    if (report_cmd->parsed()) return run_report(report_args);
    if (all_cmd->parsed()) return run_all(all_args);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
