#include "morphbench/bench.hpp"

#include <fstream>
#include <set>
#include <stdexcept>

#include <json.hpp>

#include "morphbench/checkpoint.hpp"
#include "morphbench/evaluator.hpp"
#include "morphbench/rng.hpp"

namespace morphbench {

namespace {

const std::set<std::string> kFamilies{"residual", "dense-connect", "compound-scaled"};
const std::set<std::string> kPresets{"tiny", "full"};

void validate(const BenchConfig& config) {
  if (config.families.empty()) throw std::runtime_error("bench config: no families listed");
  for (const std::string& f : config.families)
    if (!kFamilies.count(f)) throw std::runtime_error("bench config: unknown family " + f);
  if (!kPresets.count(config.config_preset))
    throw std::runtime_error("bench config: unknown config preset " + config.config_preset);
  if (config.eval_passes < 1) throw std::runtime_error("bench config: eval passes must be >= 1");
  if (!(config.eval_threshold >= 0.0 && config.eval_threshold <= 1.0))
    throw std::runtime_error("bench config: eval threshold must lie in [0, 1]");
  if (!(config.test_fraction > 0.0 && config.test_fraction < 1.0))
    throw std::runtime_error("bench config: test fraction must lie in (0, 1)");
  if (!(config.val_fraction > 0.0 && config.val_fraction < 1.0))
    throw std::runtime_error("bench config: val fraction must lie in (0, 1)");
  if (config.out_dir.empty()) throw std::runtime_error("bench config: out_dir is empty");
  if (!config.use_synthetic && config.data_dir.empty())
    throw std::runtime_error("bench config: catalog data source needs a directory");
}

void require_keys(const nlohmann::json& j, const std::set<std::string>& allowed,
                  const std::string& where) {
  for (const auto& [key, value] : j.items())
    if (!allowed.count(key))
      throw std::runtime_error("bench config: unknown key '" + key + "' in " + where);
}

}  // namespace

std::string bench_config_to_json(const BenchConfig& config) {
  nlohmann::json j;
  j["seed"] = config.seed;
  j["out_dir"] = config.out_dir;
  j["families"] = config.families;
  j["config"] = config.config_preset;
  if (config.use_synthetic) {
    nlohmann::json synth = spec_to_json(config.synth);
    synth.erase("seed");  // derived from the global seed
    j["data"]["synthetic"] = std::move(synth);
  } else {
    j["data"]["catalog_dir"] = config.data_dir;
  }
  j["train"] = {{"batch_size", config.train.batch_size},
                {"patience", config.train.patience},
                {"learning_rate", config.train.learning_rate},
                {"adam_beta1", config.train.adam_beta1},
                {"adam_beta2", config.train.adam_beta2},
                {"adam_epsilon", config.train.adam_epsilon},
                {"max_epochs", config.train.max_epochs},
                {"validation_repeats", config.train.validation_repeats},
                {"dropout_rate", config.train.dropout_rate}};
  j["eval"] = {{"passes", config.eval_passes}, {"threshold", config.eval_threshold}};
  j["split"] = {{"test_fraction", config.test_fraction}, {"val_fraction", config.val_fraction}};
  return j.dump(2) + "\n";
}

BenchConfig bench_config_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("bench config: ") + e.what());
  }
  BenchConfig config;
  try {
    require_keys(j, {"seed", "out_dir", "families", "config", "data", "train", "eval", "split"},
                 "the top level");
    if (j.contains("seed")) config.seed = j.at("seed").get<uint64_t>();
    if (j.contains("out_dir")) config.out_dir = j.at("out_dir").get<std::string>();
    if (j.contains("families"))
      config.families = j.at("families").get<std::vector<std::string>>();
    if (j.contains("config")) config.config_preset = j.at("config").get<std::string>();
    if (j.contains("data")) {
      const nlohmann::json& data = j.at("data");
      require_keys(data, {"synthetic", "catalog_dir"}, "data");
      if (data.contains("synthetic") && data.contains("catalog_dir"))
        throw std::runtime_error("bench config: pick one of data.synthetic, data.catalog_dir");
      if (data.contains("catalog_dir")) {
        config.use_synthetic = false;
        config.data_dir = data.at("catalog_dir").get<std::string>();
      } else if (data.contains("synthetic")) {
        config.use_synthetic = true;
        config.synth = spec_from_json(data.at("synthetic"));
      }
    }
    if (j.contains("train")) {
      const nlohmann::json& t = j.at("train");
      require_keys(t,
                   {"batch_size", "patience", "learning_rate", "adam_beta1", "adam_beta2",
                    "adam_epsilon", "max_epochs", "validation_repeats", "dropout_rate"},
                   "train");
      if (t.contains("batch_size")) config.train.batch_size = t.at("batch_size").get<int>();
      if (t.contains("patience")) config.train.patience = t.at("patience").get<int>();
      if (t.contains("learning_rate"))
        config.train.learning_rate = t.at("learning_rate").get<double>();
      if (t.contains("adam_beta1")) config.train.adam_beta1 = t.at("adam_beta1").get<double>();
      if (t.contains("adam_beta2")) config.train.adam_beta2 = t.at("adam_beta2").get<double>();
      if (t.contains("adam_epsilon"))
        config.train.adam_epsilon = t.at("adam_epsilon").get<double>();
      if (t.contains("max_epochs")) config.train.max_epochs = t.at("max_epochs").get<int>();
      if (t.contains("validation_repeats"))
        config.train.validation_repeats = t.at("validation_repeats").get<int>();
      if (t.contains("dropout_rate"))
        config.train.dropout_rate = t.at("dropout_rate").get<double>();
    }
    if (j.contains("eval")) {
      const nlohmann::json& e = j.at("eval");
      require_keys(e, {"passes", "threshold"}, "eval");
      if (e.contains("passes")) config.eval_passes = e.at("passes").get<int>();
      if (e.contains("threshold")) config.eval_threshold = e.at("threshold").get<double>();
    }
    if (j.contains("split")) {
      const nlohmann::json& s = j.at("split");
      require_keys(s, {"test_fraction", "val_fraction"}, "split");
      if (s.contains("test_fraction"))
        config.test_fraction = s.at("test_fraction").get<double>();
      if (s.contains("val_fraction")) config.val_fraction = s.at("val_fraction").get<double>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("bench config: ") + e.what());
  }
  validate(config);
  return config;
}

BenchConfig load_bench_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return bench_config_from_json(text);
}

DataSplits make_splits(const Catalog& catalog, double test_fraction, double val_fraction,
                       uint64_t seed) {
  auto [rest, test] = split_catalog(catalog, test_fraction,
                                    hash_u64(seed, hash_str(0, "test-split")));
  auto [train, val] =
      split_catalog(rest, val_fraction, hash_u64(seed, hash_str(0, "val-split")));
  return {std::move(train), std::move(val), std::move(test)};
}

uint64_t family_train_seed(uint64_t bench_seed, const std::string& family) {
  return hash_u64(bench_seed, hash_str(0, family));
}

FamilyResult run_family(const std::string& family, const BenchConfig& config,
                        const DataSplits& splits) {
  FamilyResult fr;
  fr.family = family;
  try {
    const std::filesystem::path dir = std::filesystem::path(config.out_dir) / family;
    std::filesystem::create_directories(dir);

    TrainOptions opts = config.train;
    opts.seed = family_train_seed(config.seed, family);
    TrainResult trained = train(family, config.config_preset, splits.train, splits.val, opts);
    fr.log = trained.log;

    CheckpointMeta meta;
    meta.family = family;
    meta.config = config.config_preset;
    meta.dropout_rate = opts.dropout_rate;
    meta.seed = config.seed;  // the benchmark seed; split streams derive from it
    save_checkpoint((dir / "checkpoint.mbck").string(), meta, trained.params);
    save_train_log(trained.log, dir / "trainlog.csv", dir / "trainlog.json");

    EvalOptions eopts;
    eopts.passes = config.eval_passes;
    eopts.threshold = config.eval_threshold;
    eopts.seed = hash_u64(config.seed, hash_str(0, family + "/eval"));
    eopts.model_label = family;
    EvalResult eval = evaluate_catalog(trained.net, trained.params, splits.test, eopts);
    fr.metrics = eval.metrics;

    save_predictions_csv(dir / "predictions.csv", eval.predictions, *splits.test.schema);
    save_metrics_csv(dir / "metrics.csv", eval.metrics);
    save_metrics_table(dir / "metrics.txt", eval.metrics);
    fr.ok = true;
  } catch (const std::exception& e) {
    fr.ok = false;
    fr.error = e.what();
  }
  return fr;
}

std::vector<FamilyResult> run_benchmark(const BenchConfig& config) {
  validate(config);
  const std::filesystem::path out_dir(config.out_dir);
  std::filesystem::create_directories(out_dir);
  const std::string config_json = bench_config_to_json(config);
  {
    std::ofstream out(out_dir / "config.json", std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + (out_dir / "config.json").string());
    out << config_json;
  }
  static const DecisionTreeSchema schema = build_gzd5_schema();

  Catalog catalog;
  if (config.use_synthetic) {
    SyntheticSpec spec = config.synth;
    spec.seed = hash_u64(config.seed, hash_str(0, "synthetic"));
    catalog = generate_synthetic(spec, schema, out_dir / "data").catalog;
  } else {
    catalog = load_catalog(std::filesystem::path(config.data_dir) / "catalog.csv", schema);
  }

  const DataSplits splits =
      make_splits(catalog, config.test_fraction, config.val_fraction, config.seed);

  std::vector<FamilyResult> results;
  for (const std::string& family : config.families)
    results.push_back(run_family(family, config, splits));

  save_report_files(results, config_json, out_dir);
  return results;
}

}  // namespace morphbench
