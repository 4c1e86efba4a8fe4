#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "morphbench/catalog.hpp"
#include "morphbench/model.hpp"
#include "morphbench/tensor.hpp"

namespace morphbench {

struct TrainOptions {
  int batch_size = 64;
  int patience = 10;  // epochs without validation improvement before stopping
  double learning_rate = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-7;
  int max_epochs = 1000;  // safety cap
  uint64_t seed = 0;
  int validation_repeats = 2;  // validation passes averaged per epoch
  double dropout_rate = 0.2;
};

struct EpochStats {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;
  double seconds = 0.0;  // wall time of this epoch
};

struct TrainLog {
  std::vector<EpochStats> epochs;
  int epochs_run = 0;
  double total_hours = 0.0;
  std::string stop_reason;  // "early-stop" or "max-epochs"
  int best_epoch = 0;       // epoch whose parameters are returned
  double best_val_loss = 0.0;
};

// Adam accumulators, shaped like the parameter set.
struct AdamState {
  ParameterSet m;
  ParameterSet v;
  int64_t t = 0;

  static AdamState make(const ParameterSet& params) {
    return {zeros_like(params), zeros_like(params), 0};
  }
};

// One Adam update over the trainable tensors:
//   m <- b1 m + (1-b1) g;  v <- b2 v + (1-b2) g^2
//   theta <- theta - lr * (m / (1-b1^t)) / (sqrt(v / (1-b2^t)) + eps)
void adam_step(ParameterSet& params, const ParameterSet& grads, AdamState& state,
               const TrainOptions& opts);

// True when the most recent `patience` losses all fail to improve (strictly)
// on the best loss recorded before that window.
bool early_stop_check(const std::vector<double>& validation_losses, int patience);

struct TrainResult {
  NetworkDescription net;
  ParameterSet params;  // weights of the best-validation epoch
  TrainLog log;
};

// Full optimization run: per epoch, seeded shuffle, batches of
// opts.batch_size with fresh augmentation, Dirichlet-Multinomial loss,
// backward, Adam; then the validation loss (validation_repeats stochastic
// passes, averaged). Stops on early_stop_check or max_epochs and returns the
// best-epoch parameters. Throws on empty catalogs and aborts with a
// diagnostic on a non-finite loss.
TrainResult train(std::string_view family, std::string_view config, const Catalog& train_catalog,
                  const Catalog& val_catalog, const TrainOptions& opts);

// CSV: "epoch,train_loss,val_loss,seconds"; JSON summary: epochs, hours,
// stop reason, best epoch/loss.
void save_train_log(const TrainLog& log, const std::filesystem::path& csv_path,
                    const std::filesystem::path& json_path);

// Reads back the JSON summary (per-epoch rows are not restored).
TrainLog load_train_log_json(const std::filesystem::path& json_path);

}  // namespace morphbench
