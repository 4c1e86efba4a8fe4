#include "morphbench/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "morphbench/augment.hpp"
#include "morphbench/dirichlet.hpp"
#include "morphbench/image.hpp"
#include "morphbench/rng.hpp"

namespace morphbench {

void adam_step(ParameterSet& params, const ParameterSet& grads, AdamState& state,
               const TrainOptions& opts) {
  if (params.count() != grads.count() || params.count() != state.m.count())
    throw std::invalid_argument("adam_step: parameter/gradient shape mismatch");
  state.t += 1;
  const double c1 = 1.0 - std::pow(opts.adam_beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(opts.adam_beta2, static_cast<double>(state.t));
  for (size_t i = 0; i < params.count(); ++i) {
    if (!params.trainable[i]) continue;
    Tensor& theta = params.tensors[i];
    const Tensor& g = grads.tensors[i];
    Tensor& m = state.m.tensors[i];
    Tensor& v = state.v.tensors[i];
    if (g.size() != theta.size())
      throw std::invalid_argument("adam_step: shape mismatch at " + params.names[i]);
    for (int64_t j = 0; j < theta.size(); ++j) {
      m[j] = opts.adam_beta1 * m[j] + (1.0 - opts.adam_beta1) * g[j];
      v[j] = opts.adam_beta2 * v[j] + (1.0 - opts.adam_beta2) * g[j] * g[j];
      theta[j] -= opts.learning_rate * (m[j] / c1) / (std::sqrt(v[j] / c2) + opts.adam_epsilon);
    }
  }
}

bool early_stop_check(const std::vector<double>& validation_losses, int patience) {
  const int n = static_cast<int>(validation_losses.size());
  if (n <= patience) return false;
  double best_before = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n - patience; ++i) best_before = std::min(best_before, validation_losses[i]);
  for (int i = n - patience; i < n; ++i)
    if (validation_losses[i] < best_before) return false;
  return true;
}

namespace {

// Assembles [n, 1, 224, 224] input rows from stored images with one fresh
// augmentation draw per record.
void fill_batch(Tensor& batch, const std::vector<const GalaxyRecord*>& recs, ImageStore& store,
                AugmentationSeedState& aug) {
  const int64_t row = static_cast<int64_t>(kInputSide) * kInputSide;
  for (size_t j = 0; j < recs.size(); ++j) {
    const Image stored = store.get(recs[j]->image_ref, kStoredSide);
    const Image view = augment(stored, aug);
    std::copy(view.pixels.begin(), view.pixels.end(), batch.ptr() + static_cast<int64_t>(j) * row);
  }
}

std::vector<ConcentrationVector> rows_to_concentrations(const Tensor& conc) {
  std::vector<ConcentrationVector> out(static_cast<size_t>(conc.dim(0)));
  const int width = conc.dim(1);
  for (int j = 0; j < conc.dim(0); ++j)
    out[static_cast<size_t>(j)].alpha.assign(conc.ptr() + static_cast<int64_t>(j) * width,
                                             conc.ptr() + static_cast<int64_t>(j + 1) * width);
  return out;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

TrainResult train(std::string_view family, std::string_view config, const Catalog& train_catalog,
                  const Catalog& val_catalog, const TrainOptions& opts) {
  if (opts.batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (opts.patience < 1) throw std::invalid_argument("patience must be >= 1");
  if (opts.validation_repeats < 1) throw std::invalid_argument("validation_repeats must be >= 1");
  if (train_catalog.records.empty() || val_catalog.records.empty())
    throw std::invalid_argument("train() requires non-empty train and validation catalogs");
  const DecisionTreeSchema& schema = *train_catalog.schema;

  auto [net, params] = build_model(family, config, schema, opts.dropout_rate, opts.seed);
  ModelRuntime runtime(net);
  AdamState adam = AdamState::make(params);
  ParameterSet grads = zeros_like(params);
  ImageStore store;

  Rng order_rng(hash_u64(opts.seed, hash_str(0, "train-order")));
  Rng train_dropout(hash_u64(opts.seed, hash_str(0, "train-dropout")));
  Rng val_dropout(hash_u64(opts.seed, hash_str(0, "val-dropout")));
  AugmentationSeedState train_aug(hash_u64(opts.seed, hash_str(0, "train-augment")));
  AugmentationSeedState val_aug(hash_u64(opts.seed, hash_str(0, "val-augment")));

  std::vector<VoteVector> train_votes;
  train_votes.reserve(train_catalog.records.size());
  for (const GalaxyRecord& r : train_catalog.records)
    train_votes.push_back(VoteVector::from_votes(r.votes, schema));
  std::vector<VoteVector> val_votes;
  val_votes.reserve(val_catalog.records.size());
  for (const GalaxyRecord& r : val_catalog.records)
    val_votes.push_back(VoteVector::from_votes(r.votes, schema));

  std::vector<size_t> order(train_catalog.records.size());
  std::iota(order.begin(), order.end(), size_t{0});

  TrainLog log;
  std::vector<double> val_losses;
  ParameterSet best_params = params;
  double best_val = std::numeric_limits<double>::infinity();
  int best_epoch = 0;
  const auto run_start = std::chrono::steady_clock::now();

  const int width = net.output_width;
  for (int epoch = 1; epoch <= opts.max_epochs; ++epoch) {
    const auto epoch_start = std::chrono::steady_clock::now();
    shuffle(order, order_rng);

    double train_loss_sum = 0.0;  // per-record loss, summed
    for (size_t b0 = 0; b0 < order.size(); b0 += static_cast<size_t>(opts.batch_size)) {
      const size_t bn = std::min(static_cast<size_t>(opts.batch_size), order.size() - b0);
      std::vector<const GalaxyRecord*> recs(bn);
      std::vector<VoteVector> votes(bn);
      for (size_t j = 0; j < bn; ++j) {
        recs[j] = &train_catalog.records[order[b0 + j]];
        votes[j] = train_votes[order[b0 + j]];
      }
      Tensor batch({static_cast<int>(bn), 1, kInputSide, kInputSide});
      fill_batch(batch, recs, store, train_aug);

      const Tensor conc = runtime.forward(batch, params, RunMode::training, &train_dropout);
      const std::vector<ConcentrationVector> alphas = rows_to_concentrations(conc);
      const LossValue loss = dm_nll_loss(votes, alphas, schema);
      if (!std::isfinite(loss.value)) {
        char msg[160];
        std::snprintf(msg, sizeof(msg),
                      "training aborted: non-finite loss %g at epoch %d, batch %zu", loss.value,
                      epoch, b0 / static_cast<size_t>(opts.batch_size) + 1);
        throw std::runtime_error(msg);
      }
      train_loss_sum += loss.value * static_cast<double>(bn);

      // Batch-mean loss: each record's gradient is scaled by 1/bn.
      Tensor dconc({static_cast<int>(bn), width});
      for (size_t j = 0; j < bn; ++j) {
        const std::vector<double> g = dm_nll_gradient(votes[j], alphas[j], schema);
        for (int a = 0; a < width; ++a)
          dconc[static_cast<int64_t>(j) * width + a] = g[static_cast<size_t>(a)] /
                                                       static_cast<double>(bn);
      }
      runtime.backward(dconc, params, grads);
      adam_step(params, grads, adam, opts);
    }
    const double train_loss = train_loss_sum / static_cast<double>(order.size());

    double val_loss_sum = 0.0;
    for (int rep = 0; rep < opts.validation_repeats; ++rep) {
      for (size_t b0 = 0; b0 < val_catalog.records.size();
           b0 += static_cast<size_t>(opts.batch_size)) {
        const size_t bn =
            std::min(static_cast<size_t>(opts.batch_size), val_catalog.records.size() - b0);
        std::vector<const GalaxyRecord*> recs(bn);
        std::vector<VoteVector> votes(bn);
        for (size_t j = 0; j < bn; ++j) {
          recs[j] = &val_catalog.records[b0 + j];
          votes[j] = val_votes[b0 + j];
        }
        Tensor batch({static_cast<int>(bn), 1, kInputSide, kInputSide});
        fill_batch(batch, recs, store, val_aug);
        const Tensor conc = runtime.forward(batch, params, RunMode::mc_dropout, &val_dropout);
        const LossValue loss = dm_nll_loss(votes, rows_to_concentrations(conc), schema);
        val_loss_sum += loss.value * static_cast<double>(bn);
      }
    }
    const double val_loss =
        val_loss_sum /
        (static_cast<double>(opts.validation_repeats) * val_catalog.records.size());
    if (!std::isfinite(val_loss)) {
      char msg[160];
      std::snprintf(msg, sizeof(msg), "training aborted: non-finite validation loss %g at epoch %d",
                    val_loss, epoch);
      throw std::runtime_error(msg);
    }

    val_losses.push_back(val_loss);
    log.epochs.push_back({epoch, train_loss, val_loss, seconds_since(epoch_start)});
    if (val_loss < best_val) {
      best_val = val_loss;
      best_epoch = epoch;
      best_params = params;
    }
    if (early_stop_check(val_losses, opts.patience)) {
      log.stop_reason = "early-stop";
      break;
    }
    if (epoch == opts.max_epochs) log.stop_reason = "max-epochs";
  }

  log.epochs_run = static_cast<int>(log.epochs.size());
  log.total_hours = seconds_since(run_start) / 3600.0;
  log.best_epoch = best_epoch;
  log.best_val_loss = best_val;
  return {std::move(net), std::move(best_params), std::move(log)};
}

void save_train_log(const TrainLog& log, const std::filesystem::path& csv_path,
                    const std::filesystem::path& json_path) {
  std::ofstream csv(csv_path, std::ios::trunc);
  if (!csv) throw std::runtime_error("cannot write " + csv_path.string());
  csv << "epoch,train_loss,val_loss,seconds\n";
  char line[160];
  for (const EpochStats& e : log.epochs) {
    std::snprintf(line, sizeof(line), "%d,%.12g,%.12g,%.3f\n", e.epoch, e.train_loss, e.val_loss,
                  e.seconds);
    csv << line;
  }
  if (!csv) throw std::runtime_error("write failed: " + csv_path.string());

  nlohmann::json j;
  j["epochs"] = log.epochs_run;
  j["hours"] = log.total_hours;
  j["stop_reason"] = log.stop_reason;
  j["best_epoch"] = log.best_epoch;
  j["best_val_loss"] = log.best_val_loss;
  std::ofstream js(json_path, std::ios::trunc);
  if (!js) throw std::runtime_error("cannot write " + json_path.string());
  js << j.dump(2) << "\n";
  if (!js) throw std::runtime_error("write failed: " + json_path.string());
}

TrainLog load_train_log_json(const std::filesystem::path& json_path) {
  std::ifstream in(json_path);
  if (!in) throw std::runtime_error("cannot read " + json_path.string());
  TrainLog log;
  try {
    const nlohmann::json j = nlohmann::json::parse(in);
    log.epochs_run = j.at("epochs").get<int>();
    log.total_hours = j.at("hours").get<double>();
    log.stop_reason = j.at("stop_reason").get<std::string>();
    log.best_epoch = j.at("best_epoch").get<int>();
    log.best_val_loss = j.at("best_val_loss").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("train log " + json_path.string() + ": " + e.what());
  }
  return log;
}

}  // namespace morphbench
