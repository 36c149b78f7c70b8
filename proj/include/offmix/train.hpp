#pragma once

#include <string>
#include <vector>

#include "offmix/model.hpp"

namespace offmix {

/// Training hyperparameters. The defaults are the published settings:
/// batch 32, window 128, Adam at 1e-3, cross-entropy on the sigmoid
/// output; the epoch budget and patience are ours.
struct TrainConfig {
  int batch_size = 32;
  int max_len = 128;
  std::string optimizer = "adam";
  double learning_rate = 1e-3;
  std::string loss = "binary-cross-entropy";
  int max_epochs = 20;
  int early_stop_patience = 3;
  uint64_t seed = 0;

  enum class ClassWeighting { none, inverse_frequency };
  ClassWeighting class_weighting = ClassWeighting::none;

  double prob_clamp = 1e-7;  // distance from 0/1 before the log
  double threshold = 0.5;    // validation decision threshold
};

struct TrainHistory {
  struct Epoch {
    int epoch = 0;  // 1-based
    double train_loss = 0.0;
    double val_weighted_f1 = 0.0;
  };
  std::vector<Epoch> epochs;
  int best_epoch = -1;  // -1 when no epoch ran
};

std::string history_to_json(const TrainHistory& history);

/// Mean of -[y ln p + (1-y) ln(1-p)] with p clamped `clamp` away from the
/// boundaries. Throws Error(LengthMismatch) on size disagreement.
double bce_loss(const std::vector<double>& probs, const std::vector<double>& targets,
                double clamp = 1e-7);

/// Minibatch Adam over the model core with embeddings precomputed through
/// the frozen encoders. Early stopping tracks validation weighted F1 and
/// restores the best epoch's parameters. Fixed seed, fixed history.
TrainHistory train_task1(DualConcatModel& model, const Dataset& train_ds,
                         const Dataset& val_ds, const TrainConfig& config);

TrainHistory train_task2(DualViewModel& model,
                         const std::vector<ParallelSample>& train_rows,
                         const std::vector<ParallelSample>& val_rows,
                         const TrainConfig& config);

}  // namespace offmix
