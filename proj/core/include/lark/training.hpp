#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "lark/adam.hpp"
#include "lark/checkpoint.hpp"
#include "lark/dataset.hpp"
#include "lark/lstm.hpp"

namespace lark {

struct GridPoint {
  int delay_ms = 40;
  int context = 5;

  int delay_frames() const { return delay_ms / 40; }
  std::string id() const;
  static GridPoint parse(const std::string& id);  // "D40-C5"
};

// The six-model grid {0, 40, 80} ms x {3, 5} frames.
std::vector<GridPoint> full_grid();

struct TrainConfig {
  std::vector<GridPoint> grid = full_grid();
  int batch_size = 128;
  double learning_rate = 1e-3;
  int epochs = 20;
  std::uint64_t seed = 0;
  int sequence_frames = kSequenceFrames;
  int num_layers = 4;
  int hidden_size = 256;
  double dropout_rate = 0.2;
  double clip_norm = 5.0;
  // Columns per forward/backward pass; bounds activation memory only.
  int micro_batch = 32;
  // Grid points trained concurrently; 1 keeps logs in grid order.
  int grid_threads = 1;
  // Stop a grid point early once a full-batch epoch loss falls below this.
  std::optional<double> stop_below_loss;

  void validate() const;
  ModelConfig model_config(const GridPoint& point, int feature_dim = kFeatureDim) const;
};

// Padded, time-major training batch built from chunks.
struct TrainingBatch {
  SequenceBatch inputs;     // [t] in x B
  SequenceBatch targets;    // [t] 136 x B, target frame t - delay
  Eigen::MatrixXd mask;     // T x B, 1 where the step enters the loss
};

// Precomputed context-stacked features for each utterance.
std::vector<FrameMatrix> stack_all(const std::vector<Utterance>& utterances, int context);

TrainingBatch make_batch(const std::vector<Utterance>& utterances,
                         const std::vector<FrameMatrix>& stacked, std::span<const Chunk> chunks,
                         int delay_frames, int sequence_frames);

struct StepStats {
  double loss = 0.0;
  double grad_norm = 0.0;
  double samples = 0.0;
};

// One optimizer step on `batch`: forward/backward in micro-batches, global
// norm clipping, Adam update. Dropout masks are drawn from `rng` when the
// config's rate is positive.
StepStats train_step(LstmModel& model, AdamState& adam, const TrainingBatch& batch, Rng& rng,
                     double clip_norm, int micro_batch);

struct TrainResult {
  GridPoint point;
  Checkpoint checkpoint;
  std::vector<double> epoch_loss;
  bool failed = false;
  std::string diagnostic;
};

using EpochCallback = std::function<void(const GridPoint&, int epoch, double loss)>;

TrainResult train_model(const Dataset& dataset, const TrainConfig& config, const GridPoint& point,
                        const EpochCallback& on_epoch = {});

// Trains every grid point. A non-finite loss marks that point failed and the
// grid continues.
std::vector<TrainResult> train(const Dataset& dataset, const TrainConfig& config,
                               const EpochCallback& on_epoch = {});

}  // namespace lark
