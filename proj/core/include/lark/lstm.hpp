#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "lark/features.hpp"
#include "lark/landmarks.hpp"
#include "lark/rng.hpp"

namespace lark {

struct ModelConfig {
  int num_layers = 4;
  int hidden_size = 256;
  int feature_dim = kFeatureDim;  // per-frame feature width before context stacking
  int context_frames = 5;
  int delay_frames = 1;
  double dropout_rate = 0.2;

  int input_dim() const { return feature_dim * context_frames; }
  static constexpr int output_dim() { return kLandmarkDim; }
  int delay_ms() const { return delay_frames * 40; }
  // Table-style identifier, e.g. "D40-C5".
  std::string model_id() const;
  // Throws kArgument on invalid values.
  void validate() const;
};

// Gate blocks are stacked [input; forget; candidate; output] along rows.
struct LstmLayerParams {
  Eigen::MatrixXd w_input;      // 4H x in
  Eigen::MatrixXd w_recurrent;  // 4H x H
  Eigen::VectorXd bias;         // 4H
};

struct LstmParams {
  std::vector<LstmLayerParams> layers;
  Eigen::MatrixXd head_weight;  // 136 x H
  Eigen::VectorXd head_bias;    // 136

  static LstmParams zeros_like(const ModelConfig& config);

  // Visits every tensor in declaration order: layer{l}.w_input,
  // layer{l}.w_recurrent, layer{l}.bias, ..., head.weight, head.bias.
  void for_each(const std::function<void(const std::string&, Eigen::Map<Eigen::MatrixXd>)>& fn);
  void for_each(
      const std::function<void(const std::string&, Eigen::Map<const Eigen::MatrixXd>)>& fn) const;

  std::size_t parameter_count() const;
  void set_zero();
};

// Uniform(-k, k) with k = 1/sqrt(fan_in); fan_in is in + H for LSTM layers and
// H for the head. Forget-gate biases are 1, all other biases 0.
LstmParams init_params(const ModelConfig& config, std::uint64_t seed);

struct CellState {
  Eigen::VectorXd h;
  Eigen::VectorXd c;
};

// One step of the standard LSTM recurrence: logistic gates, tanh candidate.
CellState lstm_cell_forward(const Eigen::VectorXd& x, const Eigen::VectorXd& h_prev,
                            const Eigen::VectorXd& c_prev, const LstmLayerParams& params);

// Inverted-dropout masks, one per sequence (column) and reused at every time
// step. input[l] scales the input of layer l (input[0] is always empty: no
// dropout on acoustic features); input[num_layers] scales the head input.
// recurrent[l] scales h_{t-1} entering layer l.
struct DropoutMasks {
  std::vector<Eigen::MatrixXd> input;
  std::vector<Eigen::MatrixXd> recurrent;
};

DropoutMasks sample_dropout_masks(const ModelConfig& config, int batch, Rng& rng);

// A batch of sequences, time-major: inputs[t] is in x B.
using SequenceBatch = std::vector<Eigen::MatrixXd>;

struct ForwardCache {
  int batch = 0;
  bool valid = false;
  DropoutMasks masks;
  bool has_masks = false;
  // Indexed [layer][t].
  std::vector<std::vector<Eigen::MatrixXd>> x;       // masked layer input
  std::vector<std::vector<Eigen::MatrixXd>> h_prev;  // masked recurrent input
  std::vector<std::vector<Eigen::MatrixXd>> gates;   // post-activation, 4H x B
  std::vector<std::vector<Eigen::MatrixXd>> c;
  std::vector<std::vector<Eigen::MatrixXd>> c_prev;
  std::vector<std::vector<Eigen::MatrixXd>> h;
  std::vector<Eigen::MatrixXd> head_input;  // [t]
};

struct ForwardResult {
  SequenceBatch outputs;  // [t] 136 x B
  ForwardCache cache;
};

// Stacked LSTM plus linear head. Pass `masks` for training-mode dropout.
ForwardResult forward_sequence(const SequenceBatch& inputs, const LstmParams& params,
                               const ModelConfig& config, const DropoutMasks* masks = nullptr);

// Full backpropagation through time. `output_grads[t]` is dLoss/dOutput_t.
LstmParams backward(const ForwardCache& cache, const SequenceBatch& output_grads,
                    const LstmParams& params, const ModelConfig& config);

struct LossResult {
  double loss = 0.0;
  SequenceBatch grad;  // dLoss/dOutputs
  double sample_count = 0.0;
};

// Masked squared error summed over the 136 coordinates of every counted
// (sequence, frame) sample and divided by `normalizer` (the sample count when
// normalizer <= 0). frame_mask is T x B with 0/1 entries.
LossResult masked_mse(const SequenceBatch& outputs, const SequenceBatch& targets,
                      const Eigen::MatrixXd& frame_mask, double normalizer = 0.0);

// Output step t is compared with ground-truth frame t - delay; the first
// `delay` steps are excluded. Throws kShape when lengths differ.
double mse_loss(const LandmarkSequence& predicted, const LandmarkSequence& target, int delay);

// Rescales gradients so their global L2 norm is at most max_norm. Returns the
// norm before clipping.
double clip_global_norm(LstmParams& grads, double max_norm);

struct LstmModel {
  ModelConfig config;
  LstmParams params;
};

// T x 136 raw network outputs in inference mode.
Eigen::MatrixXd raw_outputs(const FeatureSequence& features, const LstmModel& model);

struct PredictedSequence {
  LandmarkSequence frames;  // normalized, re-pinned
  std::string model_id;
  int delay_frames = 0;
};

// Context stacking, inference forward, delay compensation (drop the first D
// outputs, repeat the last one D times) and per-frame eye re-pinning.
PredictedSequence predict(const FeatureSequence& features, const LstmModel& model);

}  // namespace lark
