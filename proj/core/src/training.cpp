#include "lark/training.hpp"

#include <cmath>
#include <regex>

#include "lark/errors.hpp"
#include "lark/landmark_io.hpp"
#include "lark/parallel.hpp"

namespace lark {
namespace {

DropoutMasks slice_masks(const DropoutMasks& m, Eigen::Index start, Eigen::Index n) {
  DropoutMasks out;
  for (const auto& x : m.input) {
    out.input.push_back(x.size() == 0 ? Eigen::MatrixXd() : Eigen::MatrixXd(x.middleCols(start, n)));
  }
  for (const auto& x : m.recurrent) out.recurrent.push_back(x.middleCols(start, n));
  return out;
}

SequenceBatch slice_cols(const SequenceBatch& b, Eigen::Index start, Eigen::Index n) {
  SequenceBatch out;
  out.reserve(b.size());
  for (const auto& m : b) out.push_back(m.middleCols(start, n));
  return out;
}

void accumulate(LstmParams& into, const LstmParams& add) {
  std::vector<Eigen::Map<const Eigen::MatrixXd>> src;
  add.for_each([&](const std::string&, Eigen::Map<const Eigen::MatrixXd> t) { src.push_back(t); });
  std::size_t k = 0;
  into.for_each([&](const std::string&, Eigen::Map<Eigen::MatrixXd> t) { t += src[k++]; });
}

Eigen::VectorXd mean_training_target(const Dataset& ds) {
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(kLandmarkDim);
  double n = 0.0;
  for (const auto& u : ds.utterances) {
    if (u.split != Split::kTrain) continue;
    for (const auto& f : u.targets.frames) {
      sum += f.flat();
      n += 1.0;
    }
  }
  return n > 0 ? Eigen::VectorXd(sum / n) : ds.mean_face.shape.flat();
}

}  // namespace

std::string GridPoint::id() const {
  return "D" + std::to_string(delay_ms) + "-C" + std::to_string(context);
}

GridPoint GridPoint::parse(const std::string& id) {
  static const std::regex re(R"(D(\d+)-C(\d+))");
  std::smatch m;
  if (!std::regex_match(id, m, re)) {
    throw Error(ErrorKind::kArgument, "grid point '" + id + "' is not of the form D<ms>-C<frames>");
  }
  GridPoint p{std::stoi(m[1]), std::stoi(m[2])};
  if (p.delay_ms % 40 != 0) {
    throw Error(ErrorKind::kArgument, "delay " + std::to_string(p.delay_ms) + " ms is not a multiple of 40 ms");
  }
  if (p.context < 1) throw Error(ErrorKind::kArgument, "context must be at least 1");
  return p;
}

std::vector<GridPoint> full_grid() {
  return {{0, 3}, {0, 5}, {40, 3}, {40, 5}, {80, 3}, {80, 5}};
}

void TrainConfig::validate() const {
  if (grid.empty()) throw Error(ErrorKind::kArgument, "model grid is empty");
  if (batch_size < 1) throw Error(ErrorKind::kArgument, "batch_size must be >= 1");
  if (epochs < 0) throw Error(ErrorKind::kArgument, "epochs must be >= 0");
  if (sequence_frames < 1) throw Error(ErrorKind::kArgument, "sequence_frames must be >= 1");
  if (!(learning_rate > 0.0)) throw Error(ErrorKind::kArgument, "learning_rate must be positive");
  if (!(clip_norm > 0.0)) throw Error(ErrorKind::kArgument, "clip_norm must be positive");
  if (micro_batch < 1) throw Error(ErrorKind::kArgument, "micro_batch must be >= 1");
  for (const auto& p : grid) model_config(p).validate();
}

ModelConfig TrainConfig::model_config(const GridPoint& point, int feature_dim) const {
  ModelConfig c;
  c.num_layers = num_layers;
  c.hidden_size = hidden_size;
  c.feature_dim = feature_dim;
  c.context_frames = point.context;
  c.delay_frames = point.delay_frames();
  c.dropout_rate = dropout_rate;
  return c;
}

std::vector<FrameMatrix> stack_all(const std::vector<Utterance>& utterances, int context) {
  std::vector<FrameMatrix> out;
  out.reserve(utterances.size());
  for (const auto& u : utterances) out.push_back(stack_context(u.features.frames, context));
  return out;
}

TrainingBatch make_batch(const std::vector<Utterance>& utterances,
                         const std::vector<FrameMatrix>& stacked, std::span<const Chunk> chunks,
                         int delay_frames, int sequence_frames) {
  if (chunks.empty()) throw Error(ErrorKind::kEmptyInput, "batch has no chunks");
  const auto B = static_cast<Eigen::Index>(chunks.size());
  const auto T = static_cast<std::size_t>(sequence_frames);
  const Eigen::Index in = stacked[chunks.front().utterance].cols();
  TrainingBatch b;
  b.inputs.assign(T, Eigen::MatrixXd::Zero(in, B));
  b.targets.assign(T, Eigen::MatrixXd::Zero(kLandmarkDim, B));
  b.mask = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(T), B);
  for (Eigen::Index j = 0; j < B; ++j) {
    const Chunk& ch = chunks[static_cast<std::size_t>(j)];
    const FrameMatrix& x = stacked[ch.utterance];
    const LandmarkSequence& y = utterances[ch.utterance].targets;
    for (Eigen::Index t = 0; t < ch.length && t < static_cast<Eigen::Index>(T); ++t) {
      const auto ut = static_cast<std::size_t>(t);
      b.inputs[ut].col(j) = x.row(ch.start + t).transpose();
      if (t >= delay_frames) {
        b.targets[ut].col(j) = y.frames[static_cast<std::size_t>(ch.start + t - delay_frames)].flat();
        b.mask(t, j) = 1.0;
      }
    }
  }
  return b;
}

StepStats train_step(LstmModel& model, AdamState& adam, const TrainingBatch& batch, Rng& rng,
                     double clip_norm, int micro_batch) {
  const ModelConfig& cfg = model.config;
  const Eigen::Index B = batch.mask.cols();
  StepStats stats;
  stats.samples = batch.mask.sum();
  if (stats.samples <= 0.0) return stats;

  std::optional<DropoutMasks> masks;
  if (cfg.dropout_rate > 0.0) masks = sample_dropout_masks(cfg, static_cast<int>(B), rng);

  LstmParams grads = LstmParams::zeros_like(cfg);
  for (Eigen::Index start = 0; start < B; start += micro_batch) {
    const Eigen::Index n = std::min<Eigen::Index>(micro_batch, B - start);
    const SequenceBatch inputs = slice_cols(batch.inputs, start, n);
    const SequenceBatch targets = slice_cols(batch.targets, start, n);
    const Eigen::MatrixXd mask = batch.mask.middleCols(start, n);
    if (mask.sum() <= 0.0) continue;
    std::optional<DropoutMasks> part;
    if (masks) part = slice_masks(*masks, start, n);
    const ForwardResult fr = forward_sequence(inputs, model.params, cfg, part ? &*part : nullptr);
    const LossResult lr = masked_mse(fr.outputs, targets, mask, stats.samples);
    stats.loss += lr.loss;
    accumulate(grads, backward(fr.cache, lr.grad, model.params, cfg));
  }
  if (!std::isfinite(stats.loss)) {
    throw Error(ErrorKind::kNumeric, "non-finite training loss");
  }
  stats.grad_norm = clip_global_norm(grads, clip_norm);
  adam_step(model.params, grads, adam);
  return stats;
}

TrainResult train_model(const Dataset& dataset, const TrainConfig& config, const GridPoint& point,
                        const EpochCallback& on_epoch) {
  config.validate();
  if (dataset.utterances.empty()) throw Error(ErrorKind::kEmptyInput, "dataset is empty");
  const int feature_dim = static_cast<int>(dataset.utterances.front().features.frames.cols());

  TrainResult result;
  result.point = point;
  LstmModel model;
  model.config = config.model_config(point, feature_dim);
  model.params = init_params(model.config, config.seed);
  model.params.head_bias = mean_training_target(dataset);

  const std::vector<Chunk> chunks = split_into_chunks(dataset.utterances, Split::kTrain, config.sequence_frames);
  if (chunks.empty()) throw Error(ErrorKind::kEmptyInput, "no training chunks");
  const std::vector<FrameMatrix> stacked = stack_all(dataset.utterances, point.context);

  AdamHyperParams hyper;
  hyper.learning_rate = config.learning_rate;
  AdamState adam = AdamState::for_params(model.config, hyper);
  Rng rng(config.seed ^ 0x9E3779B97F4A7C15ULL);

  std::vector<Chunk> order = chunks;
  try {
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
      rng.shuffle(order.begin(), order.end());
      double weighted = 0.0;
      double samples = 0.0;
      for (std::size_t s = 0; s < order.size(); s += static_cast<std::size_t>(config.batch_size)) {
        const std::size_t n = std::min(order.size() - s, static_cast<std::size_t>(config.batch_size));
        const TrainingBatch batch = make_batch(dataset.utterances, stacked,
                                               std::span<const Chunk>(order).subspan(s, n),
                                               model.config.delay_frames, config.sequence_frames);
        const StepStats st = train_step(model, adam, batch, rng, config.clip_norm, config.micro_batch);
        weighted += st.loss * st.samples;
        samples += st.samples;
      }
      const double loss = samples > 0 ? weighted / samples : 0.0;
      result.epoch_loss.push_back(loss);
      if (on_epoch) on_epoch(point, epoch, loss);
      if (config.stop_below_loss && loss < *config.stop_below_loss) break;
    }
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::kNumeric) throw;
    result.failed = true;
    result.diagnostic = point.id() + ": " + e.detail() + " at epoch " +
                        std::to_string(result.epoch_loss.size());
  }

  result.checkpoint.model = std::move(model);
  result.checkpoint.mean_face = dataset.mean_face;
  result.checkpoint.info = {{"seed", std::to_string(config.seed)},
                            {"epochs", std::to_string(result.epoch_loss.size())},
                            {"batch_size", std::to_string(config.batch_size)},
                            {"learning_rate", format_double(config.learning_rate)}};
  return result;
}

std::vector<TrainResult> train(const Dataset& dataset, const TrainConfig& config,
                               const EpochCallback& on_epoch) {
  config.validate();
  std::vector<TrainResult> results(config.grid.size());
  parallel_for(config.grid.size(), config.grid_threads, [&](std::size_t i) {
    results[i] = train_model(dataset, config, config.grid[i], on_epoch);
  });
  return results;
}

}  // namespace lark
