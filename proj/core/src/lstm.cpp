#include "lark/lstm.hpp"

#include <cmath>

#include "lark/errors.hpp"

namespace lark {
namespace {

Eigen::MatrixXd sigmoid(const Eigen::MatrixXd& a) {
  return a.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
}

Eigen::MatrixXd tanh_of(const Eigen::MatrixXd& a) {
  return a.unaryExpr([](double v) { return std::tanh(v); });
}

void fill_uniform(Eigen::MatrixXd& m, double k, Rng& rng) {
  // Column-major fill order is part of the determinism contract.
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = rng.uniform(-k, k);
  }
}

struct StepOut {
  Eigen::MatrixXd gates;  // post-activation
  Eigen::MatrixXd c;
  Eigen::MatrixXd h;
};

StepOut cell_step(const LstmLayerParams& p, const Eigen::MatrixXd& x, const Eigen::MatrixXd& h_prev,
                  const Eigen::MatrixXd& c_prev) {
  const Eigen::Index H = p.w_recurrent.cols();
  Eigen::MatrixXd pre = p.w_input * x + p.w_recurrent * h_prev;
  pre.colwise() += p.bias;
  StepOut out;
  out.gates.resize(4 * H, x.cols());
  out.gates.topRows(2 * H) = sigmoid(pre.topRows(2 * H));
  out.gates.middleRows(2 * H, H) = tanh_of(pre.middleRows(2 * H, H));
  out.gates.bottomRows(H) = sigmoid(pre.bottomRows(H));
  const auto i = out.gates.topRows(H).array();
  const auto f = out.gates.middleRows(H, H).array();
  const auto g = out.gates.middleRows(2 * H, H).array();
  const auto o = out.gates.bottomRows(H).array();
  out.c = (f * c_prev.array() + i * g).matrix();
  out.h = (o * out.c.array().tanh()).matrix();
  return out;
}

}  // namespace

std::string ModelConfig::model_id() const {
  return "D" + std::to_string(delay_ms()) + "-C" + std::to_string(context_frames);
}

void ModelConfig::validate() const {
  if (num_layers < 1) throw Error(ErrorKind::kArgument, "num_layers must be >= 1");
  if (hidden_size < 1) throw Error(ErrorKind::kArgument, "hidden_size must be >= 1");
  if (feature_dim < 1) throw Error(ErrorKind::kArgument, "feature_dim must be >= 1");
  if (context_frames < 1) throw Error(ErrorKind::kArgument, "context_frames must be >= 1");
  if (delay_frames < 0) throw Error(ErrorKind::kArgument, "delay_frames must be >= 0");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    throw Error(ErrorKind::kArgument, "dropout_rate must be in [0, 1)");
  }
}

LstmParams LstmParams::zeros_like(const ModelConfig& config) {
  LstmParams p;
  const int H = config.hidden_size;
  for (int l = 0; l < config.num_layers; ++l) {
    const int in = l == 0 ? config.input_dim() : H;
    p.layers.push_back({Eigen::MatrixXd::Zero(4 * H, in), Eigen::MatrixXd::Zero(4 * H, H),
                        Eigen::VectorXd::Zero(4 * H)});
  }
  p.head_weight = Eigen::MatrixXd::Zero(ModelConfig::output_dim(), H);
  p.head_bias = Eigen::VectorXd::Zero(ModelConfig::output_dim());
  return p;
}

void LstmParams::for_each(
    const std::function<void(const std::string&, Eigen::Map<Eigen::MatrixXd>)>& fn) {
  auto visit = [&](const std::string& name, auto& t) {
    fn(name, Eigen::Map<Eigen::MatrixXd>(t.data(), t.rows(), t.cols()));
  };
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const std::string prefix = "layer" + std::to_string(l) + ".";
    visit(prefix + "w_input", layers[l].w_input);
    visit(prefix + "w_recurrent", layers[l].w_recurrent);
    visit(prefix + "bias", layers[l].bias);
  }
  visit("head.weight", head_weight);
  visit("head.bias", head_bias);
}

void LstmParams::for_each(
    const std::function<void(const std::string&, Eigen::Map<const Eigen::MatrixXd>)>& fn) const {
  auto visit = [&](const std::string& name, const auto& t) {
    fn(name, Eigen::Map<const Eigen::MatrixXd>(t.data(), t.rows(), t.cols()));
  };
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const std::string prefix = "layer" + std::to_string(l) + ".";
    visit(prefix + "w_input", layers[l].w_input);
    visit(prefix + "w_recurrent", layers[l].w_recurrent);
    visit(prefix + "bias", layers[l].bias);
  }
  visit("head.weight", head_weight);
  visit("head.bias", head_bias);
}

std::size_t LstmParams::parameter_count() const {
  std::size_t n = 0;
  for_each([&](const std::string&, Eigen::Map<const Eigen::MatrixXd> t) {
    n += static_cast<std::size_t>(t.size());
  });
  return n;
}

void LstmParams::set_zero() {
  for_each([](const std::string&, Eigen::Map<Eigen::MatrixXd> t) { t.setZero(); });
}

LstmParams init_params(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng(seed);
  LstmParams p = LstmParams::zeros_like(config);
  const int H = config.hidden_size;
  for (auto& layer : p.layers) {
    const double k = 1.0 / std::sqrt(static_cast<double>(layer.w_input.cols() + H));
    fill_uniform(layer.w_input, k, rng);
    fill_uniform(layer.w_recurrent, k, rng);
    layer.bias.segment(H, H).setOnes();
  }
  fill_uniform(p.head_weight, 1.0 / std::sqrt(static_cast<double>(H)), rng);
  return p;
}

CellState lstm_cell_forward(const Eigen::VectorXd& x, const Eigen::VectorXd& h_prev,
                            const Eigen::VectorXd& c_prev, const LstmLayerParams& params) {
  if (x.size() != params.w_input.cols() || h_prev.size() != params.w_recurrent.cols() ||
      c_prev.size() != params.w_recurrent.cols()) {
    throw Error(ErrorKind::kShape, "lstm cell input shapes do not match parameters");
  }
  const StepOut s = cell_step(params, x, h_prev, c_prev);
  return {s.h.col(0), s.c.col(0)};
}

DropoutMasks sample_dropout_masks(const ModelConfig& config, int batch, Rng& rng) {
  const double keep = 1.0 - config.dropout_rate;
  const double scale = 1.0 / keep;
  auto draw = [&](Eigen::Index rows) {
    Eigen::MatrixXd m(rows, batch);
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = rng.bernoulli(keep) ? scale : 0.0;
    }
    return m;
  };
  DropoutMasks masks;
  masks.input.emplace_back();
  for (int l = 1; l <= config.num_layers; ++l) masks.input.push_back(draw(config.hidden_size));
  for (int l = 0; l < config.num_layers; ++l) masks.recurrent.push_back(draw(config.hidden_size));
  return masks;
}

ForwardResult forward_sequence(const SequenceBatch& inputs, const LstmParams& params,
                               const ModelConfig& config, const DropoutMasks* masks) {
  const auto T = inputs.size();
  if (T == 0) throw Error(ErrorKind::kEmptyInput, "forward pass needs at least one time step");
  if (params.layers.size() != static_cast<std::size_t>(config.num_layers)) {
    throw Error(ErrorKind::kShape, "parameter layer count does not match config");
  }
  const Eigen::Index B = inputs.front().cols();
  for (const auto& x : inputs) {
    if (x.rows() != config.input_dim() || x.cols() != B) {
      throw Error(ErrorKind::kShape, "input is " + std::to_string(x.rows()) + "x" +
                                         std::to_string(x.cols()) + ", expected " +
                                         std::to_string(config.input_dim()) + "x" +
                                         std::to_string(B));
    }
  }
  const int L = config.num_layers;
  const int H = config.hidden_size;

  ForwardResult result;
  ForwardCache& cache = result.cache;
  cache.batch = static_cast<int>(B);
  cache.has_masks = masks != nullptr;
  if (masks) cache.masks = *masks;
  const auto resize = [&](auto& v) { v.assign(static_cast<std::size_t>(L), std::vector<Eigen::MatrixXd>(T)); };
  resize(cache.x);
  resize(cache.h_prev);
  resize(cache.gates);
  resize(cache.c);
  resize(cache.c_prev);
  resize(cache.h);
  cache.head_input.resize(T);
  result.outputs.resize(T);

  for (int l = 0; l < L; ++l) {
    const auto ul = static_cast<std::size_t>(l);
    const LstmLayerParams& p = params.layers[ul];
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(H, B);
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(H, B);
    for (std::size_t t = 0; t < T; ++t) {
      Eigen::MatrixXd x = l == 0 ? inputs[t] : cache.h[ul - 1][t];
      Eigen::MatrixXd hp = h;
      if (masks) {
        if (l > 0) x.array() *= masks->input[ul].array();
        hp.array() *= masks->recurrent[ul].array();
      }
      StepOut s = cell_step(p, x, hp, c);
      cache.x[ul][t] = std::move(x);
      cache.h_prev[ul][t] = std::move(hp);
      cache.c_prev[ul][t] = c;
      cache.gates[ul][t] = std::move(s.gates);
      c = s.c;
      h = s.h;
      cache.c[ul][t] = std::move(s.c);
      cache.h[ul][t] = std::move(s.h);
    }
  }

  const auto top = static_cast<std::size_t>(L - 1);
  for (std::size_t t = 0; t < T; ++t) {
    Eigen::MatrixXd hin = cache.h[top][t];
    if (masks) hin.array() *= masks->input[static_cast<std::size_t>(L)].array();
    Eigen::MatrixXd y = params.head_weight * hin;
    y.colwise() += params.head_bias;
    result.outputs[t] = std::move(y);
    cache.head_input[t] = std::move(hin);
  }
  cache.valid = true;
  return result;
}

LstmParams backward(const ForwardCache& cache, const SequenceBatch& output_grads,
                    const LstmParams& params, const ModelConfig& config) {
  if (!cache.valid) throw Error(ErrorKind::kState, "backward called without a forward cache");
  const std::size_t T = cache.head_input.size();
  if (output_grads.size() != T) {
    throw Error(ErrorKind::kShape, "output gradient length does not match forward cache");
  }
  const int L = config.num_layers;
  const int H = config.hidden_size;
  const Eigen::Index B = cache.batch;

  LstmParams grads = LstmParams::zeros_like(config);

  // Gradient w.r.t. the (unmasked) output of the current layer, per step.
  std::vector<Eigen::MatrixXd> dh_above(T);
  for (std::size_t t = 0; t < T; ++t) {
    const Eigen::MatrixXd& dy = output_grads[t];
    if (dy.rows() != ModelConfig::output_dim() || dy.cols() != B) {
      throw Error(ErrorKind::kShape, "output gradient has wrong shape");
    }
    grads.head_weight.noalias() += dy * cache.head_input[t].transpose();
    grads.head_bias += dy.rowwise().sum();
    Eigen::MatrixXd dh = params.head_weight.transpose() * dy;
    if (cache.has_masks) dh.array() *= cache.masks.input[static_cast<std::size_t>(L)].array();
    dh_above[t] = std::move(dh);
  }

  for (int l = L - 1; l >= 0; --l) {
    const auto ul = static_cast<std::size_t>(l);
    const LstmLayerParams& p = params.layers[ul];
    LstmLayerParams& g = grads.layers[ul];
    Eigen::MatrixXd dh_next = Eigen::MatrixXd::Zero(H, B);
    Eigen::MatrixXd dc_next = Eigen::MatrixXd::Zero(H, B);
    std::vector<Eigen::MatrixXd> dh_below(T);

    for (std::size_t ti = T; ti-- > 0;) {
      const Eigen::MatrixXd& gates = cache.gates[ul][ti];
      const auto i = gates.topRows(H).array();
      const auto f = gates.middleRows(H, H).array();
      const auto gg = gates.middleRows(2 * H, H).array();
      const auto o = gates.bottomRows(H).array();
      const Eigen::ArrayXXd tanh_c = cache.c[ul][ti].array().tanh();

      const Eigen::ArrayXXd dh = (dh_above[ti] + dh_next).array();
      const Eigen::ArrayXXd dc = dc_next.array() + dh * o * (1.0 - tanh_c.square());

      Eigen::MatrixXd da(4 * H, B);
      da.topRows(H) = (dc * gg * i * (1.0 - i)).matrix();
      da.middleRows(H, H) = (dc * cache.c_prev[ul][ti].array() * f * (1.0 - f)).matrix();
      da.middleRows(2 * H, H) = (dc * i * (1.0 - gg.square())).matrix();
      da.bottomRows(H) = (dh * tanh_c * o * (1.0 - o)).matrix();

      g.w_input.noalias() += da * cache.x[ul][ti].transpose();
      g.w_recurrent.noalias() += da * cache.h_prev[ul][ti].transpose();
      g.bias += da.rowwise().sum();

      Eigen::MatrixXd dhp = p.w_recurrent.transpose() * da;
      if (cache.has_masks) dhp.array() *= cache.masks.recurrent[ul].array();
      dh_next = std::move(dhp);
      dc_next = (dc * f).matrix();

      if (l > 0) {
        Eigen::MatrixXd dx = p.w_input.transpose() * da;
        if (cache.has_masks) dx.array() *= cache.masks.input[ul].array();
        dh_below[ti] = std::move(dx);
      }
    }
    if (l > 0) dh_above = std::move(dh_below);
  }
  return grads;
}

LossResult masked_mse(const SequenceBatch& outputs, const SequenceBatch& targets,
                      const Eigen::MatrixXd& frame_mask, double normalizer) {
  const std::size_t T = outputs.size();
  if (targets.size() != T || static_cast<std::size_t>(frame_mask.rows()) != T) {
    throw Error(ErrorKind::kShape, "loss inputs have different lengths");
  }
  LossResult r;
  r.sample_count = frame_mask.sum();
  const double n = normalizer > 0.0 ? normalizer : r.sample_count;
  r.grad.resize(T);
  double total = 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    if (targets[t].rows() != outputs[t].rows() || targets[t].cols() != outputs[t].cols() ||
        frame_mask.cols() != outputs[t].cols()) {
      throw Error(ErrorKind::kShape, "loss target shape mismatch");
    }
    Eigen::MatrixXd diff = outputs[t] - targets[t];
    diff.array().rowwise() *= frame_mask.row(static_cast<Eigen::Index>(t)).array();
    total += diff.squaredNorm();
    r.grad[t] = n > 0.0 ? Eigen::MatrixXd(2.0 * diff / n) : Eigen::MatrixXd::Zero(diff.rows(), diff.cols());
  }
  r.loss = n > 0.0 ? total / n : 0.0;
  return r;
}

double mse_loss(const LandmarkSequence& predicted, const LandmarkSequence& target, int delay) {
  if (predicted.size() != target.size()) {
    throw Error(ErrorKind::kShape, "predicted has " + std::to_string(predicted.size()) +
                                       " frames, target has " + std::to_string(target.size()));
  }
  if (delay < 0) throw Error(ErrorKind::kArgument, "delay must be non-negative");
  const auto d = static_cast<std::size_t>(delay);
  if (d >= predicted.size()) throw Error(ErrorKind::kShape, "delay leaves no frames to compare");
  double total = 0.0;
  for (std::size_t t = d; t < predicted.size(); ++t) {
    total += (predicted.frames[t].points() - target.frames[t - d].points()).squaredNorm();
  }
  return total / static_cast<double>(predicted.size() - d);
}

double clip_global_norm(LstmParams& grads, double max_norm) {
  double sq = 0.0;
  grads.for_each([&](const std::string&, Eigen::Map<const Eigen::MatrixXd> t) { sq += t.squaredNorm(); });
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const double s = max_norm / norm;
    grads.for_each([&](const std::string&, Eigen::Map<Eigen::MatrixXd> t) { t *= s; });
  }
  return norm;
}

Eigen::MatrixXd raw_outputs(const FeatureSequence& features, const LstmModel& model) {
  const ModelConfig& cfg = model.config;
  if (features.frames.cols() != cfg.feature_dim) {
    throw Error(ErrorKind::kShape, "feature width " + std::to_string(features.frames.cols()) +
                                       " does not match model feature_dim " +
                                       std::to_string(cfg.feature_dim));
  }
  if (features.frames.rows() == 0) throw Error(ErrorKind::kEmptyInput, "no feature frames");
  const FrameMatrix stacked = stack_context(features.frames, cfg.context_frames);
  SequenceBatch inputs(static_cast<std::size_t>(stacked.rows()));
  for (Eigen::Index t = 0; t < stacked.rows(); ++t) {
    inputs[static_cast<std::size_t>(t)] = stacked.row(t).transpose();
  }
  const ForwardResult fr = forward_sequence(inputs, model.params, cfg, nullptr);
  Eigen::MatrixXd out(stacked.rows(), ModelConfig::output_dim());
  for (Eigen::Index t = 0; t < stacked.rows(); ++t) {
    out.row(t) = fr.outputs[static_cast<std::size_t>(t)].col(0).transpose();
  }
  return out;
}

PredictedSequence predict(const FeatureSequence& features, const LstmModel& model) {
  if (features.frame_rate != kFrameRate) {
    throw Error(ErrorKind::kShape, "features must be at 25 FPS");
  }
  const Eigen::MatrixXd raw = raw_outputs(features, model);
  const Eigen::Index T = raw.rows();
  const Eigen::Index D = model.config.delay_frames;
  PredictedSequence out;
  out.model_id = model.config.model_id();
  out.delay_frames = model.config.delay_frames;
  out.frames.frame_rate = kFrameRate;
  out.frames.frames.reserve(static_cast<std::size_t>(T));
  for (Eigen::Index k = 0; k < T; ++k) {
    const Eigen::Index src = std::min(k + D, T - 1);
    const Eigen::VectorXd row = raw.row(src).transpose();
    out.frames.frames.push_back(repin_eyes(LandmarkFrame::from_flat(row)));
  }
  return out;
}

}  // namespace lark
