#pragma once

#include <cstdint>

#include "lark/lstm.hpp"

namespace lark {

struct AdamHyperParams {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamHyperParams hyper;
  LstmParams first_moment;
  LstmParams second_moment;
  std::int64_t step = 0;

  static AdamState for_params(const ModelConfig& config, AdamHyperParams hyper = {});
};

// Bias-corrected Adam update. Every gradient is checked for finiteness before
// anything is modified; a non-finite entry raises kNumeric naming the tensor.
void adam_step(LstmParams& params, const LstmParams& grads, AdamState& state);

}  // namespace lark
