#include "lark/adam.hpp"

#include <cmath>
#include <vector>

#include "lark/errors.hpp"

namespace lark {

AdamState AdamState::for_params(const ModelConfig& config, AdamHyperParams hyper) {
  AdamState s;
  s.hyper = hyper;
  s.first_moment = LstmParams::zeros_like(config);
  s.second_moment = LstmParams::zeros_like(config);
  return s;
}

void adam_step(LstmParams& params, const LstmParams& grads, AdamState& state) {
  std::vector<Eigen::Map<const Eigen::MatrixXd>> g;
  grads.for_each([&](const std::string& name, Eigen::Map<const Eigen::MatrixXd> t) {
    if (!t.allFinite()) throw Error(ErrorKind::kNumeric, "non-finite gradient in " + name);
    g.push_back(t);
  });
  std::vector<Eigen::Map<Eigen::MatrixXd>> m;
  std::vector<Eigen::Map<Eigen::MatrixXd>> v;
  state.first_moment.for_each([&](const std::string&, Eigen::Map<Eigen::MatrixXd> t) { m.push_back(t); });
  state.second_moment.for_each([&](const std::string&, Eigen::Map<Eigen::MatrixXd> t) { v.push_back(t); });

  std::size_t k = 0;
  bool shapes_ok = g.size() == m.size() && g.size() == v.size();
  params.for_each([&](const std::string&, Eigen::Map<Eigen::MatrixXd> t) {
    if (k >= g.size() || t.rows() != g[k].rows() || t.cols() != g[k].cols() ||
        t.rows() != m[k].rows() || t.cols() != m[k].cols()) {
      shapes_ok = false;
    }
    ++k;
  });
  if (!shapes_ok || k != g.size()) {
    throw Error(ErrorKind::kShape, "adam: parameter, gradient and moment shapes differ");
  }

  const AdamHyperParams& h = state.hyper;
  state.step += 1;
  const double bc1 = 1.0 - std::pow(h.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(h.beta2, static_cast<double>(state.step));

  k = 0;
  params.for_each([&](const std::string&, Eigen::Map<Eigen::MatrixXd> p) {
    auto& mk = m[k];
    auto& vk = v[k];
    const auto& gk = g[k];
    mk = h.beta1 * mk + (1.0 - h.beta1) * gk;
    vk = h.beta2 * vk + (1.0 - h.beta2) * gk.cwiseProduct(gk);
    p.array() -= h.learning_rate * (mk.array() / bc1) / ((vk.array() / bc2).sqrt() + h.epsilon);
    ++k;
  });
}

}  // namespace lark
