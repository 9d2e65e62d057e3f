#include "lark/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <tuple>

#include "lark/errors.hpp"
#include "lark/landmark_io.hpp"

namespace lark {

void RmseAccumulator::add(const LandmarkSequence& gt, const LandmarkSequence& pd) {
  if (gt.size() != pd.size()) {
    throw Error(ErrorKind::kShape, "ground truth has " + std::to_string(gt.size()) +
                                       " frames, prediction has " + std::to_string(pd.size()));
  }
  const std::size_t T = gt.size();
  std::vector<Eigen::Matrix<double, kNumLandmarks, 2>> err(T);
  for (std::size_t t = 0; t < T; ++t) {
    err[t] = pd.frames[t].points() - gt.frames[t].points();
    sq_position_ += err[t].squaredNorm();
    n_position_ += kLandmarkDim;
  }
  // diff(PD) - diff(GT) == diff(PD - GT)
  for (std::size_t t = 1; t < T; ++t) {
    sq_first_ += (err[t] - err[t - 1]).squaredNorm();
    n_first_ += kLandmarkDim;
  }
  for (std::size_t t = 2; t < T; ++t) {
    sq_second_ += (err[t] - 2.0 * err[t - 1] + err[t - 2]).squaredNorm();
    n_second_ += kLandmarkDim;
  }
}

EvalRow RmseAccumulator::result(std::string model_id) const {
  if (n_position_ == 0.0) throw Error(ErrorKind::kEmptyInput, "no frames were evaluated");
  EvalRow row;
  row.model_id = std::move(model_id);
  row.rmse_position = std::sqrt(sq_position_ / n_position_);
  row.rmse_first_diff = n_first_ > 0 ? std::sqrt(sq_first_ / n_first_) : 0.0;
  row.rmse_second_diff = n_second_ > 0 ? std::sqrt(sq_second_ / n_second_) : 0.0;
  return row;
}

EvalRow evaluate_sequences(std::span<const LandmarkSequence> ground_truth,
                           std::span<const LandmarkSequence> predicted, std::string model_id) {
  if (ground_truth.size() != predicted.size()) {
    throw Error(ErrorKind::kShape, "ground truth and prediction counts differ");
  }
  if (ground_truth.empty()) throw Error(ErrorKind::kEmptyInput, "empty evaluation set");
  RmseAccumulator acc;
  for (std::size_t i = 0; i < ground_truth.size(); ++i) acc.add(ground_truth[i], predicted[i]);
  return acc.result(std::move(model_id));
}

EvalRow evaluate(const LstmModel& model, const Dataset& dataset, Split split) {
  RmseAccumulator acc;
  for (const auto& u : dataset.utterances) {
    if (u.split != split) continue;
    acc.add(u.targets, predict(u.features, model).frames);
  }
  if (acc.empty()) {
    throw Error(ErrorKind::kEmptyInput,
                "no utterances in split '" + std::string(to_string(split)) + "' to evaluate");
  }
  return acc.result(model.config.model_id());
}

std::string select_model(std::span<const EvalRow> rows) {
  if (rows.empty()) throw Error(ErrorKind::kEmptyInput, "no report rows to select from");
  const auto key = [](const EvalRow& r) {
    return std::tie(r.rmse_position, r.rmse_first_diff, r.rmse_second_diff, r.model_id);
  };
  return std::min_element(rows.begin(), rows.end(),
                          [&](const EvalRow& a, const EvalRow& b) { return key(a) < key(b); })
      ->model_id;
}

std::string format_report_table(const EvalReport& report) {
  std::string out;
  char line[160];
  std::snprintf(line, sizeof(line), "%-10s | %10s | %16s | %17s\n", "model", "RMSE", "RMSE First Diff",
                "RMSE Second Diff");
  out += line;
  out += std::string(62, '-') + '\n';
  for (const auto& r : report.rows) {
    std::snprintf(line, sizeof(line), "%-10s | %10.4f | %16.4f | %17.4f%s\n", r.model_id.c_str(),
                  r.rmse_position, r.rmse_first_diff, r.rmse_second_diff,
                  r.model_id == report.selected ? "  *" : "");
    out += line;
  }
  if (!report.selected.empty()) out += "selected: " + report.selected + '\n';
  return out;
}

std::string format_report_kv(const EvalReport& report) {
  std::string out;
  for (const auto& r : report.rows) {
    const std::string p = "model." + r.model_id + ".";
    out += p + "rmse_position = " + format_double(r.rmse_position) + '\n';
    out += p + "rmse_first_diff = " + format_double(r.rmse_first_diff) + '\n';
    out += p + "rmse_second_diff = " + format_double(r.rmse_second_diff) + '\n';
  }
  out += "selected = " + report.selected + '\n';
  return out;
}

}  // namespace lark
