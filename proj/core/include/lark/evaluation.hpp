#pragma once

#include <span>
#include <string>
#include <vector>

#include "lark/dataset.hpp"
#include "lark/landmarks.hpp"
#include "lark/lstm.hpp"

namespace lark {

struct EvalRow {
  std::string model_id;
  double rmse_position = 0.0;
  double rmse_first_diff = 0.0;
  double rmse_second_diff = 0.0;
};

struct EvalReport {
  std::vector<EvalRow> rows;
  std::string selected;
};

// Squared errors are pooled over every (frame, coordinate) of every sequence
// before the square root. Differences are taken within each sequence.
class RmseAccumulator {
 public:
  void add(const LandmarkSequence& ground_truth, const LandmarkSequence& predicted);
  EvalRow result(std::string model_id) const;
  bool empty() const { return n_position_ == 0.0; }

 private:
  double sq_position_ = 0.0;
  double sq_first_ = 0.0;
  double sq_second_ = 0.0;
  double n_position_ = 0.0;
  double n_first_ = 0.0;
  double n_second_ = 0.0;
};

EvalRow evaluate_sequences(std::span<const LandmarkSequence> ground_truth,
                           std::span<const LandmarkSequence> predicted, std::string model_id);

// Predicts every utterance of `split` and compares against its targets.
EvalRow evaluate(const LstmModel& model, const Dataset& dataset, Split split = Split::kValidation);

// argmin rmse_position; ties by rmse_first_diff, rmse_second_diff, then name.
std::string select_model(std::span<const EvalRow> rows);

// Fixed-width table shaped like a results table: model | RMSE | first | second.
std::string format_report_table(const EvalReport& report);
// `model.<id>.rmse_position = ...` lines plus `selected = <id>`.
std::string format_report_kv(const EvalReport& report);

}  // namespace lark
