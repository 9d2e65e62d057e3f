// Acceptance suite: one PASS/FAIL line per criterion, with measured values.
//
//   lark_acceptance [--cli <path to lark>] [--work <scratch dir>] [--only <name>]
//
// Exit status is 0 only when every gating criterion passes.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "gradient_check.hpp"
#include "lark/adam.hpp"
#include "lark/dataset.hpp"
#include "lark/evaluation.hpp"
#include "lark/features.hpp"
#include "lark/landmark_io.hpp"
#include "lark/landmarks.hpp"
#include "lark/synthetic.hpp"
#include "lark/training.hpp"
#include "test_support.hpp"

namespace fs = std::filesystem;
using namespace lark;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
  bool skipped = false;
};

struct Options {
  std::string cli;
  fs::path work = fs::temp_directory_path() / "lark_acceptance";
  std::string only;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// ---------------------------------------------------------------------------

Outcome gradient_oracle() {
  const auto start = Clock::now();
  Rng rng(20240601);
  double worst = 0.0;
  std::string worst_where;
  int configs = 0;
  for (int trial = 0; trial < 24; ++trial) {
    ModelConfig c;
    c.context_frames = 1 + static_cast<int>(rng.below(2));
    c.feature_dim = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(8 / c.context_frames)));
    c.hidden_size = 1 + static_cast<int>(rng.below(4));
    c.num_layers = 1 + static_cast<int>(rng.below(2));
    c.dropout_rate = rng.bernoulli(0.5) ? 0.2 : 0.0;
    const int steps = 1 + static_cast<int>(rng.below(6));
    const int batch = 1 + static_cast<int>(rng.below(3));
    const auto problem = testing::make_grad_problem(c, steps, batch, 1000 + static_cast<std::uint64_t>(trial));
    std::string name;
    const double err = testing::max_relative_gradient_error(problem, 1e-5, &name);
    if (err > worst) {
      worst = err;
      worst_where = "trial " + std::to_string(trial) + " " + name;
    }
    ++configs;
  }
  {
    ModelConfig c;
    c.num_layers = 4;
    c.hidden_size = 4;
    c.feature_dim = 4;
    c.context_frames = 2;
    c.dropout_rate = 0.2;
    const auto problem = testing::make_grad_problem(c, 6, 2, 77);
    std::string name;
    const double err = testing::max_relative_gradient_error(problem, 1e-5, &name);
    if (err > worst) {
      worst = err;
      worst_where = "4-layer " + name;
    }
    ++configs;
  }
  const double elapsed = seconds_since(start);
  Outcome o;
  o.pass = worst < 1e-4 && elapsed < 60.0 && configs >= 21;
  o.detail = std::to_string(configs) + " configs, worst rel err " + fmt("%.2e", worst) +
             (worst_where.empty() ? "" : " (" + worst_where + ")") + ", " + fmt("%.1f", elapsed) +
             " s [< 1e-4, < 60 s]";
  return o;
}

Outcome overfit(const Options& opt) {
  const auto start = Clock::now();
  const fs::path dir = opt.work / "overfit";
  fs::remove_all(dir);
  auto manifest = generate_synthetic_dataset(dir, {.seed = 11, .n_utterances = 8, .n_speakers = 4, .seconds = 3.0});
  for (auto& e : manifest.entries) e.split = Split::kTrain;
  const Dataset ds = build_dataset(manifest, BuildOptions{.seed = 11});
  if (ds.utterances.size() != 8) return {false, "synthetic dataset has " + std::to_string(ds.utterances.size()) + " utterances"};

  TrainConfig tc;
  tc.num_layers = 4;
  tc.hidden_size = 64;
  tc.dropout_rate = 0.0;
  tc.batch_size = 8;
  tc.seed = 5;
  const GridPoint point{40, 5};
  const ModelConfig mc = tc.model_config(point);

  LstmModel model{mc, init_params(mc, tc.seed)};
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(kLandmarkDim);
  double n = 0.0;
  for (const auto& u : ds.utterances) {
    for (const auto& f : u.targets.frames) {
      mean += f.flat();
      n += 1.0;
    }
  }
  model.params.head_bias = mean / n;

  const auto chunks = split_into_chunks(ds.utterances);
  const auto stacked = stack_all(ds.utterances, point.context);
  const TrainingBatch batch = make_batch(ds.utterances, stacked, chunks, mc.delay_frames, kSequenceFrames);
  AdamState adam = AdamState::for_params(mc);
  Rng rng(6);

  const double target = 1e-3;
  const int max_steps = 2000;
  std::vector<double> losses;
  for (int step = 0; step < max_steps; ++step) {
    losses.push_back(train_step(model, adam, batch, rng, tc.clip_norm, tc.micro_batch).loss);
    // Stop once comfortably below the target; the final loss is measured below.
    if (losses.back() < 0.5 * target) break;
  }
  const auto fwd = forward_sequence(batch.inputs, model.params, mc);
  const double final_mse = masked_mse(fwd.outputs, batch.targets, batch.mask).loss;

  // Smoothed curve: means over consecutive blocks of 5% of the steps taken.
  const std::size_t block = std::max<std::size_t>(1, losses.size() / 20);
  std::vector<double> smooth;
  for (std::size_t s = 0; s + block <= losses.size(); s += block) {
    double acc = 0.0;
    for (std::size_t k = s; k < s + block; ++k) acc += losses[k];
    smooth.push_back(acc / static_cast<double>(block));
  }
  bool monotone = true;
  for (std::size_t k = 1; k < smooth.size(); ++k) monotone = monotone && smooth[k] <= smooth[k - 1];

  const double elapsed = seconds_since(start);
  Outcome o;
  o.pass = final_mse < target && monotone && elapsed < 300.0 && losses.size() <= static_cast<std::size_t>(max_steps);
  o.detail = "4x64 " + point.id() + ", " + std::to_string(losses.size()) + " steps, loss " +
             fmt("%.3e", losses.front()) + " -> " + fmt("%.3e", final_mse) + ", smoothed " +
             (monotone ? "monotone" : "NOT monotone") + ", " + fmt("%.1f", elapsed) +
             " s [< 1e-3, <= 2000 steps, < 300 s]";
  return o;
}

Outcome alignment_exactness() {
  Rng rng(31);
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    LandmarkSequence seq;
    seq.frames.push_back(testing::random_frame(rng, rng.uniform(-50.0, 50.0), rng.uniform(100.0, 700.0)));
    seq.frames.push_back(testing::random_frame(rng));
    const auto aligned = align_sequence(seq);
    worst = std::max({worst, (aligned.frames[0].point(kRightEyeOuter) - canonical_pin_left()).norm(),
                      (aligned.frames[0].point(kLeftEyeOuter) - canonical_pin_right()).norm()});
  }
  return {worst < 1e-6, "100 frames, worst corner error " + fmt("%.2e", worst) + " [< 1e-6]"};
}

Outcome identity_anchors() {
  Rng rng(41);
  const MeanFace mean{testing::random_frame(rng), 1};
  double worst0 = 0.0;
  for (int k = 0; k < 20; ++k) {
    LandmarkSequence seq;
    for (int t = 0; t < 5; ++t) seq.frames.push_back(testing::random_frame(rng));
    worst0 = std::max(worst0, testing::max_abs_diff(remove_identity(seq, mean).frames[0], mean.shape));
  }

  LandmarkSequence constant;
  constant.frames.assign(6, testing::random_frame(rng));
  double worst_const = 0.0;
  for (const auto& f : remove_identity(constant, mean).frames) {
    worst_const = std::max(worst_const, testing::max_abs_diff(f, mean.shape));
  }

  LandmarkFrame f0;
  LandmarkFrame f1;
  const Point2 d(0.02, 0.01);
  for (int i = 0; i < kNumLandmarks; ++i) {
    f0.set_point(i, 2.0 * mean.shape.point(i));
    f1.set_point(i, f0.point(i) + d);
  }
  LandmarkSequence scaled;
  scaled.frames = {f0, f1};
  const auto out = remove_identity(scaled, mean);
  double worst_scaled = 0.0;
  for (int i = 0; i < kNumLandmarks; ++i) {
    worst_scaled = std::max(worst_scaled, (out.frames[1].point(i) - (mean.shape.point(i) + 0.5 * d)).norm());
  }
  const double worst = std::max({worst0, worst_const, worst_scaled});
  return {worst < 1e-9, "frame0 " + fmt("%.1e", worst0) + ", constant " + fmt("%.1e", worst_const) +
                            ", scale-2 " + fmt("%.1e", worst_scaled) + " [< 1e-9]"};
}

Outcome feature_pipeline() {
  std::vector<double> tone(3 * 44100);
  for (std::size_t i = 0; i < tone.size(); ++i) tone[i] = 0.3 * std::sin(0.05 * static_cast<double>(i));
  const auto frames = extract_features(AudioClip(tone, 44100.0)).num_frames();

  const AudioClip silence(std::vector<double>(3 * 44100, 0.0), 44100.0);
  const auto spec = log_mel_spectrogram(silence, MelFilterbank());
  const bool floor_ok = (spec.frames.array() == std::log(kLogFloor)).all();
  const bool zeros_ok = extract_features(silence).frames.isZero(0.0);

  Rng rng(51);
  double worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    const Eigen::MatrixXd x = testing::random_matrix(rng, 75, 64, 10.0);
    const Eigen::MatrixXd y = testing::random_matrix(rng, 75, 64, 10.0);
    const double a = rng.uniform(-2.0, 2.0);
    const double b = rng.uniform(-2.0, 2.0);
    const Eigen::MatrixXd lhs = temporal_differences({a * x + b * y, kFrameRate}).frames;
    const Eigen::MatrixXd rhs = a * temporal_differences({x, kFrameRate}).frames +
                                b * temporal_differences({y, kFrameRate}).frames;
    worst = std::max(worst, (lhs - rhs).cwiseAbs().maxCoeff());
  }
  return {frames == 75 && floor_ok && zeros_ok && worst < 1e-12,
          std::to_string(frames) + " frames for 3 s, silence floor " + (floor_ok ? "ok" : "BAD") +
              ", silence deltas " + (zeros_ok ? "zero" : "NONZERO") + ", linearity " + fmt("%.1e", worst) +
              " [75, < 1e-12]"};
}

std::vector<EvalRow> reference_rows() {
  return {{"D0-C3", 0.0954, 0.0045, 0.0073},  {"D0-C5", 0.0945, 0.0042, 0.0071},
          {"D40-C3", 0.0932, 0.0039, 0.0068}, {"D40-C5", 0.0921, 0.0032, 0.0065},
          {"D80-C3", 0.0946, 0.0044, 0.0072}, {"D80-C5", 0.0944, 0.0043, 0.0069}};
}

Outcome evaluation_identities() {
  Rng rng(61);
  std::vector<LandmarkSequence> gt(3);
  for (auto& s : gt) {
    for (int t = 0; t < 20; ++t) s.frames.push_back(testing::random_frame(rng));
  }
  const EvalRow same = evaluate_sequences(gt, gt, "gt");
  std::vector<LandmarkSequence> pd = gt;
  for (auto& s : pd) {
    for (auto& f : s.frames) f = LandmarkFrame((f.points().array() + 0.01).matrix());
  }
  const EvalRow shifted = evaluate_sequences(gt, pd, "pd");
  const bool zero = same.rmse_position == 0.0 && same.rmse_first_diff == 0.0 && same.rmse_second_diff == 0.0;
  const bool offset = std::abs(shifted.rmse_position - 0.01) < 1e-12 && shifted.rmse_first_diff < 1e-12 &&
                      shifted.rmse_second_diff < 1e-12;
  bool invariant = true;
  for (double scale : {1e-3, 0.7, 2.0, 1e4}) {
    auto rows = reference_rows();
    for (auto& r : rows) {
      r.rmse_position *= scale;
      r.rmse_first_diff *= scale;
      r.rmse_second_diff *= scale;
    }
    invariant = invariant && select_model(rows) == select_model(reference_rows());
  }
  return {zero && offset && invariant,
          std::string("self (0,0,0) ") + (zero ? "ok" : "BAD") + ", offset 0.01 -> " +
              fmt("%.6f", shifted.rmse_position) + "/" + fmt("%.1e", shifted.rmse_first_diff) + "/" +
              fmt("%.1e", shifted.rmse_second_diff) + ", scaling invariance " + (invariant ? "ok" : "BAD")};
}

Outcome model_selection() {
  const std::string chosen = select_model(reference_rows());
  return {chosen == "D40-C5", "reference rows -> " + chosen + " [D40-C5]"};
}

// --- CLI-driven criteria ----------------------------------------------------

int run(const std::string& cli, const std::string& args, const fs::path& log) {
  const std::string cmd = "\"" + cli + "\" " + args + " >>\"" + log.string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// synthdata -> preprocess -> train -> generate in `dir`; returns the failing
// step or an empty string.
std::string pipeline(const std::string& cli, const fs::path& dir, const std::string& train_flags) {
  fs::remove_all(dir);
  fs::create_directories(dir);
  const fs::path log = dir / "log.txt";
  const std::string d = dir.string();
  if (run(cli, "--seed 19 synthdata --utterances 6 --speakers 3 --out " + d + "/syn", log) != 0) return "synthdata";
  if (run(cli, "--seed 19 --threads 2 preprocess --manifest " + d + "/syn/manifest.tsv --out " + d + "/data", log) != 0) {
    return "preprocess";
  }
  if (run(cli, "--seed 19 train --data " + d + "/data --out " + d + "/models --grid D40-C5 " + train_flags, log) != 0) {
    return "train";
  }
  if (run(cli, "generate --checkpoint " + d + "/models/D40-C5.lark --wav " + d + "/syn/audio/utt_0000.wav --out " + d +
                   "/generated.txt",
          log) != 0) {
    return "generate";
  }
  return {};
}

Outcome end_to_end_determinism(const Options& opt) {
  if (opt.cli.empty()) return {false, "no --cli binary given"};
  const std::string flags = "--epochs 3 --layers 2 --hidden-size 16 --batch-size 4";
  const fs::path a = opt.work / "e2e_a";
  const fs::path b = opt.work / "e2e_b";
  for (const auto& dir : {a, b}) {
    const std::string failed = pipeline(opt.cli, dir, flags);
    if (!failed.empty()) return {false, dir.filename().string() + ": step '" + failed + "' failed, see " + (dir / "log.txt").string()};
  }
  const auto ga = testing::read_bytes(a / "generated.txt");
  const auto gb = testing::read_bytes(b / "generated.txt");
  const bool same_output = !ga.empty() && ga == gb;
  const bool same_ckpt = testing::read_bytes(a / "models/D40-C5.lark") == testing::read_bytes(b / "models/D40-C5.lark");
  const bool same_report = testing::read_bytes(a / "models/report.kv") == testing::read_bytes(b / "models/report.kv");
  return {same_output && same_ckpt && same_report,
          std::string("landmarks ") + (same_output ? "identical" : "DIFFER") + " (" + std::to_string(ga.size()) +
              " bytes), checkpoints " + (same_ckpt ? "identical" : "DIFFER") + ", reports " +
              (same_report ? "identical" : "DIFFER")};
}

Outcome real_time(const Options& opt) {
  if (opt.cli.empty()) return {false, "no --cli binary given"};
  const fs::path dir = opt.work / "realtime";
  // Full-size model: 4 layers x 256 units, 5-frame context, one short epoch.
  const std::string failed =
      pipeline(opt.cli, dir, "--epochs 1 --layers 4 --hidden-size 256 --batch-size 8");
  if (!failed.empty()) return {false, "step '" + failed + "' failed, see " + (dir / "log.txt").string()};

  const std::string d = dir.string();
  const auto start = Clock::now();
  const int rc = run(opt.cli,
                     "generate --checkpoint " + d + "/models/D40-C5.lark --wav " + d +
                         "/syn/audio/utt_0001.wav --out " + d + "/timed.txt --timing-file " + d + "/timing.txt",
                     dir / "log.txt");
  const double wall = seconds_since(start);
  if (rc != 0) return {false, "generate exited with " + std::to_string(rc)};
  const LandmarkSequence out = read_canonical_sequence(dir / "timed.txt");
  const std::string timing = testing::read_text(dir / "timing.txt");
  double inference = std::numeric_limits<double>::quiet_NaN();
  if (const auto at = timing.find("inference_seconds = "); at != std::string::npos) {
    inference = std::stod(timing.substr(at + 20));
  }
  return {wall < 3.0 && out.size() == 75,
          "3 s clip, 4x256 D40-C5: " + std::to_string(out.size()) + " frames, inference " + fmt("%.3f", inference) +
              " s, process wall " + fmt("%.3f", wall) + " s [< 3 s]"};
}

Outcome paper_table_reproduction() {
  Outcome o;
  o.skipped = true;
  o.pass = true;
  o.detail = "non-gating; needs the original corpora, which are not part of this repository";
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  Options opt;
  for (int i = 1; i + 1 < argc; i += 2) {
    const std::string flag = argv[i];
    if (flag == "--cli") opt.cli = argv[i + 1];
    else if (flag == "--work") opt.work = argv[i + 1];
    else if (flag == "--only") opt.only = argv[i + 1];
    else {
      std::fprintf(stderr, "usage: %s [--cli path] [--work dir] [--only name]\n", argv[0]);
      return 2;
    }
  }
  fs::create_directories(opt.work);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"paper_table_reproduction", paper_table_reproduction},
      {"gradient_oracle", gradient_oracle},
      {"overfit", [&] { return overfit(opt); }},
      {"alignment_exactness", alignment_exactness},
      {"identity_removal_anchors", identity_anchors},
      {"feature_pipeline", feature_pipeline},
      {"evaluation_identities", evaluation_identities},
      {"end_to_end_determinism", [&] { return end_to_end_determinism(opt); }},
      {"real_time_generate", [&] { return real_time(opt); }},
      {"model_selection", model_selection},
  };

  int failures = 0;
  for (const auto& [name, check] : criteria) {
    if (!opt.only.empty() && opt.only != name) continue;
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const char* tag = o.skipped ? "SKIP" : (o.pass ? "PASS" : "FAIL");
    if (!o.pass) ++failures;
    std::printf("%s  %-26s %s\n", tag, name.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%s: %d criteria failed\n", failures == 0 ? "ACCEPTED" : "REJECTED", failures);
  return failures == 0 ? 0 : 1;
}
