#include "commands.hpp"

#include <spdlog/spdlog.h>

#include <chrono>
#include <filesystem>
#include <fstream>

#include "lark/audio.hpp"
#include "lark/checkpoint.hpp"
#include "lark/dataset.hpp"
#include "lark/errors.hpp"
#include "lark/evaluation.hpp"
#include "lark/features.hpp"
#include "lark/landmark_io.hpp"
#include "lark/render.hpp"
#include "lark/synthetic.hpp"
#include "lark/training.hpp"

namespace lark::cli {
namespace {

namespace fs = std::filesystem;

void require(const std::string& value, const char* flag) {
  if (value.empty()) throw Error(ErrorKind::kArgument, std::string("missing required option ") + flag);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  out << text;
}

// Files with a square canonical frame are read as-is; source-video files are
// scaled by their longer side so the face keeps its aspect ratio.
LandmarkSequence read_for_render(const fs::path& path) {
  const LandmarkFile f = read_landmark_file(path);
  return normalize(f.pixels, std::max(f.width, f.height));
}

}  // namespace

int cmd_preprocess(const RunConfig& config) {
  require(config.manifest, "--manifest");
  require(config.out_dir, "--out");
  const DatasetManifest manifest = read_manifest(config.manifest);
  if (manifest.entries.empty()) throw Error(ErrorKind::kEmptyInput, "empty manifest");

  BuildOptions options;
  options.seed = config.seed;
  options.threads = config.threads;
  if (!config.mean_face.empty()) options.mean_face = read_mean_face(config.mean_face);

  const Dataset ds = build_dataset(manifest, options);
  for (const auto& d : ds.rejected) {
    spdlog::warn("entry {} rejected: {}", d.manifest_index, d.message);
  }
  save_dataset(config.out_dir, ds);
  spdlog::info("preprocessed {} of {} entries into {} (mean face over {} frames)", ds.utterances.size(),
               manifest.entries.size(), config.out_dir, ds.mean_face.source_count);
  return kOk;
}

int cmd_train(const RunConfig& config) {
  require(config.data_dir, "--data");
  require(config.out_dir, "--out");
  const Dataset ds = load_dataset(config.data_dir);
  fs::create_directories(config.out_dir);

  bool has_val = false;
  for (const auto& u : ds.utterances) has_val = has_val || u.split == Split::kValidation;
  const Split eval_split = has_val ? Split::kValidation : Split::kTrain;
  if (!has_val) spdlog::warn("no validation utterances; reporting on the training split");

  const auto results = train(ds, config.train, [](const GridPoint& p, int epoch, double loss) {
    spdlog::info("{} epoch {} loss {:.6g}", p.id(), epoch + 1, loss);
  });

  EvalReport report;
  for (const auto& r : results) {
    const std::string id = r.point.id();
    std::string history = "# epoch\tloss\n";
    for (std::size_t e = 0; e < r.epoch_loss.size(); ++e) {
      history += std::to_string(e + 1) + '\t' + format_double(r.epoch_loss[e]) + '\n';
    }
    write_text(fs::path(config.out_dir) / (id + ".loss.tsv"), history);
    if (r.failed) {
      spdlog::error("grid point {} failed: {}", id, r.diagnostic);
      continue;
    }
    save_checkpoint(fs::path(config.out_dir) / (id + ".lark"), r.checkpoint);
    report.rows.push_back(evaluate(r.checkpoint.model, ds, eval_split));
  }
  if (report.rows.empty()) throw Error(ErrorKind::kNumeric, "every grid point failed");
  report.selected = select_model(report.rows);

  const std::string table = format_report_table(report);
  write_text(fs::path(config.out_dir) / "report.txt", table);
  write_text(fs::path(config.out_dir) / "report.kv", format_report_kv(report));
  std::fputs(table.c_str(), stdout);
  return kOk;
}

int cmd_evaluate(const RunConfig& config, const std::string& split) {
  require(config.checkpoint, "--checkpoint");
  require(config.data_dir, "--data");
  const Checkpoint ck = load_checkpoint(config.checkpoint);
  const Dataset ds = load_dataset(config.data_dir);
  EvalReport report;
  report.rows.push_back(evaluate(ck.model, ds, parse_split(split)));
  report.selected = report.rows.front().model_id;
  std::fputs(format_report_table(report).c_str(), stdout);
  if (!config.output.empty()) write_text(config.output, format_report_kv(report));
  return kOk;
}

int cmd_generate(const RunConfig& config, const GenerateExtras& extras) {
  require(config.checkpoint, "--checkpoint");
  require(config.wav, "--wav");
  require(config.output, "--out");
  const Checkpoint ck = load_checkpoint(config.checkpoint);
  const AudioClip clip = load_wav(config.wav);

  const auto start = std::chrono::steady_clock::now();
  const PredictedSequence pred = predict(extract_features(clip), ck.model);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  write_canonical_sequence(config.output, pred.frames);
  spdlog::info("generated {} frames for {:.3f} s of audio in {:.3f} s ({:.1f}x real time)", pred.frames.size(),
               clip.duration_seconds(), seconds, clip.duration_seconds() / std::max(seconds, 1e-9));
  if (extras.timing_file) {
    write_text(*extras.timing_file, "audio_seconds = " + format_double(clip.duration_seconds()) +
                                        "\ninference_seconds = " + format_double(seconds) + "\n");
  }
  if (!config.render_dir.empty()) {
    RenderOptions opts;
    opts.canvas = config.canvas;
    render_sequence(pred.frames, config.render_dir, opts, nullptr, config.threads);
  }
  return kOk;
}

int cmd_render(const RunConfig& config) {
  require(config.landmarks, "--landmarks");
  require(config.out_dir, "--out");
  const LandmarkSequence seq = read_for_render(config.landmarks);
  RenderOptions opts;
  opts.canvas = config.canvas;
  std::optional<LandmarkSequence> overlay;
  if (!config.overlay.empty()) overlay = read_for_render(config.overlay);
  const auto files = render_sequence(seq, config.out_dir, opts, overlay ? &*overlay : nullptr, config.threads);
  spdlog::info("rendered {} frames into {}", files.size(), config.out_dir);
  return kOk;
}

int cmd_synthdata(const RunConfig& config) {
  require(config.out_dir, "--out");
  SyntheticOptions opts;
  opts.seed = config.seed;
  opts.n_utterances = config.n_utterances;
  opts.n_speakers = config.n_speakers;
  opts.seconds = config.seconds;
  const DatasetManifest m = generate_synthetic_dataset(config.out_dir, opts);
  spdlog::info("wrote {} synthetic utterances and manifest.tsv to {}", m.entries.size(), config.out_dir);
  return kOk;
}

}  // namespace lark::cli
