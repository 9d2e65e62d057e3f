#include "lark/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "lark/archive.hpp"
#include "lark/audio.hpp"
#include "lark/errors.hpp"
#include "lark/landmark_io.hpp"
#include "lark/parallel.hpp"
#include "lark/rng.hpp"

namespace lark {
namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t at = line.find('\t', start);
    out.push_back(line.substr(start, at == std::string_view::npos ? std::string_view::npos : at - start));
    if (at == std::string_view::npos) break;
    start = at + 1;
  }
  return out;
}

std::string_view strip_cr(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.remove_suffix(1);
  return s;
}

struct AlignedEntry {
  FeatureSequence features;
  LandmarkSequence aligned;
};

AlignedEntry load_aligned(const ManifestEntry& entry) {
  const AudioClip clip = load_wav(entry.audio_path);
  FeatureSequence features = extract_features(clip);

  const LandmarkFile file = read_landmark_file(entry.landmark_path);
  LandmarkSequence pixels = resample_frame_rate(file.pixels, kFrameRate);
  LandmarkSequence aligned = align_sequence(normalize(pixels));

  const auto n_audio = static_cast<long>(features.num_frames());
  const auto n_marks = static_cast<long>(aligned.size());
  if (std::abs(n_audio - n_marks) > kMaxFrameMismatch) {
    throw Error(ErrorKind::kShape, "frame count mismatch: audio has " + std::to_string(n_audio) +
                                       " frames, landmarks have " + std::to_string(n_marks));
  }
  const long n = std::min(n_audio, n_marks);
  features.frames.conservativeResize(n, Eigen::NoChange);
  aligned.frames.resize(static_cast<std::size_t>(n));
  return {std::move(features), std::move(aligned)};
}

std::string utterance_file_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "utt_%05zu.lark", i);
  return buf;
}

}  // namespace

std::string_view to_string(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kValidation: return "val";
    case Split::kTest: return "test";
    case Split::kAuto: return "auto";
  }
  return "auto";
}

Split parse_split(std::string_view text) {
  if (text == "train") return Split::kTrain;
  if (text == "val" || text == "validation") return Split::kValidation;
  if (text == "test") return Split::kTest;
  if (text == "auto") return Split::kAuto;
  throw Error(ErrorKind::kFormat, "unknown split tag '" + std::string(text) + "'");
}

DatasetManifest parse_manifest(std::string_view text, const std::filesystem::path& base_dir) {
  DatasetManifest m;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t nl = text.find('\n', pos);
    const std::string_view line =
        strip_cr(text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos));
    pos = nl == std::string_view::npos ? text.size() : nl + 1;
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    const auto f = split_tabs(line);
    if (f.size() != 4) {
      throw Error(ErrorKind::kFormat, "manifest line " + std::to_string(line_no) +
                                          ": expected 4 tab-separated fields, got " +
                                          std::to_string(f.size()));
    }
    ManifestEntry e;
    e.audio_path = f[0];
    e.landmark_path = f[1];
    if (e.audio_path.is_relative()) e.audio_path = base_dir / e.audio_path;
    if (e.landmark_path.is_relative()) e.landmark_path = base_dir / e.landmark_path;
    e.speaker = std::string(f[2]);
    e.split = parse_split(f[3]);
    m.entries.push_back(std::move(e));
  }
  return m;
}

DatasetManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open manifest " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_manifest(ss.str(), path.parent_path());
}

std::string format_manifest(const DatasetManifest& manifest) {
  std::string out;
  for (const auto& e : manifest.entries) {
    out += e.audio_path.generic_string() + '\t' + e.landmark_path.generic_string() + '\t' +
           e.speaker + '\t' + std::string(to_string(e.split)) + '\n';
  }
  return out;
}

std::vector<Split> assign_splits(const DatasetManifest& manifest, std::uint64_t seed) {
  std::vector<Split> out;
  std::map<std::string, std::vector<std::size_t>> by_speaker;
  std::size_t n_auto = 0;
  for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
    const auto& e = manifest.entries[i];
    out.push_back(e.split == Split::kAuto ? Split::kTrain : e.split);
    if (e.split == Split::kAuto) {
      by_speaker[e.speaker].push_back(i);
      ++n_auto;
    }
  }
  if (n_auto < 2) return out;

  Rng rng(seed);
  std::vector<std::vector<std::size_t>> pools;
  for (auto& [speaker, idx] : by_speaker) {
    rng.shuffle(idx.begin(), idx.end());
    pools.push_back(idx);
  }
  rng.shuffle(pools.begin(), pools.end());

  const auto n_val = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(0.1 * static_cast<double>(n_auto))));
  std::size_t taken = 0;
  for (std::size_t round = 0; taken < n_val; ++round) {
    bool any = false;
    for (auto& pool : pools) {
      // Keep at least one training utterance per speaker.
      if (round + 1 < pool.size() && taken < n_val) {
        out[pool[round]] = Split::kValidation;
        ++taken;
        any = true;
      }
    }
    if (!any) break;
  }
  if (taken == 0) out[pools.front().front()] = Split::kValidation;  // only single-utterance speakers
  return out;
}

Dataset build_dataset(const DatasetManifest& manifest, const BuildOptions& options) {
  if (manifest.entries.empty()) throw Error(ErrorKind::kEmptyInput, "empty manifest");
  const std::size_t n = manifest.entries.size();
  const std::vector<Split> splits = assign_splits(manifest, options.seed);

  std::vector<std::optional<AlignedEntry>> loaded(n);
  std::vector<std::string> failures(n);
  parallel_for(n, options.threads, [&](std::size_t i) {
    try {
      loaded[i] = load_aligned(manifest.entries[i]);
    } catch (const std::exception& e) {
      failures[i] = e.what();
    }
  });

  Dataset ds;
  for (std::size_t i = 0; i < n; ++i) {
    if (!loaded[i]) ds.rejected.push_back({i, failures[i]});
  }
  if (ds.rejected.size() == n) {
    std::string msg = "all " + std::to_string(n) + " manifest entries failed";
    for (const auto& d : ds.rejected) msg += "\n  entry " + std::to_string(d.manifest_index) + ": " + d.message;
    throw Error(ErrorKind::kEmptyInput, msg);
  }

  if (options.mean_face) {
    ds.mean_face = *options.mean_face;
  } else {
    std::vector<LandmarkSequence> train;
    for (std::size_t i = 0; i < n; ++i) {
      if (loaded[i] && splits[i] == Split::kTrain) train.push_back(loaded[i]->aligned);
    }
    if (train.empty()) {
      throw Error(ErrorKind::kEmptyInput, "no usable training entries to compute the mean face from");
    }
    ds.mean_face = compute_mean_face(train);
  }

  std::vector<std::optional<Utterance>> built(n);
  parallel_for(n, options.threads, [&](std::size_t i) {
    if (!loaded[i]) return;
    try {
      Utterance u;
      u.manifest_index = i;
      u.speaker = manifest.entries[i].speaker;
      u.split = splits[i];
      u.audio_path = manifest.entries[i].audio_path;
      u.landmark_path = manifest.entries[i].landmark_path;
      u.features = std::move(loaded[i]->features);
      u.targets = remove_identity(loaded[i]->aligned, ds.mean_face);
      built[i] = std::move(u);
    } catch (const std::exception& e) {
      failures[i] = e.what();
    }
  });
  for (std::size_t i = 0; i < n; ++i) {
    if (built[i]) {
      ds.utterances.push_back(std::move(*built[i]));
    } else if (loaded[i]) {
      ds.rejected.push_back({i, failures[i]});
    }
  }
  std::sort(ds.rejected.begin(), ds.rejected.end(),
            [](const auto& a, const auto& b) { return a.manifest_index < b.manifest_index; });
  return ds;
}

std::vector<Chunk> split_into_chunks(const std::vector<Utterance>& utterances, Split split,
                                     Eigen::Index chunk_frames) {
  std::vector<Chunk> chunks;
  for (std::size_t u = 0; u < utterances.size(); ++u) {
    if (utterances[u].split != split) continue;
    const Eigen::Index T = utterances[u].features.num_frames();
    for (Eigen::Index start = 0; start < T; start += chunk_frames) {
      chunks.push_back({u, start, std::min(chunk_frames, T - start)});
    }
  }
  return chunks;
}

void save_dataset(const std::filesystem::path& dir, const Dataset& ds) {
  std::filesystem::create_directories(dir);
  std::string index = "# file\tspeaker\tsplit\tframes\taudio\tlandmarks\n";
  for (std::size_t i = 0; i < ds.utterances.size(); ++i) {
    const Utterance& u = ds.utterances[i];
    Archive a;
    a.kind = ArchiveKind::kTensors;
    a.meta = {{"speaker", u.speaker},
              {"split", std::string(to_string(u.split))},
              {"manifest_index", std::to_string(u.manifest_index)},
              {"audio", u.audio_path.generic_string()},
              {"landmarks", u.landmark_path.generic_string()}};
    a.tensors.push_back(NamedTensor::from_matrix("features", u.features.frames));
    Eigen::MatrixXd targets(static_cast<Eigen::Index>(u.targets.size()), kLandmarkDim);
    for (std::size_t t = 0; t < u.targets.size(); ++t) {
      targets.row(static_cast<Eigen::Index>(t)) = u.targets.frames[t].flat().transpose();
    }
    a.tensors.push_back(NamedTensor::from_matrix("targets", targets));
    const std::string name = utterance_file_name(i);
    write_archive(dir / name, a);
    index += name + '\t' + u.speaker + '\t' + std::string(to_string(u.split)) + '\t' +
             std::to_string(u.targets.size()) + '\t' + u.audio_path.generic_string() + '\t' +
             u.landmark_path.generic_string() + '\n';
  }
  std::ofstream out(dir / "index.tsv", std::ios::binary);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + (dir / "index.tsv").string());
  out << index;
  write_mean_face(dir / "mean_face.txt", ds.mean_face);
}

Dataset load_dataset(const std::filesystem::path& dir) {
  std::ifstream in(dir / "index.tsv");
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + (dir / "index.tsv").string());
  Dataset ds;
  ds.mean_face = read_mean_face(dir / "mean_face.txt");
  std::string line;
  while (std::getline(in, line)) {
    const std::string_view view = strip_cr(line);
    if (view.empty() || view.front() == '#') continue;
    const auto f = split_tabs(view);
    if (f.size() < 3) throw Error(ErrorKind::kFormat, "bad dataset index line: " + line);
    const Archive a = read_archive(dir / std::string(f[0]));
    Utterance u;
    u.speaker = a.meta_value("speaker");
    u.split = parse_split(a.meta_value("split"));
    u.manifest_index = static_cast<std::size_t>(std::stoull(a.meta_value("manifest_index")));
    u.audio_path = a.meta_value("audio");
    u.landmark_path = a.meta_value("landmarks");
    u.features.frames = a.tensor("features").to_matrix();
    u.features.frame_rate = kFrameRate;
    const Eigen::MatrixXd targets = a.tensor("targets").to_matrix();
    if (targets.cols() != kLandmarkDim || targets.rows() != u.features.frames.rows()) {
      throw Error(ErrorKind::kFormat, std::string(f[0]) + ": features/targets shape mismatch");
    }
    u.targets.frame_rate = kFrameRate;
    for (Eigen::Index t = 0; t < targets.rows(); ++t) {
      u.targets.frames.push_back(LandmarkFrame::from_flat(Eigen::VectorXd(targets.row(t).transpose())));
    }
    ds.utterances.push_back(std::move(u));
  }
  if (ds.utterances.empty()) throw Error(ErrorKind::kEmptyInput, "dataset directory has no utterances");
  return ds;
}

}  // namespace lark
