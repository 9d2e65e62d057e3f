#include "lark/checkpoint.hpp"

#include <charconv>

#include "lark/errors.hpp"
#include "lark/landmark_io.hpp"

namespace lark {
namespace {

int parse_int(const Archive& a, const std::string& key) {
  const std::string& s = a.meta_value(key);
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw Error(ErrorKind::kFormat, "checkpoint key '" + key + "' is not an integer");
  }
  return v;
}

double parse_real(const Archive& a, const std::string& key) {
  const std::string& s = a.meta_value(key);
  double v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw Error(ErrorKind::kFormat, "checkpoint key '" + key + "' is not a number");
  }
  return v;
}

}  // namespace

Archive to_archive(const Checkpoint& ck) {
  const ModelConfig& cfg = ck.model.config;
  Archive a;
  a.kind = ArchiveKind::kCheckpoint;
  a.meta = {
      {"model_id", cfg.model_id()},
      {"num_layers", std::to_string(cfg.num_layers)},
      {"hidden_size", std::to_string(cfg.hidden_size)},
      {"feature_dim", std::to_string(cfg.feature_dim)},
      {"context_frames", std::to_string(cfg.context_frames)},
      {"delay_frames", std::to_string(cfg.delay_frames)},
      {"dropout_rate", format_double(cfg.dropout_rate)},
      {"output_dim", std::to_string(ModelConfig::output_dim())},
      {"canonical_side", format_double(kCanonicalSide)},
      {"pin_left_x", format_double(kPinLeftX)},
      {"pin_right_x", format_double(kPinRightX)},
      {"pin_y", format_double(kPinY)},
      {"mean_face_count", std::to_string(ck.mean_face.source_count)},
  };
  for (const auto& kv : ck.info) a.meta.push_back({"info." + kv.first, kv.second});

  ck.model.params.for_each([&](const std::string& name, Eigen::Map<const Eigen::MatrixXd> t) {
    if (t.cols() == 1 && name.ends_with("bias")) {
      a.tensors.push_back(NamedTensor::from_vector(name, t.col(0)));
    } else {
      a.tensors.push_back(NamedTensor::from_matrix(name, t));
    }
  });
  a.tensors.push_back(NamedTensor::from_matrix("mean_face", ck.mean_face.shape.points()));
  return a;
}

Checkpoint checkpoint_from_archive(const Archive& a) {
  if (a.kind != ArchiveKind::kCheckpoint) {
    throw Error(ErrorKind::kFormat, "archive is not a checkpoint");
  }
  Checkpoint ck;
  ModelConfig& cfg = ck.model.config;
  cfg.num_layers = parse_int(a, "num_layers");
  cfg.hidden_size = parse_int(a, "hidden_size");
  cfg.feature_dim = parse_int(a, "feature_dim");
  cfg.context_frames = parse_int(a, "context_frames");
  cfg.delay_frames = parse_int(a, "delay_frames");
  cfg.dropout_rate = parse_real(a, "dropout_rate");
  if (parse_int(a, "output_dim") != ModelConfig::output_dim()) {
    throw Error(ErrorKind::kFormat, "checkpoint output_dim is not 136");
  }
  if (parse_real(a, "canonical_side") != kCanonicalSide || parse_real(a, "pin_left_x") != kPinLeftX ||
      parse_real(a, "pin_right_x") != kPinRightX || parse_real(a, "pin_y") != kPinY) {
    throw Error(ErrorKind::kFormat, "checkpoint uses a different canonical frame");
  }
  try {
    cfg.validate();
  } catch (const Error& e) {
    throw Error(ErrorKind::kFormat, "checkpoint config invalid: " + e.detail());
  }

  ck.model.params = LstmParams::zeros_like(cfg);
  ck.model.params.for_each([&](const std::string& name, Eigen::Map<Eigen::MatrixXd> t) {
    const Eigen::MatrixXd m = a.tensor(name).to_matrix();
    if (m.rows() != t.rows() || m.cols() != t.cols()) {
      throw Error(ErrorKind::kFormat, "checkpoint tensor " + name + " has wrong shape");
    }
    t = m;
  });
  const Eigen::MatrixXd mean = a.tensor("mean_face").to_matrix();
  if (mean.rows() != kNumLandmarks || mean.cols() != 2) {
    throw Error(ErrorKind::kFormat, "checkpoint mean_face has wrong shape");
  }
  ck.mean_face.shape = LandmarkFrame(mean);
  ck.mean_face.source_count = static_cast<std::size_t>(parse_int(a, "mean_face_count"));
  for (const auto& [k, v] : a.meta) {
    if (k.starts_with("info.")) ck.info.emplace_back(k.substr(5), v);
  }
  return ck;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  write_archive(path, to_archive(checkpoint));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  try {
    return checkpoint_from_archive(read_archive(path));
  } catch (const Error& e) {
    if (e.detail().starts_with(path.string())) throw;
    throw e.prefixed(path.string());
  }
}

}  // namespace lark
