#include <charconv>
#include <fstream>
#include <sstream>
#include <vector>

#include "lark/errors.hpp"
#include "lark/landmark_io.hpp"

namespace lark {
namespace {

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t at = line.find(sep, start);
    out.push_back(line.substr(start, at == std::string_view::npos ? std::string_view::npos : at - start));
    if (at == std::string_view::npos) break;
    start = at + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

double parse_number(std::string_view field, std::size_t line_no) {
  field = trim(field);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw Error(ErrorKind::kFormat, "line " + std::to_string(line_no) + ": bad number '" +
                                        std::string(field) + "'");
  }
  return v;
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) throw Error(ErrorKind::kFormat, "cannot format number");
  return std::string(buf, ptr);
}

LandmarkFile parse_landmark_text(std::string_view text) {
  LandmarkFile file;
  bool have_header = false;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string_view line =
        trim(text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos));
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (line.empty()) continue;

    if (!have_header) {
      if (line.front() != '#') {
        throw Error(ErrorKind::kFormat, "missing '# width,height,fps' header");
      }
      const auto fields = split(trim(line.substr(1)), ',');
      if (fields.size() != 3 && fields.size() != 5) {
        throw Error(ErrorKind::kFormat, "header must be '# width,height,fps'");
      }
      file.width = parse_number(fields[0], line_no);
      file.height = parse_number(fields[1], line_no);
      file.pixels.frame_rate = parse_number(fields[2], line_no);
      if (!(file.width > 0) || !(file.height > 0) || !(file.pixels.frame_rate > 0)) {
        throw Error(ErrorKind::kFormat, "header values must be positive");
      }
      if (fields.size() == 5) {
        if (trim(fields[3]) != "mean_face") {
          throw Error(ErrorKind::kFormat, "unknown header flag '" + std::string(fields[3]) + "'");
        }
        file.is_mean_face = true;
        file.source_count = static_cast<std::size_t>(parse_number(fields[4], line_no));
      }
      have_header = true;
      continue;
    }
    if (line.front() == '#') continue;

    const auto fields = split(line, ',');
    if (fields.size() != static_cast<std::size_t>(kLandmarkDim) + 1) {
      throw Error(ErrorKind::kFormat, "line " + std::to_string(line_no) + ": expected 137 fields, got " +
                                          std::to_string(fields.size()));
    }
    const double index = parse_number(fields[0], line_no);
    if (index != static_cast<double>(file.pixels.size())) {
      throw Error(ErrorKind::kFormat, "line " + std::to_string(line_no) + ": frame index " +
                                          std::string(trim(fields[0])) + " out of order");
    }
    std::vector<double> xy(static_cast<std::size_t>(kLandmarkDim));
    for (std::size_t i = 0; i < xy.size(); ++i) xy[i] = parse_number(fields[i + 1], line_no);
    LandmarkFrame frame = LandmarkFrame::from_flat(xy);
    if (!frame.all_finite()) {
      throw Error(ErrorKind::kFormat, "line " + std::to_string(line_no) + ": non-finite coordinate");
    }
    file.pixels.frames.push_back(frame);
  }
  if (!have_header) throw Error(ErrorKind::kFormat, "missing '# width,height,fps' header");
  if (file.pixels.empty()) throw Error(ErrorKind::kEmptyInput, "landmark file has no frames");
  return file;
}

LandmarkFile read_landmark_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_landmark_text(ss.str());
  } catch (const Error& e) {
    throw e.prefixed(path.string());
  }
}

std::string format_landmark_text(const LandmarkFile& file) {
  std::string out = "# " + format_double(file.width) + "," + format_double(file.height) + "," +
                    format_double(file.pixels.frame_rate);
  if (file.is_mean_face) out += ",mean_face," + std::to_string(file.source_count);
  out += '\n';
  for (std::size_t t = 0; t < file.pixels.size(); ++t) {
    out += std::to_string(t);
    const Eigen::VectorXd xy = file.pixels.frames[t].flat();
    for (Eigen::Index i = 0; i < xy.size(); ++i) {
      out += ',';
      out += format_double(xy[i]);
    }
    out += '\n';
  }
  return out;
}

void write_landmark_file(const std::filesystem::path& path, const LandmarkFile& file) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  out << format_landmark_text(file);
}

void write_canonical_sequence(const std::filesystem::path& path, const LandmarkSequence& normalized) {
  LandmarkFile file;
  file.pixels = denormalize(normalized);
  file.width = kCanonicalSide;
  file.height = kCanonicalSide;
  write_landmark_file(path, file);
}

LandmarkSequence read_canonical_sequence(const std::filesystem::path& path) {
  return normalize(read_landmark_file(path).pixels);
}

void write_mean_face(const std::filesystem::path& path, const MeanFace& normalized) {
  LandmarkFile file;
  file.pixels.frames.push_back(denormalize(normalized.shape));
  file.pixels.frame_rate = 25.0;
  file.width = kCanonicalSide;
  file.height = kCanonicalSide;
  file.is_mean_face = true;
  file.source_count = normalized.source_count;
  write_landmark_file(path, file);
}

MeanFace read_mean_face(const std::filesystem::path& path) {
  const LandmarkFile file = read_landmark_file(path);
  if (!file.is_mean_face || file.pixels.size() != 1) {
    throw Error(ErrorKind::kFormat, path.string() + ": not a mean-face file");
  }
  return MeanFace{normalize(file.pixels.frames.front()), file.source_count};
}

}  // namespace lark
