#include "lark/archive.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "lark/errors.hpp"

namespace lark {
namespace {

class Writer {
 public:
  void u32(std::uint32_t v) { put(v, 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  void f64(double v) { put(std::bit_cast<std::uint64_t>(v), 8); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes.insert(bytes.end(), s.begin(), s.end());
  }
  std::vector<unsigned char> bytes;

 private:
  void put(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) bytes.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xFF));
  }
};

class Reader {
 public:
  explicit Reader(std::span<const unsigned char> b) : b_(b) {}
  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  std::uint64_t u64() { return get(8); }
  double f64() { return std::bit_cast<double>(get(8)); }
  std::string str() {
    const std::uint32_t n = u32();
    need(n);
    std::string s(reinterpret_cast<const char*>(b_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == b_.size(); }

 private:
  void need(std::size_t n) const {
    if (n > b_.size() - pos_) throw Error(ErrorKind::kFormat, "archive truncated");
  }
  std::uint64_t get(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(b_[pos_ + static_cast<std::size_t>(i)]) << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }
  std::span<const unsigned char> b_;
  std::size_t pos_ = 0;
};

}  // namespace

NamedTensor NamedTensor::from_matrix(std::string name, const Eigen::MatrixXd& m) {
  NamedTensor t;
  t.name = std::move(name);
  t.shape = {static_cast<std::uint64_t>(m.rows()), static_cast<std::uint64_t>(m.cols())};
  t.data.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) t.data.push_back(m(i, j));
  }
  return t;
}

NamedTensor NamedTensor::from_vector(std::string name, const Eigen::VectorXd& v) {
  NamedTensor t;
  t.name = std::move(name);
  t.shape = {static_cast<std::uint64_t>(v.size())};
  t.data.assign(v.data(), v.data() + v.size());
  return t;
}

Eigen::MatrixXd NamedTensor::to_matrix() const {
  if (shape.empty() || shape.size() > 2) {
    throw Error(ErrorKind::kShape, "tensor " + name + " is not rank 1 or 2");
  }
  const auto rows = static_cast<Eigen::Index>(shape[0]);
  const auto cols = static_cast<Eigen::Index>(shape.size() == 2 ? shape[1] : 1);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = data[static_cast<std::size_t>(i * cols + j)];
  }
  return m;
}

const std::string* Archive::find_meta(const std::string& key) const {
  for (const auto& [k, v] : meta) {
    if (k == key) return &v;
  }
  return nullptr;
}

const std::string& Archive::meta_value(const std::string& key) const {
  const std::string* v = find_meta(key);
  if (!v) throw Error(ErrorKind::kFormat, "archive lacks metadata key '" + key + "'");
  return *v;
}

const NamedTensor* Archive::find_tensor(const std::string& name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

const NamedTensor& Archive::tensor(const std::string& name) const {
  const NamedTensor* t = find_tensor(name);
  if (!t) throw Error(ErrorKind::kFormat, "archive lacks tensor '" + name + "'");
  return *t;
}

std::uint64_t fnv1a64(std::span<const unsigned char> bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::vector<unsigned char> encode_archive(const Archive& archive) {
  Writer payload;
  payload.u32(static_cast<std::uint32_t>(archive.meta.size()));
  for (const auto& [k, v] : archive.meta) {
    payload.str(k);
    payload.str(v);
  }
  payload.u32(static_cast<std::uint32_t>(archive.tensors.size()));
  for (const auto& t : archive.tensors) {
    std::uint64_t n = 1;
    for (auto d : t.shape) n *= d;
    if (n != t.data.size()) throw Error(ErrorKind::kShape, "tensor " + t.name + " shape/data mismatch");
    payload.str(t.name);
    payload.u32(static_cast<std::uint32_t>(t.shape.size()));
    for (auto d : t.shape) payload.u64(d);
    for (double v : t.data) payload.f64(v);
  }

  Writer out;
  out.bytes = {'L', 'A', 'R', 'K'};
  out.u32(kArchiveVersion);
  out.u32(static_cast<std::uint32_t>(archive.kind));
  out.u64(payload.bytes.size());
  out.bytes.insert(out.bytes.end(), payload.bytes.begin(), payload.bytes.end());
  out.u64(fnv1a64(payload.bytes));
  return out.bytes;
}

Archive decode_archive(std::span<const unsigned char> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), "LARK", 4) != 0) {
    throw Error(ErrorKind::kFormat, "bad magic, not a LARK archive");
  }
  Reader head(bytes.subspan(4));
  const std::uint32_t version = head.u32();
  if (version != kArchiveVersion) {
    throw Error(ErrorKind::kVersion, "archive format version " + std::to_string(version) +
                                         " is not supported (expected " +
                                         std::to_string(kArchiveVersion) + ")");
  }
  const std::uint32_t kind = head.u32();
  if (kind != static_cast<std::uint32_t>(ArchiveKind::kCheckpoint) &&
      kind != static_cast<std::uint32_t>(ArchiveKind::kTensors)) {
    throw Error(ErrorKind::kFormat, "unknown archive kind " + std::to_string(kind));
  }
  const std::uint64_t payload_size = head.u64();
  constexpr std::size_t kHeader = 4 + 4 + 4 + 8;
  if (bytes.size() < kHeader + 8 || payload_size != bytes.size() - kHeader - 8) {
    throw Error(ErrorKind::kFormat, "archive size does not match header");
  }
  const auto payload = bytes.subspan(kHeader, static_cast<std::size_t>(payload_size));
  Reader tail(bytes.subspan(kHeader + static_cast<std::size_t>(payload_size)));
  if (tail.u64() != fnv1a64(payload)) {
    throw Error(ErrorKind::kChecksum, "archive payload checksum mismatch");
  }

  Archive a;
  a.kind = static_cast<ArchiveKind>(kind);
  Reader r(payload);
  const std::uint32_t n_meta = r.u32();
  for (std::uint32_t i = 0; i < n_meta; ++i) {
    std::string k = r.str();
    std::string v = r.str();
    a.meta.emplace_back(std::move(k), std::move(v));
  }
  const std::uint32_t n_tensors = r.u32();
  for (std::uint32_t i = 0; i < n_tensors; ++i) {
    NamedTensor t;
    t.name = r.str();
    const std::uint32_t rank = r.u32();
    std::uint64_t n = 1;
    for (std::uint32_t d = 0; d < rank; ++d) {
      t.shape.push_back(r.u64());
      n *= t.shape.back();
    }
    if (n > payload.size() / 8) throw Error(ErrorKind::kFormat, "tensor " + t.name + " too large");
    t.data.resize(static_cast<std::size_t>(n));
    for (auto& v : t.data) v = r.f64();
    a.tensors.push_back(std::move(t));
  }
  if (!r.done()) throw Error(ErrorKind::kFormat, "trailing bytes in archive payload");
  return a;
}

void write_archive(const std::filesystem::path& path, const Archive& archive) {
  const auto bytes = encode_archive(archive);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::kIo, "short write to " + path.string());
}

Archive read_archive(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return decode_archive(bytes);
  } catch (const Error& e) {
    throw e.prefixed(path.string());
  }
}

}  // namespace lark
