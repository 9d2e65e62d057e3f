#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace lark {

// Versioned little-endian binary container shared by checkpoints and tensor
// files:
//
//   "LARK" | u32 version | u32 kind | u64 payload_bytes | payload | u64 fnv1a(payload)
//
// payload = u32 n_meta  { u32 len, key, u32 len, value }*
//           u32 n_tensors { u32 len, name, u32 rank, u64 dims[rank], f64 data[] }*
// Tensor data is row-major.
inline constexpr std::uint32_t kArchiveVersion = 1;

enum class ArchiveKind : std::uint32_t { kCheckpoint = 1, kTensors = 2 };

struct NamedTensor {
  std::string name;
  std::vector<std::uint64_t> shape;
  std::vector<double> data;

  static NamedTensor from_matrix(std::string name, const Eigen::MatrixXd& m);
  static NamedTensor from_vector(std::string name, const Eigen::VectorXd& v);
  Eigen::MatrixXd to_matrix() const;  // rank 1 becomes a column
};

struct Archive {
  ArchiveKind kind = ArchiveKind::kTensors;
  std::vector<std::pair<std::string, std::string>> meta;
  std::vector<NamedTensor> tensors;

  const std::string* find_meta(const std::string& key) const;
  const std::string& meta_value(const std::string& key) const;  // kFormat when absent
  const NamedTensor* find_tensor(const std::string& name) const;
  const NamedTensor& tensor(const std::string& name) const;  // kFormat when absent
};

std::uint64_t fnv1a64(std::span<const unsigned char> bytes);

std::vector<unsigned char> encode_archive(const Archive& archive);
Archive decode_archive(std::span<const unsigned char> bytes);

void write_archive(const std::filesystem::path& path, const Archive& archive);
Archive read_archive(const std::filesystem::path& path);

}  // namespace lark
