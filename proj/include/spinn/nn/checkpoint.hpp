#pragma once

#include "spinn/nn/mlp.hpp"

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace spinn::nn {

/// Parameter checkpoint. Little-endian layout:
///
///   "SPNNCKPT"  u32 version(=1)  str manifest
///   u32 net_count, per net:
///     str name  u32 layer_count
///     per layer: u32 in  u32 out  u8 has_bias  u8 activation  u32 power
///     per layer: f64 weights[out][in] (row-major)  f64 bias[out] if present
///   u32 vector_count, per vector: str name  u64 length  f64 values[length]
///
/// `str` is a u32 byte length followed by the bytes.
struct Checkpoint {
  std::string manifest;
  std::vector<std::pair<std::string, Mlp>> nets;
  std::vector<std::pair<std::string, Eigen::VectorXd>> vectors;

  [[nodiscard]] const Mlp& net(const std::string& name) const;
  [[nodiscard]] const Eigen::VectorXd& vector(const std::string& name) const;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace spinn::nn
