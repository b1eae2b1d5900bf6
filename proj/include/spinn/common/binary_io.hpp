#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace spinn::io {

/// Append-only little-endian byte buffer used by every on-disk format in the project.
class BinaryWriter {
 public:
  void u8(std::uint8_t v);
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void f64(double v);
  void bytes(std::string_view s);
  void str(std::string_view s);  // u32 length + bytes
  void f64_array(std::span<const double> values);
  /// Row-major payload of a column-major Eigen matrix.
  void matrix_row_major(const Eigen::MatrixXd& m);

  [[nodiscard]] const std::vector<std::uint8_t>& buffer() const { return buf_; }
  void save(const std::filesystem::path& path) const;

 private:
  std::vector<std::uint8_t> buf_;
};

class BinaryReader {
 public:
  explicit BinaryReader(std::vector<std::uint8_t> data);
  static BinaryReader load(const std::filesystem::path& path);

  std::uint8_t u8();
  std::uint32_t u32();
  std::uint64_t u64();
  double f64();
  std::string bytes(std::size_t n);
  std::string str();
  void f64_array(std::span<double> out);
  Eigen::MatrixXd matrix_row_major(Eigen::Index rows, Eigen::Index cols);
  void expect_magic(std::string_view magic);

  [[nodiscard]] bool at_end() const { return pos_ == data_.size(); }

 private:
  void need(std::size_t n) const;

  std::vector<std::uint8_t> data_;
  std::size_t pos_ = 0;
};

/// 64-bit FNV-1a, used for config and cache keys.
class Fnv1a {
 public:
  Fnv1a& add(std::string_view s);
  Fnv1a& add(double v);
  Fnv1a& add(std::uint64_t v);
  Fnv1a& add(std::span<const double> values);
  [[nodiscard]] std::uint64_t value() const { return h_; }

 private:
  std::uint64_t h_ = 14695981039346656037ULL;
};

std::string hex64(std::uint64_t v);

}  // namespace spinn::io
