#include "spinn/common/binary_io.hpp"

#include "spinn/common/error.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>

namespace spinn::io {

static_assert(std::endian::native == std::endian::little,
              "binary formats are written as host little-endian");

namespace {
template <typename T>
void put(std::vector<std::uint8_t>& buf, T v) {
  std::uint8_t raw[sizeof(T)];
  std::memcpy(raw, &v, sizeof(T));
  buf.insert(buf.end(), raw, raw + sizeof(T));
}
}  // namespace

void BinaryWriter::u8(std::uint8_t v) { buf_.push_back(v); }
void BinaryWriter::u32(std::uint32_t v) { put(buf_, v); }
void BinaryWriter::u64(std::uint64_t v) { put(buf_, v); }
void BinaryWriter::f64(double v) { put(buf_, v); }

void BinaryWriter::bytes(std::string_view s) { buf_.insert(buf_.end(), s.begin(), s.end()); }

void BinaryWriter::str(std::string_view s) {
  u32(static_cast<std::uint32_t>(s.size()));
  bytes(s);
}

void BinaryWriter::f64_array(std::span<const double> values) {
  for (double v : values) f64(v);
}

void BinaryWriter::matrix_row_major(const Eigen::MatrixXd& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) f64(m(r, c));
}

void BinaryWriter::save(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::IoError, "cannot write " + tmp);
    out.write(reinterpret_cast<const char*>(buf_.data()),
              static_cast<std::streamsize>(buf_.size()));
    if (!out) throw Error(ErrorKind::IoError, "short write to " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

BinaryReader::BinaryReader(std::vector<std::uint8_t> data) : data_(std::move(data)) {}

BinaryReader BinaryReader::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
  std::vector<std::uint8_t> data((std::istreambuf_iterator<char>(in)),
                                 std::istreambuf_iterator<char>());
  return BinaryReader(std::move(data));
}

void BinaryReader::need(std::size_t n) const {
  if (pos_ + n > data_.size()) throw Error(ErrorKind::IoError, "truncated binary payload");
}

namespace {
template <typename T>
T take(const std::vector<std::uint8_t>& data, std::size_t& pos) {
  T v;
  std::memcpy(&v, data.data() + pos, sizeof(T));
  pos += sizeof(T);
  return v;
}
}  // namespace

std::uint8_t BinaryReader::u8() {
  need(1);
  return data_[pos_++];
}
std::uint32_t BinaryReader::u32() {
  need(4);
  return take<std::uint32_t>(data_, pos_);
}
std::uint64_t BinaryReader::u64() {
  need(8);
  return take<std::uint64_t>(data_, pos_);
}
double BinaryReader::f64() {
  need(8);
  return take<double>(data_, pos_);
}

std::string BinaryReader::bytes(std::size_t n) {
  need(n);
  std::string s(reinterpret_cast<const char*>(data_.data() + pos_), n);
  pos_ += n;
  return s;
}

std::string BinaryReader::str() { return bytes(u32()); }

void BinaryReader::f64_array(std::span<double> out) {
  for (double& v : out) v = f64();
}

Eigen::MatrixXd BinaryReader::matrix_row_major(Eigen::Index rows, Eigen::Index cols) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = f64();
  return m;
}

void BinaryReader::expect_magic(std::string_view magic) {
  if (bytes(magic.size()) != magic)
    throw Error(ErrorKind::IoError, "bad magic, expected " + std::string(magic));
}

Fnv1a& Fnv1a::add(std::string_view s) {
  for (unsigned char c : s) {
    h_ ^= c;
    h_ *= 1099511628211ULL;
  }
  return *this;
}

Fnv1a& Fnv1a::add(std::uint64_t v) {
  char raw[8];
  std::memcpy(raw, &v, 8);
  return add(std::string_view(raw, 8));
}

Fnv1a& Fnv1a::add(double v) { return add(std::bit_cast<std::uint64_t>(v)); }

Fnv1a& Fnv1a::add(std::span<const double> values) {
  for (double v : values) add(v);
  return *this;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace spinn::io
