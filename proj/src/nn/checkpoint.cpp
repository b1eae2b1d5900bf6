#include "spinn/nn/checkpoint.hpp"

#include "spinn/common/binary_io.hpp"
#include "spinn/common/error.hpp"

namespace spinn::nn {

namespace {
constexpr std::string_view kMagic = "SPNNCKPT";
constexpr std::uint32_t kVersion = 1;
}  // namespace

const Mlp& Checkpoint::net(const std::string& name) const {
  for (const auto& [n, m] : nets)
    if (n == name) return m;
  throw Error(ErrorKind::IoError, "checkpoint has no net '" + name + "'");
}

const Eigen::VectorXd& Checkpoint::vector(const std::string& name) const {
  for (const auto& [n, v] : vectors)
    if (n == name) return v;
  throw Error(ErrorKind::IoError, "checkpoint has no vector '" + name + "'");
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  io::BinaryWriter w;
  w.bytes(kMagic);
  w.u32(kVersion);
  w.str(ckpt.manifest);
  w.u32(static_cast<std::uint32_t>(ckpt.nets.size()));
  for (const auto& [name, net] : ckpt.nets) {
    w.str(name);
    w.u32(static_cast<std::uint32_t>(net.layers().size()));
    for (const DenseLayer& l : net.layers()) {
      w.u32(static_cast<std::uint32_t>(l.in));
      w.u32(static_cast<std::uint32_t>(l.out));
      w.u8(l.bias ? 1 : 0);
      w.u8(static_cast<std::uint8_t>(l.activation.kind));
      w.u32(static_cast<std::uint32_t>(l.activation.power));
    }
    for (std::size_t i = 0; i < net.layers().size(); ++i) {
      w.matrix_row_major(net.weights(i));
      if (net.layers()[i].bias) w.matrix_row_major(net.bias(i));
    }
  }
  w.u32(static_cast<std::uint32_t>(ckpt.vectors.size()));
  for (const auto& [name, v] : ckpt.vectors) {
    w.str(name);
    w.u64(static_cast<std::uint64_t>(v.size()));
    w.f64_array(std::span<const double>(v.data(), static_cast<std::size_t>(v.size())));
  }
  w.save(path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  auto r = io::BinaryReader::load(path);
  r.expect_magic(kMagic);
  if (r.u32() != kVersion) throw Error(ErrorKind::IoError, "unsupported checkpoint version");
  Checkpoint ckpt;
  ckpt.manifest = r.str();
  const std::uint32_t nets = r.u32();
  for (std::uint32_t k = 0; k < nets; ++k) {
    std::string name = r.str();
    const std::uint32_t count = r.u32();
    std::vector<DenseLayer> layers(count);
    for (DenseLayer& l : layers) {
      l.in = static_cast<int>(r.u32());
      l.out = static_cast<int>(r.u32());
      l.bias = r.u8() != 0;
      const auto kind = r.u8();
      if (kind > static_cast<std::uint8_t>(ActivationKind::elementwise_sin))
        throw Error(ErrorKind::IoError, "unknown activation in checkpoint");
      l.activation.kind = static_cast<ActivationKind>(kind);
      l.activation.power = static_cast<int>(r.u32());
    }
    Mlp net(std::move(layers));
    for (std::size_t i = 0; i < net.layers().size(); ++i) {
      const DenseLayer& l = net.layers()[i];
      net.weights(i) = r.matrix_row_major(l.out, l.in);
      if (l.bias) net.bias(i) = r.matrix_row_major(l.out, 1);
    }
    ckpt.nets.emplace_back(std::move(name), std::move(net));
  }
  const std::uint32_t vectors = r.u32();
  for (std::uint32_t k = 0; k < vectors; ++k) {
    std::string name = r.str();
    Eigen::VectorXd v(static_cast<Eigen::Index>(r.u64()));
    r.f64_array(std::span<double>(v.data(), static_cast<std::size_t>(v.size())));
    ckpt.vectors.emplace_back(std::move(name), std::move(v));
  }
  if (!r.at_end()) throw Error(ErrorKind::IoError, "trailing bytes in checkpoint");
  return ckpt;
}

}  // namespace spinn::nn
