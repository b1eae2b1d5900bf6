#pragma once

#include "spinn/nn/mlp.hpp"

#include <cstdint>
#include <vector>

namespace spinn::nn {

/// Periodic 3x3 convolutions (tanh after each) on an H x W grid, flattened, then
/// a final dense layer. Input rows are the grid in row-major order (one channel).
class ConvNet {
 public:
  ConvNet() = default;
  ConvNet(int height, int width, std::vector<int> channels, int out_width, std::uint64_t seed);

  ad::Graph::Id forward(ad::Graph& g, ad::Graph::Id x);
  [[nodiscard]] ad::Mat evaluate(const ad::Mat& x) const;

  [[nodiscard]] std::size_t param_count() const { return conv_params.size() + dense.param_count(); }
  [[nodiscard]] int height() const { return height_; }
  [[nodiscard]] int width() const { return width_; }
  [[nodiscard]] const std::vector<int>& channels() const { return channels_; }
  [[nodiscard]] int output_width() const { return dense.output_width(); }

  ParamVector conv_params;  // per layer: kernel [out][in][3][3] then bias
  Mlp dense;

 private:
  [[nodiscard]] ad::ConvRef layer_ref(std::size_t layer, const double* base, double* grad) const;
  int height_ = 0;
  int width_ = 0;
  std::vector<int> channels_;  // output channels per conv layer
  std::vector<std::size_t> offsets_;
};

}  // namespace spinn::nn
