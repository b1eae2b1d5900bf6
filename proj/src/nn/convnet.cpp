#include "spinn/nn/convnet.hpp"

#include "spinn/common/error.hpp"

#include <cmath>
#include <random>

namespace spinn::nn {

ConvNet::ConvNet(int height, int width, std::vector<int> channels, int out_width, std::uint64_t seed)
    : height_(height), width_(width), channels_(std::move(channels)) {
  if (height < 3 || width < 3 || channels_.empty() || out_width < 1)
    throw Error(ErrorKind::InvalidShape, "conv net needs a >= 3x3 grid, channels and an output");
  std::size_t total = 0;
  int in = 1;
  for (int c : channels_) {
    if (c < 1) throw Error(ErrorKind::InvalidShape, "channel count < 1");
    offsets_.push_back(total);
    total += static_cast<std::size_t>(c) * in * 9 + c;
    in = c;
  }
  conv_params.resize(static_cast<Eigen::Index>(total));
  std::mt19937_64 rng(seed);
  in = 1;
  for (std::size_t li = 0; li < channels_.size(); ++li) {
    const int out = channels_[li];
    const double limit = std::sqrt(6.0 / (9.0 * in + 9.0 * out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    const std::size_t n = static_cast<std::size_t>(out) * in * 9;
    for (std::size_t k = 0; k < n; ++k) conv_params.values(static_cast<Eigen::Index>(offsets_[li] + k)) = dist(rng);
    in = out;
  }
  dense = init_params(MlpShape{{in * height * width, out_width}, Activation::tanh(), Activation::identity(), true},
                      rng());
}

ad::ConvRef ConvNet::layer_ref(std::size_t layer, const double* base, double* grad) const {
  ad::ConvRef r;
  r.in_channels = layer == 0 ? 1 : channels_[layer - 1];
  r.out_channels = channels_[layer];
  r.height = height_;
  r.width = width_;
  const std::size_t kn = static_cast<std::size_t>(r.out_channels) * r.in_channels * 9;
  r.kernel = base + offsets_[layer];
  r.bias = r.kernel + kn;
  if (grad) {
    r.kernel_grad = grad + offsets_[layer];
    r.bias_grad = r.kernel_grad + kn;
  }
  return r;
}

ad::Graph::Id ConvNet::forward(ad::Graph& g, ad::Graph::Id x) {
  double* grad = conv_params.frozen ? nullptr : conv_params.grad.data();
  for (std::size_t li = 0; li < channels_.size(); ++li)
    x = g.tanh(g.conv2d_periodic(layer_ref(li, conv_params.values.data(), grad), x));
  return dense.forward(g, x);
}

ad::Mat ConvNet::evaluate(const ad::Mat& x) const {
  ad::Graph g;
  auto id = g.constant(x);
  for (std::size_t li = 0; li < channels_.size(); ++li)
    id = g.tanh(g.conv2d_periodic(layer_ref(li, conv_params.values.data(), nullptr), id));
  return dense.evaluate(g.value(id));
}

}  // namespace spinn::nn
