#include "spinn/model/blocks.hpp"

#include "spinn/common/error.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <string>

namespace spinn::model {

namespace {

template <typename E, std::size_t N>
E parse_enum(std::string_view s, const std::array<std::pair<E, std::string_view>, N>& table, const char* what) {
  for (const auto& [e, name] : table)
    if (name == s) return e;
  throw Error(ErrorKind::InvalidVariant, std::string("unknown ") + what + " '" + std::string(s) + "'");
}

template <typename E, std::size_t N>
std::string_view name_of(E e, const std::array<std::pair<E, std::string_view>, N>& table) {
  for (const auto& [v, name] : table)
    if (v == e) return name;
  return "?";
}

constexpr std::array<std::pair<Geometry, std::string_view>, 3> kGeometries{{
    {Geometry::interval, "interval"}, {Geometry::sphere, "sphere"}, {Geometry::torus, "torus"}}};
constexpr std::array<std::pair<TransformVariant, std::string_view>, 4> kTransforms{{
    {TransformVariant::exact_operator, "exact_operator"},
    {TransformVariant::linear_trained, "linear_trained"},
    {TransformVariant::grid_conv_trained, "grid_conv_trained"},
    {TransformVariant::encoder, "encoder"}}};
constexpr std::array<std::pair<StepVariant, std::string_view>, 7> kSteps{{
    {StepVariant::realization_heat, "realization_heat"},
    {StepVariant::mlp_plain, "mlp_plain"},
    {StepVariant::exp_nonlinear_a, "exp_nonlinear_a"},
    {StepVariant::exp_standard_b, "exp_standard_b"},
    {StepVariant::naive_mlp_c, "naive_mlp_c"},
    {StepVariant::torus_a, "torus_a"},
    {StepVariant::torus_b, "torus_b"}}};
constexpr std::array<std::pair<ReconVariant, std::string_view>, 5> kRecons{{
    {ReconVariant::exact_sine, "exact_sine"},
    {ReconVariant::mlp_interval, "mlp_interval"},
    {ReconVariant::sphere_spectral_activations, "sphere_spectral_activations"},
    {ReconVariant::torus_mlp, "torus_mlp"},
    {ReconVariant::decoder, "decoder"}}};

[[noreturn]] void wrong_geometry(std::string_view variant, Geometry g) {
  throw Error(ErrorKind::InvalidVariant,
              std::string(variant) + " is not available on the " + std::string(to_string(g)));
}

int or_default(int v, int fallback) { return v > 0 ? v : fallback; }

std::vector<NamedParams> one(const char* name, nn::ParamVector& p) { return {{name, &p}}; }

// ---- transformation blocks ----

class ExactTransform final : public TransformationBlock {
 public:
  explicit ExactTransform(Eigen::MatrixXd op) : op_(std::move(op)) {}
  Id forward(Graph& g, Id samples) override { return g.linear_fixed(op_, Eigen::VectorXd(), samples); }
  [[nodiscard]] ad::Mat evaluate(const ad::Mat& samples) const override { return op_ * samples; }
  std::vector<NamedParams> params() override { return {}; }
  [[nodiscard]] std::size_t param_count() const override { return 0; }
  [[nodiscard]] TransformVariant variant() const override { return TransformVariant::exact_operator; }
  [[nodiscard]] int output_width() const override { return static_cast<int>(op_.rows()); }

 private:
  Eigen::MatrixXd op_;
};

class DenseTransform final : public TransformationBlock {
 public:
  DenseTransform(int in, int out, std::uint64_t seed)
      : net_(nn::init_params(nn::MlpShape{{in, out}, nn::Activation::tanh(), nn::Activation::identity(), true},
                             seed)) {}
  Id forward(Graph& g, Id samples) override { return net_.forward(g, samples); }
  [[nodiscard]] ad::Mat evaluate(const ad::Mat& samples) const override { return net_.evaluate(samples); }
  std::vector<NamedParams> params() override { return one("transform", net_.params); }
  [[nodiscard]] std::size_t param_count() const override { return net_.param_count(); }
  [[nodiscard]] TransformVariant variant() const override { return TransformVariant::linear_trained; }
  [[nodiscard]] int output_width() const override { return net_.output_width(); }

 private:
  nn::Mlp net_;
};

class ConvTransform final : public TransformationBlock {
 public:
  ConvTransform(TransformVariant v, int h, int w, std::vector<int> channels, int out, std::uint64_t seed)
      : variant_(v), net_(h, w, std::move(channels), out, seed) {}
  Id forward(Graph& g, Id samples) override { return net_.forward(g, samples); }
  [[nodiscard]] ad::Mat evaluate(const ad::Mat& samples) const override { return net_.evaluate(samples); }
  std::vector<NamedParams> params() override {
    return {{"transform_conv", &net_.conv_params}, {"transform_dense", &net_.dense.params}};
  }
  [[nodiscard]] std::size_t param_count() const override { return net_.param_count(); }
  [[nodiscard]] TransformVariant variant() const override { return variant_; }
  [[nodiscard]] int output_width() const override { return net_.output_width(); }

 private:
  TransformVariant variant_;
  nn::ConvNet net_;
};

// ---- time stepping blocks ----

/// out_k = exp(-4 pi^2 k^2 alpha t) c_k.
class HeatRealization final : public TimeSteppingBlock {
 public:
  HeatRealization(int K, double alpha) : rates_(K, 1) {
    for (int k = 1; k <= K; ++k) rates_(k - 1, 0) = -4.0 * std::numbers::pi * std::numbers::pi * k * k * alpha;
  }
  Id forward(Graph& g, Id coeffs, Id, Id t) override {
    return g.mul(g.exp(g.linear_fixed(rates_, Eigen::VectorXd(), t)), coeffs);
  }
  std::vector<NamedParams> params() override { return {}; }
  [[nodiscard]] std::size_t param_count() const override { return 0; }
  [[nodiscard]] StepVariant variant() const override { return StepVariant::realization_heat; }

 private:
  Eigen::MatrixXd rates_;
};

/// Plain MLP on (c, t).
class MlpStep final : public TimeSteppingBlock {
 public:
  MlpStep(StepVariant v, int K, int layers, int hidden, std::uint64_t seed)
      : variant_(v), net_(nn::init_params(mlp_shape(K + 1, K, layers, hidden), seed)) {}
  Id forward(Graph& g, Id coeffs, Id, Id t) override {
    const std::array<Id, 2> in{coeffs, t};
    return net_.forward(g, g.concat(in));
  }
  std::vector<NamedParams> params() override { return one("step", net_.params); }
  [[nodiscard]] std::size_t param_count() const override { return net_.param_count(); }
  [[nodiscard]] StepVariant variant() const override { return variant_; }

 private:
  StepVariant variant_;
  nn::Mlp net_;
};

/// exp(V t) * D12(c[, c_nl]) + D2(c[, c_nl], t).
class ExponentialStep final : public TimeSteppingBlock {
 public:
  ExponentialStep(StepVariant v, int K, bool nonlinear, const StepLayout& lay, std::uint64_t seed)
      : variant_(v),
        nonlinear_(nonlinear),
        rate_(nn::init_params(nn::MlpShape{{1, K}, nn::Activation::tanh(), nn::Activation::identity(), false},
                              mix_seed(seed, 1))),
        d12_(nn::init_params(mlp_shape(nonlinear ? 2 * K : K, K, lay.d12_layers, lay.d12_hidden), mix_seed(seed, 2))),
        d2_(nn::init_params(mlp_shape((nonlinear ? 2 * K : K) + 1, K, lay.d2_layers, lay.d2_hidden),
                            mix_seed(seed, 3))) {}

  Id forward(Graph& g, Id coeffs, Id nl, Id t) override {
    if (nonlinear_ && nl < 0) throw Error(ErrorKind::ShapeMismatch, "variant needs the nonlinear coefficients");
    std::vector<Id> parts{coeffs};
    if (nonlinear_) parts.push_back(nl);
    const Id base = parts.size() == 1 ? coeffs : g.concat(parts);
    parts.push_back(t);
    const Id with_t = g.concat(parts);
    const Id growth = g.exp(rate_.forward(g, t));
    return g.add(g.mul(growth, d12_.forward(g, base)), d2_.forward(g, with_t));
  }
  std::vector<NamedParams> params() override {
    return {{"step_rate", &rate_.params}, {"step_d12", &d12_.params}, {"step_d2", &d2_.params}};
  }
  [[nodiscard]] std::size_t param_count() const override {
    return rate_.param_count() + d12_.param_count() + d2_.param_count();
  }
  [[nodiscard]] StepVariant variant() const override { return variant_; }
  [[nodiscard]] bool needs_nonlinear() const override { return nonlinear_; }

 private:
  StepVariant variant_;
  bool nonlinear_;
  nn::Mlp rate_;
  nn::Mlp d12_;
  nn::Mlp d2_;
};

// ---- reconstruction blocks ----

/// sum_k a_k sin(2 pi k x).
class SineRealization final : public ReconstructionBlock {
 public:
  explicit SineRealization(int K) : freqs_(K, 1) {
    for (int k = 1; k <= K; ++k) freqs_(k - 1, 0) = 2.0 * std::numbers::pi * k;
  }
  Id forward(Graph& g, Id coeffs, Id points) override {
    const Id s = g.unary(ad::Op::sin, g.linear_fixed(freqs_, Eigen::VectorXd(), points));
    return g.sum_rows(g.mul(coeffs, s));
  }
  std::vector<NamedParams> params() override { return {}; }
  [[nodiscard]] std::size_t param_count() const override { return 0; }
  [[nodiscard]] ReconVariant variant() const override { return ReconVariant::exact_sine; }

 private:
  Eigen::MatrixXd freqs_;
};

/// MLP on (a, point) -> scalar.
class MlpRecon final : public ReconstructionBlock {
 public:
  MlpRecon(ReconVariant v, int K, int dim, int layers, int hidden, std::uint64_t seed)
      : variant_(v), net_(nn::init_params(mlp_shape(K + dim, 1, layers, hidden), seed)) {}
  Id forward(Graph& g, Id coeffs, Id points) override {
    const std::array<Id, 2> in{coeffs, points};
    return net_.forward(g, g.concat(in));
  }
  std::vector<NamedParams> params() override { return one("recon", net_.params); }
  [[nodiscard]] std::size_t param_count() const override { return net_.param_count(); }
  [[nodiscard]] ReconVariant variant() const override { return variant_; }

 private:
  ReconVariant variant_;
  nn::Mlp net_;
};

/// <R_d(a), sum_l R_{l,sin,1}(sin^l R_{l,sin,0}(p)) * R_{l,cos,1}(cos^l R_{l,cos,0}(p))>.
class SphereRecon final : public ReconstructionBlock {
 public:
  SphereRecon(int K, int degree, int rd_layers, std::uint64_t seed)
      : rd_(nn::init_params(mlp_shape(K, K, rd_layers, K), mix_seed(seed, 0))) {
    using nn::Activation;
    using nn::MlpShape;
    for (int l = 0; l <= degree; ++l) {
      const auto s = static_cast<std::uint64_t>(l) * 4;
      sin0_.push_back(nn::init_params(MlpShape{{2, 2}, Activation::tanh(), Activation::sin_pow(l), true},
                                      mix_seed(seed, s + 1)));
      cos0_.push_back(nn::init_params(MlpShape{{2, 2}, Activation::tanh(), Activation::cos_pow(l), true},
                                      mix_seed(seed, s + 2)));
      sin1_.push_back(nn::init_params(MlpShape{{2, K}, Activation::tanh(), Activation::identity(), true},
                                      mix_seed(seed, s + 3)));
      cos1_.push_back(nn::init_params(MlpShape{{2, K}, Activation::tanh(), Activation::identity(), true},
                                      mix_seed(seed, s + 4)));
    }
  }

  Id forward(Graph& g, Id coeffs, Id points) override {
    Id loc = -1;
    for (std::size_t l = 0; l < sin0_.size(); ++l) {
      const Id a = sin1_[l].forward(g, sin0_[l].forward(g, points));
      const Id b = cos1_[l].forward(g, cos0_[l].forward(g, points));
      const Id term = g.mul(a, b);
      loc = loc < 0 ? term : g.add(loc, term);
    }
    return g.sum_rows(g.mul(rd_.forward(g, coeffs), loc));
  }

  std::vector<NamedParams> params() override {
    std::vector<NamedParams> out{{"recon_rd", &rd_.params}};
    for (std::size_t l = 0; l < sin0_.size(); ++l) {
      const std::string s = std::to_string(l);
      out.push_back({"recon_sin0_" + s, &sin0_[l].params});
      out.push_back({"recon_cos0_" + s, &cos0_[l].params});
      out.push_back({"recon_sin1_" + s, &sin1_[l].params});
      out.push_back({"recon_cos1_" + s, &cos1_[l].params});
    }
    return out;
  }
  [[nodiscard]] std::size_t param_count() const override {
    std::size_t n = rd_.param_count();
    for (std::size_t l = 0; l < sin0_.size(); ++l)
      n += sin0_[l].param_count() + cos0_[l].param_count() + sin1_[l].param_count() + cos1_[l].param_count();
    return n;
  }
  [[nodiscard]] ReconVariant variant() const override { return ReconVariant::sphere_spectral_activations; }

 private:
  nn::Mlp rd_;
  std::vector<nn::Mlp> sin0_, cos0_, sin1_, cos1_;
};

}  // namespace

std::string_view to_string(Geometry g) { return name_of(g, kGeometries); }
std::string_view to_string(TransformVariant v) { return name_of(v, kTransforms); }
std::string_view to_string(StepVariant v) { return name_of(v, kSteps); }
std::string_view to_string(ReconVariant v) { return name_of(v, kRecons); }
Geometry parse_geometry(std::string_view s) { return parse_enum(s, kGeometries, "geometry"); }
TransformVariant parse_transform(std::string_view s) { return parse_enum(s, kTransforms, "transformation variant"); }
StepVariant parse_step(std::string_view s) { return parse_enum(s, kSteps, "time-stepping variant"); }
ReconVariant parse_recon(std::string_view s) { return parse_enum(s, kRecons, "reconstruction variant"); }

int point_dim(Geometry g) { return g == Geometry::interval ? 1 : 2; }

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer over (seed, stream)
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

nn::MlpShape mlp_shape(int in, int out, int layers, int hidden) {
  if (layers < 1) throw Error(ErrorKind::InvalidShape, "an MLP needs at least one layer");
  const int h = hidden > 0 ? hidden : in;
  nn::MlpShape shape;
  shape.widths.push_back(in);
  for (int i = 0; i + 1 < layers; ++i) shape.widths.push_back(h);
  shape.widths.push_back(out);
  return shape;
}

StepLayout step_layout(StepVariant v, const BlockConfig& cfg) {
  switch (v) {
    case StepVariant::exp_nonlinear_a:
      return {or_default(cfg.d12_layers, 6), cfg.d12_hidden, or_default(cfg.d2_layers, 6), cfg.d2_hidden};
    case StepVariant::exp_standard_b:
      // five layers on top of the (a) sub-block, placed in D12
      return {or_default(cfg.d12_layers, 11), cfg.d12_hidden, or_default(cfg.d2_layers, 6), cfg.d2_hidden};
    case StepVariant::torus_a:
      return {or_default(cfg.d12_layers, 4), cfg.d12_hidden, or_default(cfg.d2_layers, 5), cfg.d2_hidden};
    case StepVariant::mlp_plain: return {0, 0, or_default(cfg.step_layers, 5), or_default(cfg.step_hidden, 50)};
    case StepVariant::naive_mlp_c: return {0, 0, or_default(cfg.step_layers, 12), cfg.step_hidden};
    case StepVariant::torus_b: return {0, 0, or_default(cfg.step_layers, 15), cfg.step_hidden};
    case StepVariant::realization_heat: return {0, 0, 0, 0};
  }
  return {0, 0, 0, 0};
}

std::unique_ptr<TransformationBlock> build_transformation(TransformVariant v, const BlockConfig& cfg,
                                                          std::uint64_t seed) {
  switch (v) {
    case TransformVariant::exact_operator:
      if (cfg.exact_operator.rows() != cfg.K || cfg.exact_operator.cols() != cfg.samples)
        throw Error(ErrorKind::InvalidShape, "exact operator must be K x samples");
      return std::make_unique<ExactTransform>(cfg.exact_operator);
    case TransformVariant::linear_trained:
      if (cfg.geometry == Geometry::torus) wrong_geometry(to_string(v), cfg.geometry);
      return std::make_unique<DenseTransform>(cfg.samples, cfg.K, seed);
    case TransformVariant::grid_conv_trained:
    case TransformVariant::encoder: {
      if (cfg.geometry != Geometry::torus) wrong_geometry(to_string(v), cfg.geometry);
      if (cfg.grid_h * cfg.grid_w != cfg.samples)
        throw Error(ErrorKind::InvalidShape, "conv transform grid does not match the sample count");
      std::vector<int> ch = cfg.conv_channels;
      if (ch.empty())
        ch = v == TransformVariant::grid_conv_trained ? std::vector<int>{8, 16, 32} : std::vector<int>{8, 16, 32, 32, 32};
      return std::make_unique<ConvTransform>(v, cfg.grid_h, cfg.grid_w, std::move(ch), cfg.K, seed);
    }
  }
  throw Error(ErrorKind::InvalidVariant, "unknown transformation variant");
}

std::unique_ptr<TimeSteppingBlock> build_time_stepping(StepVariant v, const BlockConfig& cfg, std::uint64_t seed) {
  const Geometry g = cfg.geometry;
  const StepLayout lay = step_layout(v, cfg);
  switch (v) {
    case StepVariant::realization_heat:
      if (g != Geometry::interval) wrong_geometry(to_string(v), g);
      if (!(cfg.alpha > 0)) throw Error(ErrorKind::InvalidShape, "heat realization needs alpha > 0");
      return std::make_unique<HeatRealization>(cfg.K, cfg.alpha);
    case StepVariant::mlp_plain:
      if (g != Geometry::interval) wrong_geometry(to_string(v), g);
      return std::make_unique<MlpStep>(v, cfg.K, lay.d2_layers, lay.d2_hidden, seed);
    case StepVariant::exp_nonlinear_a:
    case StepVariant::exp_standard_b:
      if (g != Geometry::sphere) wrong_geometry(to_string(v), g);
      return std::make_unique<ExponentialStep>(v, cfg.K, v == StepVariant::exp_nonlinear_a, lay, seed);
    case StepVariant::naive_mlp_c:
      if (g != Geometry::sphere) wrong_geometry(to_string(v), g);
      return std::make_unique<MlpStep>(v, cfg.K, lay.d2_layers, lay.d2_hidden, seed);
    case StepVariant::torus_a:
      if (g != Geometry::torus) wrong_geometry(to_string(v), g);
      return std::make_unique<ExponentialStep>(v, cfg.K, true, lay, seed);
    case StepVariant::torus_b:
      if (g != Geometry::torus) wrong_geometry(to_string(v), g);
      return std::make_unique<MlpStep>(v, cfg.K, lay.d2_layers, lay.d2_hidden, seed);
  }
  throw Error(ErrorKind::InvalidVariant, "unknown time-stepping variant");
}

std::unique_ptr<ReconstructionBlock> build_reconstruction(ReconVariant v, const BlockConfig& cfg,
                                                          std::uint64_t seed) {
  const Geometry g = cfg.geometry;
  switch (v) {
    case ReconVariant::exact_sine:
      if (g != Geometry::interval) wrong_geometry(to_string(v), g);
      return std::make_unique<SineRealization>(cfg.K);
    case ReconVariant::mlp_interval:
      if (g != Geometry::interval) wrong_geometry(to_string(v), g);
      return std::make_unique<MlpRecon>(v, cfg.K, 1, or_default(cfg.recon_layers, 5),
                                        or_default(cfg.recon_hidden, 49), seed);
    case ReconVariant::sphere_spectral_activations:
      if (g != Geometry::sphere) wrong_geometry(to_string(v), g);
      return std::make_unique<SphereRecon>(cfg.K, cfg.sphere_degree, or_default(cfg.rd_layers, 2), seed);
    case ReconVariant::torus_mlp:
      if (g != Geometry::torus) wrong_geometry(to_string(v), g);
      return std::make_unique<MlpRecon>(v, cfg.K, 2, or_default(cfg.recon_layers, 15), cfg.recon_hidden, seed);
    case ReconVariant::decoder:
      if (g != Geometry::torus) wrong_geometry(to_string(v), g);
      return std::make_unique<MlpRecon>(v, cfg.K, 2, or_default(cfg.recon_layers, 17), cfg.recon_hidden, seed);
  }
  throw Error(ErrorKind::InvalidVariant, "unknown reconstruction variant");
}

}  // namespace spinn::model
