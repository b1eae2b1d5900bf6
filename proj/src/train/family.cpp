#include "spinn/train/family.hpp"

#include "spinn/bases/sphere.hpp"
#include "spinn/common/binary_io.hpp"
#include "spinn/common/error.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace spinn::train {

namespace {
constexpr double kPi = std::numbers::pi;
}

FamilySpec FamilySpec::interval(int degree) {
  FamilySpec s;
  s.geometry = Geometry::interval;
  s.degree = degree;
  return s;
}

FamilySpec FamilySpec::sphere(int degree, int n_theta, int n_phi) {
  FamilySpec s;
  s.geometry = Geometry::sphere;
  s.degree = degree;
  s.n_theta = n_theta;
  s.n_phi = n_phi;
  return s;
}

FamilySpec FamilySpec::torus_family(int degree, const bases::TorusGeometry& geom) {
  FamilySpec s;
  s.geometry = Geometry::torus;
  s.degree = degree;
  s.n_theta = geom.n_theta;
  s.n_phi = geom.n_phi;
  s.torus = geom;
  return s;
}

int FamilySpec::dim() const {
  switch (geometry) {
    case Geometry::interval: return degree;
    case Geometry::sphere: return (degree + 1) * (degree + 1);
    case Geometry::torus: return degree * degree;
  }
  return 0;
}

int FamilySpec::samples() const { return geometry == Geometry::interval ? 101 : n_theta * n_phi; }

void FamilySpec::validate() const {
  if (degree < (geometry == Geometry::sphere ? 0 : 1)) throw Error(ErrorKind::ConfigError, "family degree too small");
  if (geometry != Geometry::interval && (n_theta < 2 || n_phi < 1))
    throw Error(ErrorKind::ConfigError, "family grid too small");
  if (geometry == Geometry::torus && !(torus.R > torus.r && torus.r > 0))
    throw Error(ErrorKind::ConfigError, "torus radii must satisfy R > r > 0");
}

std::uint64_t FamilySpec::hash() const {
  io::Fnv1a h;
  h.add(model::to_string(geometry)).add(std::uint64_t(degree)).add(std::uint64_t(n_theta)).add(std::uint64_t(n_phi));
  if (geometry == Geometry::torus) h.add(torus.R).add(torus.r);
  return h.value();
}

model::ModelInfo FamilySpec::model_info() const {
  model::ModelInfo info;
  info.geometry = geometry;
  info.samples = samples();
  if (geometry == Geometry::torus) {
    info.torus = torus;
    info.torus.n_theta = n_theta;
    info.torus.n_phi = n_phi;
  }
  return info;
}

Eigen::MatrixXd family_grid(const FamilySpec& spec) {
  spec.validate();
  if (spec.geometry == Geometry::interval) {
    Eigen::MatrixXd p(1, 101);
    for (int j = 0; j < 101; ++j) p(0, j) = j / 100.0;
    return p;
  }
  Eigen::MatrixXd p(2, spec.n_theta * spec.n_phi);
  const bases::SphereBasisSpec sphere{spec.degree, spec.n_theta, spec.n_phi};
  for (int i = 0; i < spec.n_theta; ++i)
    for (int k = 0; k < spec.n_phi; ++k) {
      const int col = i * spec.n_phi + k;
      if (spec.geometry == Geometry::sphere) {
        p(0, col) = sphere.theta(i);
        p(1, col) = sphere.phi(k);
      } else {
        p(0, col) = 2.0 * kPi * i / spec.n_theta;
        p(1, col) = 2.0 * kPi * k / spec.n_phi;
      }
    }
  return p;
}

Eigen::MatrixXd family_design(const FamilySpec& spec, const Eigen::MatrixXd& points) {
  if (points.rows() != model::point_dim(spec.geometry))
    throw Error(ErrorKind::ShapeMismatch, "points have the wrong dimension");
  const int dim = spec.dim();
  Eigen::MatrixXd d(points.cols(), dim);
  for (Eigen::Index j = 0; j < points.cols(); ++j) {
    switch (spec.geometry) {
      case Geometry::interval:
        for (int k = 1; k <= spec.degree; ++k) d(j, k - 1) = std::sin(2.0 * kPi * k * points(0, j));
        break;
      case Geometry::sphere:
        for (int i = 0; i < dim; ++i) {
          const auto [l, m] = bases::sph_degree_order(i);
          d(j, i) = bases::real_sph_harm(l, m, points(0, j), points(1, j));
        }
        break;
      case Geometry::torus:
        for (int k = 1; k <= spec.degree; ++k)
          for (int l = 1; l <= spec.degree; ++l)
            d(j, (k - 1) * spec.degree + (l - 1)) = std::sin(k * points(0, j)) * std::sin(l * points(1, j));
        break;
    }
  }
  return d;
}

Eigen::VectorXd family_eval(const FamilySpec& spec, std::span<const double> coeffs, const Eigen::MatrixXd& points) {
  if (static_cast<int>(coeffs.size()) != spec.dim())
    throw Error(ErrorKind::ShapeMismatch, "coefficient vector does not match the family");
  return family_design(spec, points) *
         Eigen::Map<const Eigen::VectorXd>(coeffs.data(), static_cast<Eigen::Index>(coeffs.size()));
}

Family sample_family(const FamilySpec& spec, int n, std::uint64_t seed) {
  spec.validate();
  if (n < 1) throw Error(ErrorKind::ConfigError, "family size must be positive");
  Family f;
  f.spec = spec;
  const int dim = spec.dim();
  f.coeffs.resize(dim, n);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int i = 0; i < n; ++i) {
    double norm = 0.0;
    do {
      for (int k = 0; k < dim; ++k) f.coeffs(k, i) = gauss(rng);
      norm = f.coeffs.col(i).norm();
    } while (norm < 1e-300);
    f.coeffs.col(i) /= norm;
  }
  f.samples = family_design(spec, family_grid(spec)) * f.coeffs;
  return f;
}

model::Batch TrainSet::batch(std::span<const std::size_t> rows) const {
  model::Batch b;
  const auto n = static_cast<Eigen::Index>(rows.size());
  b.samples.resize(family.samples.rows(), n);
  b.points.resize(points.rows(), n);
  b.t.resize(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto r = static_cast<Eigen::Index>(rows[static_cast<std::size_t>(j)]);
    b.samples.col(j) = family.samples.col(r);
    b.points.col(j) = points.col(r);
    b.t[j] = t[r];
  }
  return b;
}

TrainSet make_train_set(const DataSpec& spec, std::uint64_t seed) {
  if (!(spec.T > 0.0)) throw Error(ErrorKind::ConfigError, "horizon T must be positive");
  TrainSet set;
  set.spec = spec;
  set.family = sample_family(spec.family, spec.n, seed);
  // Collocation points use their own stream so that families are shared across
  // datasets drawn with the same seed.
  std::mt19937_64 rng(model::mix_seed(seed, 0xC011));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int dim = model::point_dim(spec.family.geometry);
  set.points.resize(dim, spec.n);
  set.t.resize(spec.n);
  for (int i = 0; i < spec.n; ++i) {
    switch (spec.family.geometry) {
      case Geometry::interval: set.points(0, i) = unit(rng); break;
      case Geometry::sphere:
        set.points(0, i) = spec.pole_margin + (kPi - 2.0 * spec.pole_margin) * unit(rng);
        set.points(1, i) = 2.0 * kPi * unit(rng);
        break;
      case Geometry::torus:
        set.points(0, i) = 2.0 * kPi * unit(rng);
        set.points(1, i) = 2.0 * kPi * unit(rng);
        break;
    }
    set.t[i] = spec.T * unit(rng);
  }
  return set;
}

std::uint64_t data_key(const DataSpec& spec) {
  io::Fnv1a h;
  h.add(spec.family.hash()).add(std::uint64_t(spec.n)).add(spec.T).add(spec.pole_margin);
  return h.value();
}

void save_train_set(const std::filesystem::path& path, const TrainSet& set, std::uint64_t seed) {
  io::BinaryWriter w;
  w.bytes("SPNNDATA");
  w.u32(1);
  w.u64(data_key(set.spec));
  w.u64(seed);
  w.u32(static_cast<std::uint32_t>(set.family.coeffs.rows()));
  w.u32(static_cast<std::uint32_t>(set.family.samples.rows()));
  w.u32(static_cast<std::uint32_t>(set.points.rows()));
  w.u32(static_cast<std::uint32_t>(set.size()));
  w.matrix_row_major(set.family.coeffs.transpose());
  w.matrix_row_major(set.family.samples.transpose());
  w.matrix_row_major(set.points.transpose());
  w.f64_array(std::span<const double>(set.t.data(), static_cast<std::size_t>(set.t.size())));
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  w.save(path);
}

TrainSet load_or_make_train_set(const std::filesystem::path& path, const DataSpec& spec, std::uint64_t seed) {
  if (std::filesystem::exists(path)) {
    try {
      auto r = io::BinaryReader::load(path);
      r.expect_magic("SPNNDATA");
      if (r.u32() == 1 && r.u64() == data_key(spec) && r.u64() == seed) {
        TrainSet set;
        set.spec = spec;
        set.family.spec = spec.family;
        const auto dim = r.u32(), samples = r.u32(), pdim = r.u32(), n = r.u32();
        set.family.coeffs = r.matrix_row_major(n, dim).transpose();
        set.family.samples = r.matrix_row_major(n, samples).transpose();
        set.points = r.matrix_row_major(n, pdim).transpose();
        set.t.resize(n);
        r.f64_array(std::span<double>(set.t.data(), n));
        if (r.at_end()) return set;
      }
    } catch (const Error&) {
      // unreadable cache: rebuild below
    }
  }
  TrainSet set = make_train_set(spec, seed);
  save_train_set(path, set, seed);
  return set;
}

}  // namespace spinn::train
