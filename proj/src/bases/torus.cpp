#include "spinn/bases/torus.hpp"

#include "spinn/common/binary_io.hpp"
#include "spinn/common/error.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <string>
#include <utility>

namespace spinn::bases {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr std::string_view kMagic = "SPNNEIGB";
constexpr std::uint32_t kVersion = 1;

int wrap(int i, int n) { return ((i % n) + n) % n; }
}  // namespace

void TorusGeometry::validate() const {
  if (n_theta < 3 || n_phi < 3)
    throw Error(ErrorKind::InvalidGrid, "torus grid needs at least 3x3 vertices, got " + std::to_string(n_theta) +
                                            "x" + std::to_string(n_phi));
  if (!(r > 0.0) || !(R > r)) throw Error(ErrorKind::InvalidGrid, "torus radii need R > r > 0");
}

double TorusGeometry::theta(int i) const { return kTwoPi * i / n_theta; }
double TorusGeometry::phi(int k) const { return kTwoPi * k / n_phi; }

Eigen::Vector3d TorusGeometry::embed(double t, double p) const {
  const double ring = R + r * std::cos(t);
  return {ring * std::cos(p), ring * std::sin(p), r * std::sin(t)};
}

double TorusGeometry::area() const { return 4.0 * std::numbers::pi * std::numbers::pi * R * r; }

int TorusMesh::edge_count() const {
  std::set<std::pair<int, int>> edges;
  for (const auto& t : triangles)
    for (int a = 0; a < 3; ++a) {
      const int u = t[a], v = t[(a + 1) % 3];
      edges.emplace(std::min(u, v), std::max(u, v));
    }
  return static_cast<int>(edges.size());
}

TorusMesh build_torus_mesh(const TorusGeometry& geom) {
  geom.validate();
  TorusMesh mesh;
  mesh.geom = geom;
  const int nt = geom.n_theta, np = geom.n_phi;
  mesh.vertices.resize(nt * np, 3);
  for (int i = 0; i < nt; ++i)
    for (int k = 0; k < np; ++k) mesh.vertices.row(i * np + k) = geom.embed(geom.theta(i), geom.phi(k)).transpose();
  mesh.triangles.reserve(2 * nt * np);
  for (int i = 0; i < nt; ++i)
    for (int k = 0; k < np; ++k) {
      const int v00 = i * np + k;
      const int v10 = wrap(i + 1, nt) * np + k;
      const int v11 = wrap(i + 1, nt) * np + wrap(k + 1, np);
      const int v01 = i * np + wrap(k + 1, np);
      mesh.triangles.push_back({v00, v10, v11});
      mesh.triangles.push_back({v00, v11, v01});
    }
  return mesh;
}

FemMatrices assemble_fem(const TorusMesh& mesh) {
  const int n = mesh.vertex_count();
  FemMatrices fem{Eigen::MatrixXd::Zero(n, n), Eigen::MatrixXd::Zero(n, n)};
  const double scale = std::pow(mesh.geom.R + mesh.geom.r, 2);
  for (const auto& tri : mesh.triangles) {
    std::array<Eigen::Vector3d, 3> p;
    for (int a = 0; a < 3; ++a) p[a] = mesh.vertices.row(tri[a]).transpose();
    // edge opposite vertex a
    std::array<Eigen::Vector3d, 3> e;
    for (int a = 0; a < 3; ++a) e[a] = p[(a + 2) % 3] - p[(a + 1) % 3];
    const double area = 0.5 * e[2].cross(-e[1]).norm();
    if (!(area > 1e-14 * scale)) throw Error(ErrorKind::DegenerateTriangle, "zero-area triangle in torus mesh");
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) {
        fem.stiffness(tri[a], tri[b]) += e[a].dot(e[b]) / (4.0 * area);
        fem.mass(tri[a], tri[b]) += area / 12.0 * (a == b ? 2.0 : 1.0);
      }
  }
  // the row sums vanish analytically; remove the roundoff so constants are an exact kernel
  for (int i = 0; i < n; ++i) {
    double off = 0.0;
    for (int j = 0; j < n; ++j)
      if (j != i) off += fem.stiffness(i, j);
    fem.stiffness(i, i) = -off;
  }
  return fem;
}

Eigen::VectorXd EigenBasis::project(const Eigen::VectorXd& nodal) const {
  if (nodal.size() != vectors.rows())
    throw Error(ErrorKind::ShapeMismatch, "expected " + std::to_string(vectors.rows()) + " nodal values");
  return vectors.transpose() * (mass * nodal);
}

Eigen::MatrixXd EigenBasis::projector() const { return vectors.transpose() * mass; }

EigenBasis solve_eigenbasis(const Eigen::MatrixXd& stiffness, const Eigen::MatrixXd& mass, int K) {
  const Eigen::Index n = stiffness.rows();
  if (stiffness.cols() != n || mass.rows() != n || mass.cols() != n)
    throw Error(ErrorKind::ShapeMismatch, "stiffness and mass must be square and equal-sized");
  if (K < 1 || K > n) throw Error(ErrorKind::InvalidShape, "K must lie in [1, " + std::to_string(n) + "]");

  const Eigen::LLT<Eigen::MatrixXd> llt(mass);
  if (llt.info() != Eigen::Success) throw Error(ErrorKind::CholeskyFailure, "mass matrix is not positive definite");
  // L^{-1} S L^{-T} y = lambda y, v = L^{-T} y
  const Eigen::MatrixXd lower = llt.matrixL();
  Eigen::MatrixXd reduced = lower.triangularView<Eigen::Lower>().solve(stiffness);
  reduced = lower.triangularView<Eigen::Lower>().solve(reduced.transpose()).transpose();
  reduced = 0.5 * (reduced + reduced.transpose());
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(reduced);
  if (es.info() != Eigen::Success) throw Error(ErrorKind::CholeskyFailure, "symmetric eigensolve failed");

  EigenBasis basis;
  basis.eigenvalues = es.eigenvalues().head(K);
  basis.vectors = lower.transpose().triangularView<Eigen::Upper>().solve(es.eigenvectors().leftCols(K));
  const double top = std::max(1.0, std::abs(es.eigenvalues().maxCoeff()));
  for (int k = 0; k < K; ++k) {
    if (std::abs(basis.eigenvalues[k]) < 1e-10 * top) basis.eigenvalues[k] = 0.0;
    auto col = basis.vectors.col(k);
    for (Eigen::Index i = 0; i < n; ++i)
      if (std::abs(col[i]) > 1e-12) {
        if (col[i] < 0) col = -col;
        break;
      }
  }
  basis.mass = mass;
  basis.stiffness = stiffness;
  return basis;
}

EigenBasis torus_eigenbasis(const TorusGeometry& geom, int K) {
  const TorusMesh mesh = build_torus_mesh(geom);
  const FemMatrices fem = assemble_fem(mesh);
  EigenBasis basis = solve_eigenbasis(fem.stiffness, fem.mass, K);
  basis.geom = geom;
  return basis;
}

P1Stencil torus_locate(const TorusGeometry& geom, double theta, double phi) {
  // snap grid coordinates so that vertices return their nodal values exactly
  auto snap = [](double x) { return std::abs(x - std::round(x)) < 1e-9 ? std::round(x) : x; };
  const double u = snap(theta / kTwoPi * geom.n_theta);
  const double v = snap(phi / kTwoPi * geom.n_phi);
  const double fu = std::floor(u), fv = std::floor(v);
  const double s = u - fu, t = v - fv;
  const int i = wrap(static_cast<int>(fu), geom.n_theta), k = wrap(static_cast<int>(fv), geom.n_phi);
  const int np = geom.n_phi;
  const int v00 = i * np + k;
  const int v10 = wrap(i + 1, geom.n_theta) * np + k;
  const int v11 = wrap(i + 1, geom.n_theta) * np + wrap(k + 1, np);
  const int v01 = i * np + wrap(k + 1, np);
  if (s >= t) return {{v00, v10, v11}, {1.0 - s, s - t, t}};
  return {{v00, v11, v01}, {1.0 - t, s, t - s}};
}

double torus_interpolate(const TorusGeometry& geom, const Eigen::VectorXd& nodal, double theta, double phi) {
  const P1Stencil st = torus_locate(geom, theta, phi);
  double sum = 0.0;
  for (int a = 0; a < 3; ++a)
    if (st.weights[a] != 0.0) sum += st.weights[a] * nodal[st.nodes[a]];
  return sum;
}

double torus_basis_eval(const EigenBasis& basis, int k, double theta, double phi) {
  if (k < 1 || k > basis.count())
    throw Error(ErrorKind::InvalidShape, "eigenfunction index " + std::to_string(k) + " outside basis");
  const P1Stencil st = torus_locate(basis.geom, theta, phi);
  double sum = 0.0;
  for (int a = 0; a < 3; ++a)
    if (st.weights[a] != 0.0) sum += st.weights[a] * basis.vectors(st.nodes[a], k - 1);
  return sum;
}

void save_eigenbasis(const std::filesystem::path& path, const EigenBasis& basis) {
  io::BinaryWriter w;
  w.bytes(kMagic);
  w.u32(kVersion);
  w.u32(static_cast<std::uint32_t>(basis.geom.n_theta));
  w.u32(static_cast<std::uint32_t>(basis.geom.n_phi));
  w.f64(basis.geom.R);
  w.f64(basis.geom.r);
  w.u32(static_cast<std::uint32_t>(basis.count()));
  w.f64_array(std::span<const double>(basis.eigenvalues.data(), static_cast<std::size_t>(basis.count())));
  w.matrix_row_major(basis.vectors);
  w.save(path);
}

EigenBasis load_eigenbasis(const std::filesystem::path& path) {
  auto rd = io::BinaryReader::load(path);
  rd.expect_magic(kMagic);
  if (rd.u32() != kVersion) throw Error(ErrorKind::IoError, "unsupported eigenbasis version");
  EigenBasis basis;
  basis.geom.n_theta = static_cast<int>(rd.u32());
  basis.geom.n_phi = static_cast<int>(rd.u32());
  basis.geom.R = rd.f64();
  basis.geom.r = rd.f64();
  const int K = static_cast<int>(rd.u32());
  basis.geom.validate();
  if (K < 1 || K > basis.geom.vertex_count()) throw Error(ErrorKind::IoError, "corrupt eigenbasis size");
  basis.eigenvalues.resize(K);
  rd.f64_array(std::span<double>(basis.eigenvalues.data(), static_cast<std::size_t>(K)));
  basis.vectors = rd.matrix_row_major(basis.geom.vertex_count(), K);
  if (!rd.at_end()) throw Error(ErrorKind::IoError, "trailing bytes in eigenbasis file");
  const FemMatrices fem = assemble_fem(build_torus_mesh(basis.geom));
  basis.mass = fem.mass;
  basis.stiffness = fem.stiffness;
  return basis;
}

EigenBasis load_or_build_eigenbasis(const std::filesystem::path& path, const TorusGeometry& geom, int K) {
  if (std::filesystem::exists(path)) {
    try {
      EigenBasis cached = load_eigenbasis(path);
      if (cached.geom.n_theta == geom.n_theta && cached.geom.n_phi == geom.n_phi && cached.geom.R == geom.R &&
          cached.geom.r == geom.r && cached.count() == K)
        return cached;
    } catch (const Error&) {
      // stale or corrupt cache entry; rebuild below
    }
  }
  EigenBasis basis = torus_eigenbasis(geom, K);
  if (!path.empty()) {
    std::filesystem::create_directories(path.parent_path().empty() ? "." : path.parent_path());
    save_eigenbasis(path, basis);
  }
  return basis;
}

}  // namespace spinn::bases
