#pragma once

#include <Eigen/Dense>

#include <array>
#include <filesystem>
#include <vector>

namespace spinn::bases {

/// Torus of revolution ((R + r cos t) cos p, (R + r cos t) sin p, r sin t) with a
/// uniform n_theta x n_phi parametric grid on [0, 2pi)^2.
struct TorusGeometry {
  double R = 2.0;
  double r = 1.0;
  int n_theta = 15;
  int n_phi = 15;

  void validate() const;
  [[nodiscard]] int vertex_count() const { return n_theta * n_phi; }
  [[nodiscard]] double theta(int i) const;
  [[nodiscard]] double phi(int k) const;
  [[nodiscard]] Eigen::Vector3d embed(double theta, double phi) const;
  [[nodiscard]] double area() const;  // 4 pi^2 R r
};

/// Vertex (i, k) has index i * n_phi + k. Each parametric quad is cut along its
/// (i, k)-(i+1, k+1) diagonal.
struct TorusMesh {
  TorusGeometry geom;
  Eigen::MatrixX3d vertices;
  std::vector<std::array<int, 3>> triangles;

  [[nodiscard]] int vertex_count() const { return static_cast<int>(vertices.rows()); }
  [[nodiscard]] int triangle_count() const { return static_cast<int>(triangles.size()); }
  [[nodiscard]] int edge_count() const;
  [[nodiscard]] int euler_characteristic() const { return vertex_count() - edge_count() + triangle_count(); }
};

TorusMesh build_torus_mesh(const TorusGeometry& geom);

struct FemMatrices {
  Eigen::MatrixXd stiffness;
  Eigen::MatrixXd mass;
};

/// Linear elements on the embedded triangles.
FemMatrices assemble_fem(const TorusMesh& mesh);

struct EigenBasis {
  TorusGeometry geom;
  Eigen::VectorXd eigenvalues;  // ascending
  Eigen::MatrixXd vectors;      // vertices x K, B-orthonormal columns
  Eigen::MatrixXd mass;
  Eigen::MatrixXd stiffness;

  [[nodiscard]] int count() const { return static_cast<int>(eigenvalues.size()); }
  /// Nodal samples -> coefficients, V^T B f.
  [[nodiscard]] Eigen::VectorXd project(const Eigen::VectorXd& nodal) const;
  [[nodiscard]] Eigen::MatrixXd projector() const;
};

/// First K pairs of S v = lambda B v. Throws CholeskyFailure when B is not SPD.
EigenBasis solve_eigenbasis(const Eigen::MatrixXd& stiffness, const Eigen::MatrixXd& mass, int K);

/// Mesh, assemble and solve in one call.
EigenBasis torus_eigenbasis(const TorusGeometry& geom, int K);

/// Vertices and P1 weights of the triangle containing (theta, phi); angles wrap.
struct P1Stencil {
  std::array<int, 3> nodes;
  std::array<double, 3> weights;
};
P1Stencil torus_locate(const TorusGeometry& geom, double theta, double phi);

/// Eigenfunction k (1-based) interpolated at (theta, phi).
double torus_basis_eval(const EigenBasis& basis, int k, double theta, double phi);

/// Interpolates arbitrary nodal values.
double torus_interpolate(const TorusGeometry& geom, const Eigen::VectorXd& nodal, double theta, double phi);

void save_eigenbasis(const std::filesystem::path& path, const EigenBasis& basis);
/// Reads the eigenpairs and reassembles S and B from the stored geometry.
EigenBasis load_eigenbasis(const std::filesystem::path& path);
/// Loads from `path` when it matches (geom, K); otherwise solves and writes it.
EigenBasis load_or_build_eigenbasis(const std::filesystem::path& path, const TorusGeometry& geom, int K);

}  // namespace spinn::bases
