#pragma once

#include <Eigen/Sparse>
#include <array>
#include <cstdint>
#include <limits>
#include <vector>

#include "elastodual/report.hpp"
#include "elastodual/tensor3d.hpp"

namespace elastodual {

/// Structured hexahedral mesh of the box [0, lx] x [0, ly] x [0, lz].
/// Node (i, j, k) has index i + (nx + 1) (j + (ny + 1) k). Local node a of an
/// element sits at corner (a & 1, (a >> 1) & 1, (a >> 2) & 1).
class BoxMesh {
 public:
  BoxMesh(double lx, double ly, double lz, int nx, int ny, int nz);

  int nx() const noexcept { return n_[0]; }
  int ny() const noexcept { return n_[1]; }
  int nz() const noexcept { return n_[2]; }
  double length(int axis) const noexcept { return len_[axis]; }
  double h(int axis) const noexcept { return len_[axis] / n_[axis]; }
  double volume() const noexcept { return len_[0] * len_[1] * len_[2]; }

  int n_nodes() const noexcept { return (n_[0] + 1) * (n_[1] + 1) * (n_[2] + 1); }
  int n_elems() const noexcept { return n_[0] * n_[1] * n_[2]; }
  int n_dofs() const noexcept { return 3 * n_nodes(); }

  int node_index(int i, int j, int k) const noexcept {
    return i + (n_[0] + 1) * (j + (n_[1] + 1) * k);
  }
  Vec3 node_coords(int node) const;
  std::array<int, 3> elem_ijk(int e) const noexcept;
  std::array<int, 8> elem_nodes(int e) const noexcept;
  /// Lower corner of element e.
  Vec3 elem_origin(int e) const;

  /// Nodes on the clamped face x = 0.
  bool is_clamped(int node) const noexcept { return node % (n_[0] + 1) == 0; }

 private:
  std::array<double, 3> len_;
  std::array<int, 3> n_;
};

/// Element face: local index 2 * axis + side (side 1 is the upper face).
struct BoundaryFace {
  int elem = 0;
  int local_face = 0;
};

/// Gauss points per element (2x2x2) and per face (2x2).
inline constexpr int kQuadPerElem = 8;
inline constexpr int kQuadPerFace = 4;

/// Box solid clamped on x = 0 with body load per volume quadrature point and
/// traction per quadrature point of the remaining boundary faces.
struct SolidModel {
  BoxMesh mesh{1, 1, 1, 2, 2, 2};
  LameParams lame;
  /// n_elems * kQuadPerElem entries, element-major.
  std::vector<Vec3> body;
  /// faces.size() * kQuadPerFace entries, face-major.
  std::vector<Vec3> traction;
  /// Boundary faces off the clamped face, ordered by element then face.
  std::vector<BoundaryFace> faces;

  /// Unloaded model: zero body force and traction.
  static SolidModel unloaded(const BoxMesh& mesh, const LameParams& lame);

  void set_uniform_body(const Vec3& f);
  /// Uniform traction on the box face `2 * axis + side`; other faces unchanged.
  void set_face_traction(int box_face, const Vec3& t);

  SolidModel scaled(double factor) const;
  void validate() const;
};

/// Three values per node, node-major: (u_x, u_y, u_z) of node n at 3n..3n+2.
struct DisplacementField {
  Eigen::VectorXd values;

  static DisplacementField zero(const BoxMesh& m) {
    return {Eigen::VectorXd::Zero(m.n_dofs())};
  }
  /// Throws unless the size matches and the clamped nodes are fixed.
  void validate(const BoxMesh& m) const;
};

/// Global dof index of each free unknown.
std::vector<int> free_dofs(const BoxMesh& m);
Eigen::VectorXd restrict_to_free(const Eigen::VectorXd& full, const std::vector<int>& free);
Eigen::VectorXd extend_from_free(const Eigen::VectorXd& free_values,
                                 const std::vector<int>& free, int n_dofs);

/// Displacement gradient g(i, j) = u_{i,j} at volume quadrature point q of e.
Mat3 gradient_at(const SolidModel& m, const DisplacementField& u, int e, int q);

/// 1/2 int E : H : E - int f . u - int_{Gamma_1} t . u. `gauss_points` selects
/// the per-axis Gauss rule (1..4); loads are only defined for the 2-point rule.
double energy_3d(const SolidModel& m, const DisplacementField& u, int gauss_points = 2);

/// Consistent load vector; clamped rows zero.
Eigen::VectorXd load_vector(const SolidModel& m);

/// dJ(u)[phi] for every nodal basis function; clamped rows zero.
Eigen::VectorXd residual_3d(const SolidModel& m, const DisplacementField& u);

/// Second variation on the free dofs (material plus geometric stiffness).
Eigen::SparseMatrix<double> hessian_3d(const SolidModel& m, const DisplacementField& u);

/// Smallest eigenvalue of the second variation on the free dofs (dense
/// symmetric eigensolver).
double second_variation_min_eig_3d(const SolidModel& m, const DisplacementField& u);

struct Newton3DOptions {
  int continuation_steps = 1;
  double tol = 1e-11;
  int max_iterations = 50;
  int max_step_halvings = 0;
};

struct Newton3DResult {
  DisplacementField u;
  int iterations = 0;
  int stages = 0;
  double residual_norm = 0.0;
};

/// Load continuation with full Newton steps and a sparse LDL^T solve.
Newton3DResult solve_newton_3d(const SolidModel& m, const Newton3DOptions& opts);
DisplacementField solve_newton_3d(const SolidModel& m, int steps, double tol);

/// max over quadrature points and entries of |u_{i,j}|.
double gradient_sup_norm(const SolidModel& m, const DisplacementField& u);

/// Dual fields at the volume quadrature points, element-major.
struct DualField3D {
  std::vector<DualPoint> points;
};

DualField3D construct_duals_3d(const SolidModel& m, const DisplacementField& u0, double K,
                               V1Order order = V1Order::kLeft);

/// int f*(z) - g*_K(v, z) over the volume quadrature.
double dual_functional_3d(const SolidModel& m, const DualField3D& d, double K);

/// int (v1 + v2) : grad phi - int f . phi - int_{Gamma_1} t . phi for every
/// nodal basis function; clamped rows zero.
Eigen::VectorXd equilibrium_residual_3d(const SolidModel& m, const DualField3D& d);

/// (K/2) int |skew(grad u)|^2.
double skew_defect(const SolidModel& m, const DisplacementField& u, double K);

struct Certify3DOptions {
  int continuation_steps = 4;
  int max_step_halvings = 20;
  double newton_tol = 1e-11;
  /// NaN selects the largest K for which M is positive definite.
  double K = std::numeric_limits<double>::quiet_NaN();
  DeltaMode delta_mode = DeltaMode::kIdentity;
  V1Order v1_order = V1Order::kLeft;

  int local_min_samples = 100;
  double local_min_radius = 1e-4;
  int convexity_samples = 100;

  double gap_tol = 1e-8;
  double constraint_tol = 1e-9;
  double hessian_tol = 1e-10;
  double local_min_tol = 1e-12;
  double eig_tol = 1e-10;
  double convexity_tol = 1e-12;
  double condition_limit = 0.125;
};

/// Solve, pick K, construct the duals at the quadrature points and check the
/// gap, the weak constraints, the z-Hessian bound and the sampled properties.
GapReport certify_3d(const SolidModel& m, std::uint64_t seed, const Certify3DOptions& opts = {});

}  // namespace elastodual
