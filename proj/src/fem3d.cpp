#include "elastodual/fem3d.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <string>

#include "elastodual/errors.hpp"
#include "elastodual/random.hpp"

namespace elastodual {

// ---------------------------------------------------------------------------
// Mesh

BoxMesh::BoxMesh(double lx, double ly, double lz, int nx, int ny, int nz)
    : len_{lx, ly, lz}, n_{nx, ny, nz} {
  for (int a = 0; a < 3; ++a) {
    if (!(len_[a] > 0.0)) throw InvalidModel("box dimensions must be positive");
    if (n_[a] < 2) throw InvalidModel("need at least 2 elements per axis");
  }
}

Vec3 BoxMesh::node_coords(int node) const {
  const int i = node % (n_[0] + 1);
  const int j = (node / (n_[0] + 1)) % (n_[1] + 1);
  const int k = node / ((n_[0] + 1) * (n_[1] + 1));
  // Last node of each axis lands exactly on the box face.
  auto coord = [&](int idx, int axis) {
    return idx == n_[axis] ? len_[axis] : idx * h(axis);
  };
  return {coord(i, 0), coord(j, 1), coord(k, 2)};
}

std::array<int, 3> BoxMesh::elem_ijk(int e) const noexcept {
  return {e % n_[0], (e / n_[0]) % n_[1], e / (n_[0] * n_[1])};
}

std::array<int, 8> BoxMesh::elem_nodes(int e) const noexcept {
  const auto [i, j, k] = elem_ijk(e);
  std::array<int, 8> nodes{};
  for (int a = 0; a < 8; ++a) {
    nodes[a] = node_index(i + (a & 1), j + ((a >> 1) & 1), k + ((a >> 2) & 1));
  }
  return nodes;
}

Vec3 BoxMesh::elem_origin(int e) const {
  const auto [i, j, k] = elem_ijk(e);
  return node_coords(node_index(i, j, k));
}

// ---------------------------------------------------------------------------
// Quadrature and shape functions

namespace {

struct Gauss1D {
  std::vector<double> x;
  std::vector<double> w;
};

Gauss1D gauss_rule(int n) {
  switch (n) {
    case 1: return {{0.0}, {2.0}};
    case 2: {
      const double a = 1.0 / std::sqrt(3.0);
      return {{-a, a}, {1.0, 1.0}};
    }
    case 3: {
      const double a = std::sqrt(0.6);
      return {{-a, 0.0, a}, {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0}};
    }
    case 4: {
      const double a = 0.3399810435848562648, b = 0.8611363115940525752;
      const double wa = 0.6521451548625461426, wb = 0.3478548451374538574;
      return {{-b, -a, a, b}, {wb, wa, wa, wb}};
    }
    default: throw InvalidModel("Gauss rule must have 1 to 4 points");
  }
}

double corner_sign(int a, int axis) { return ((a >> axis) & 1) ? 1.0 : -1.0; }

// Trilinear shape functions and physical gradients at one reference point.
struct ShapeAt {
  std::array<double, 8> N;
  Eigen::Matrix<double, 8, 3> dN;
};

ShapeAt shape_at(const std::array<double, 3>& xi, const BoxMesh& mesh) {
  ShapeAt s;
  for (int a = 0; a < 8; ++a) {
    double f[3];
    for (int d = 0; d < 3; ++d) f[d] = 1.0 + corner_sign(a, d) * xi[d];
    s.N[a] = 0.125 * f[0] * f[1] * f[2];
    for (int d = 0; d < 3; ++d) {
      double p = 0.125 * corner_sign(a, d) * 2.0 / mesh.h(d);
      for (int o = 0; o < 3; ++o) {
        if (o != d) p *= f[o];
      }
      s.dN(a, d) = p;
    }
  }
  return s;
}

struct VolumeRule {
  std::vector<ShapeAt> shape;
  std::vector<double> weight;  // includes the Jacobian
};

// Point q = qx + n qy + n^2 qz.
VolumeRule volume_rule(const BoxMesh& mesh, int n) {
  const Gauss1D g = gauss_rule(n);
  const double det = mesh.h(0) * mesh.h(1) * mesh.h(2) / 8.0;
  VolumeRule r;
  for (int qz = 0; qz < n; ++qz)
    for (int qy = 0; qy < n; ++qy)
      for (int qx = 0; qx < n; ++qx) {
        r.shape.push_back(shape_at({g.x[qx], g.x[qy], g.x[qz]}, mesh));
        r.weight.push_back(g.w[qx] * g.w[qy] * g.w[qz] * det);
      }
  return r;
}

struct FaceRule {
  std::vector<std::array<double, 8>> N;
  std::vector<double> weight;
};

std::array<FaceRule, 6> face_rules(const BoxMesh& mesh) {
  const Gauss1D g = gauss_rule(2);
  std::array<FaceRule, 6> rules;
  for (int f = 0; f < 6; ++f) {
    const int axis = f / 2;
    const int a1 = axis == 0 ? 1 : 0;
    const int a2 = axis == 2 ? 1 : 2;
    const double det = 0.25 * mesh.h(a1) * mesh.h(a2);
    for (int q2 = 0; q2 < 2; ++q2)
      for (int q1 = 0; q1 < 2; ++q1) {
        std::array<double, 3> xi{};
        xi[axis] = (f % 2) ? 1.0 : -1.0;
        xi[a1] = g.x[q1];
        xi[a2] = g.x[q2];
        rules[f].N.push_back(shape_at(xi, mesh).N);
        rules[f].weight.push_back(g.w[q1] * g.w[q2] * det);
      }
  }
  return rules;
}

using ElemDisp = Eigen::Matrix<double, 8, 3>;

ElemDisp gather(const BoxMesh& mesh, const Eigen::VectorXd& u, int e) {
  ElemDisp ue;
  const auto nodes = mesh.elem_nodes(e);
  for (int a = 0; a < 8; ++a)
    for (int i = 0; i < 3; ++i) ue(a, i) = u[3 * nodes[a] + i];
  return ue;
}

Mat3 grad(const ElemDisp& ue, const ShapeAt& s) { return ue.transpose() * s.dN; }

void scatter(const BoxMesh& mesh, int e, const ElemDisp& re, Eigen::VectorXd& r) {
  const auto nodes = mesh.elem_nodes(e);
  for (int a = 0; a < 8; ++a)
    for (int i = 0; i < 3; ++i) r[3 * nodes[a] + i] += re(a, i);
}

void zero_clamped(const BoxMesh& mesh, Eigen::VectorXd& r) {
  for (int n = 0; n < mesh.n_nodes(); ++n) {
    if (mesh.is_clamped(n)) r.segment<3>(3 * n).setZero();
  }
}

double max_abs(const Eigen::VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace

// ---------------------------------------------------------------------------
// Model

SolidModel SolidModel::unloaded(const BoxMesh& mesh, const LameParams& lame) {
  SolidModel m{mesh, lame, {}, {}, {}};
  m.body.assign(static_cast<std::size_t>(mesh.n_elems()) * kQuadPerElem, Vec3::Zero());
  const int n[3] = {mesh.nx(), mesh.ny(), mesh.nz()};
  for (int e = 0; e < mesh.n_elems(); ++e) {
    const auto ijk = mesh.elem_ijk(e);
    for (int f = 0; f < 6; ++f) {
      const int axis = f / 2;
      const bool upper = f % 2;
      const bool on_boundary = upper ? ijk[axis] == n[axis] - 1 : ijk[axis] == 0;
      if (on_boundary && f != 0) m.faces.push_back({e, f});
    }
  }
  m.traction.assign(m.faces.size() * kQuadPerFace, Vec3::Zero());
  return m;
}

void SolidModel::set_uniform_body(const Vec3& f) { std::fill(body.begin(), body.end(), f); }

void SolidModel::set_face_traction(int box_face, const Vec3& t) {
  if (box_face <= 0 || box_face >= 6) throw InvalidModel("traction face must be 1..5");
  for (std::size_t k = 0; k < faces.size(); ++k) {
    if (faces[k].local_face != box_face) continue;
    for (int q = 0; q < kQuadPerFace; ++q) traction[k * kQuadPerFace + q] = t;
  }
}

SolidModel SolidModel::scaled(double factor) const {
  SolidModel m = *this;
  for (auto& f : m.body) f *= factor;
  for (auto& t : m.traction) t *= factor;
  return m;
}

void SolidModel::validate() const {
  lame.validate();
  if (body.size() != static_cast<std::size_t>(mesh.n_elems()) * kQuadPerElem) {
    throw SizeMismatch("body load needs one value per volume quadrature point");
  }
  if (traction.size() != faces.size() * kQuadPerFace) {
    throw SizeMismatch("traction needs one value per boundary quadrature point");
  }
}

void DisplacementField::validate(const BoxMesh& m) const {
  if (values.size() != m.n_dofs()) throw SizeMismatch("displacement size does not match mesh");
  for (int n = 0; n < m.n_nodes(); ++n) {
    if (m.is_clamped(n) && values.segment<3>(3 * n).cwiseAbs().maxCoeff() != 0.0) {
      throw InvalidModel("displacement must vanish on the clamped face");
    }
  }
}

std::vector<int> free_dofs(const BoxMesh& m) {
  std::vector<int> free;
  for (int n = 0; n < m.n_nodes(); ++n) {
    if (m.is_clamped(n)) continue;
    for (int i = 0; i < 3; ++i) free.push_back(3 * n + i);
  }
  return free;
}

Eigen::VectorXd restrict_to_free(const Eigen::VectorXd& full, const std::vector<int>& free) {
  Eigen::VectorXd r(static_cast<Eigen::Index>(free.size()));
  for (std::size_t k = 0; k < free.size(); ++k) r[k] = full[free[k]];
  return r;
}

Eigen::VectorXd extend_from_free(const Eigen::VectorXd& free_values,
                                 const std::vector<int>& free, int n_dofs) {
  Eigen::VectorXd r = Eigen::VectorXd::Zero(n_dofs);
  for (std::size_t k = 0; k < free.size(); ++k) r[free[k]] = free_values[k];
  return r;
}

// ---------------------------------------------------------------------------
// Primal functional and variations

Mat3 gradient_at(const SolidModel& m, const DisplacementField& u, int e, int q) {
  const VolumeRule rule = volume_rule(m.mesh, 2);
  return grad(gather(m.mesh, u.values, e), rule.shape[q]);
}

double energy_3d(const SolidModel& m, const DisplacementField& u, int gauss_points) {
  m.validate();
  u.validate(m.mesh);
  const Tensor4Sym H = hooke(m.lame);
  const VolumeRule rule = volume_rule(m.mesh, gauss_points);
  const bool loaded =
      std::any_of(m.body.begin(), m.body.end(), [](const Vec3& f) { return !f.isZero(0.0); }) ||
      std::any_of(m.traction.begin(), m.traction.end(),
                  [](const Vec3& t) { return !t.isZero(0.0); });
  if (loaded && gauss_points != 2) throw InvalidModel("loads are defined for the 2-point rule");

  double stored = 0.0;
  double work = 0.0;
  for (int e = 0; e < m.mesh.n_elems(); ++e) {
    const ElemDisp ue = gather(m.mesh, u.values, e);
    for (std::size_t q = 0; q < rule.weight.size(); ++q) {
      const SymMat3 E = green_strain(grad(ue, rule.shape[q]));
      stored += 0.5 * rule.weight[q] * E.ddot(H.apply(E));
      if (loaded) {
        Vec3 uq = Vec3::Zero();
        for (int a = 0; a < 8; ++a) uq += rule.shape[q].N[a] * ue.row(a).transpose();
        work += rule.weight[q] * m.body[e * kQuadPerElem + q].dot(uq);
      }
    }
  }
  if (loaded) {
    const auto frules = face_rules(m.mesh);
    for (std::size_t k = 0; k < m.faces.size(); ++k) {
      const ElemDisp ue = gather(m.mesh, u.values, m.faces[k].elem);
      const FaceRule& fr = frules[m.faces[k].local_face];
      for (int q = 0; q < kQuadPerFace; ++q) {
        Vec3 uq = Vec3::Zero();
        for (int a = 0; a < 8; ++a) uq += fr.N[q][a] * ue.row(a).transpose();
        work += fr.weight[q] * m.traction[k * kQuadPerFace + q].dot(uq);
      }
    }
  }
  return stored - work;
}

Eigen::VectorXd load_vector(const SolidModel& m) {
  m.validate();
  const VolumeRule rule = volume_rule(m.mesh, 2);
  Eigen::VectorXd f = Eigen::VectorXd::Zero(m.mesh.n_dofs());
  for (int e = 0; e < m.mesh.n_elems(); ++e) {
    ElemDisp fe = ElemDisp::Zero();
    for (int q = 0; q < kQuadPerElem; ++q) {
      for (int a = 0; a < 8; ++a) {
        fe.row(a) += rule.weight[q] * rule.shape[q].N[a] * m.body[e * kQuadPerElem + q].transpose();
      }
    }
    scatter(m.mesh, e, fe, f);
  }
  const auto frules = face_rules(m.mesh);
  for (std::size_t k = 0; k < m.faces.size(); ++k) {
    const FaceRule& fr = frules[m.faces[k].local_face];
    ElemDisp fe = ElemDisp::Zero();
    for (int q = 0; q < kQuadPerFace; ++q) {
      for (int a = 0; a < 8; ++a) {
        fe.row(a) += fr.weight[q] * fr.N[q][a] * m.traction[k * kQuadPerFace + q].transpose();
      }
    }
    scatter(m.mesh, m.faces[k].elem, fe, f);
  }
  zero_clamped(m.mesh, f);
  return f;
}

Eigen::VectorXd residual_3d(const SolidModel& m, const DisplacementField& u) {
  m.validate();
  u.validate(m.mesh);
  const Tensor4Sym H = hooke(m.lame);
  const VolumeRule rule = volume_rule(m.mesh, 2);
  Eigen::VectorXd r = Eigen::VectorXd::Zero(m.mesh.n_dofs());
  for (int e = 0; e < m.mesh.n_elems(); ++e) {
    const ElemDisp ue = gather(m.mesh, u.values, e);
    ElemDisp re = ElemDisp::Zero();
    for (int q = 0; q < kQuadPerElem; ++q) {
      const Mat3 g = grad(ue, rule.shape[q]);
      const Mat3 P = (Mat3::Identity() + g) * stress(H, g).matrix();
      re += rule.weight[q] * rule.shape[q].dN * P.transpose();
    }
    scatter(m.mesh, e, re, r);
  }
  r -= load_vector(m);
  zero_clamped(m.mesh, r);
  return r;
}

Eigen::SparseMatrix<double> hessian_3d(const SolidModel& m, const DisplacementField& u) {
  m.validate();
  u.validate(m.mesh);
  const Mat6 C = hooke(m.lame).mandel();
  const VolumeRule rule = volume_rule(m.mesh, 2);
  const std::vector<int> free = free_dofs(m.mesh);
  std::vector<int> free_of(m.mesh.n_dofs(), -1);
  for (std::size_t k = 0; k < free.size(); ++k) free_of[free[k]] = static_cast<int>(k);

  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(m.mesh.n_elems()) * 24 * 24);
  for (int e = 0; e < m.mesh.n_elems(); ++e) {
    const ElemDisp ue = gather(m.mesh, u.values, e);
    Eigen::Matrix<double, 24, 24> ke = Eigen::Matrix<double, 24, 24>::Zero();
    for (int q = 0; q < kQuadPerElem; ++q) {
      const ShapeAt& s = rule.shape[q];
      const Mat3 g = grad(ue, s);
      const Mat3 F = Mat3::Identity() + g;
      const Mat3 sigma = SymMat3::from_mandel(C * green_strain(g).mandel()).matrix();
      Eigen::Matrix<double, 6, 24> B;
      for (int a = 0; a < 8; ++a)
        for (int i = 0; i < 3; ++i) {
          const Mat3 d = F.row(i).transpose() * s.dN.row(a);
          B.col(3 * a + i) = SymMat3::from_matrix(d).mandel();
        }
      const Eigen::Matrix<double, 8, 8> geo = s.dN * sigma * s.dN.transpose();
      ke.noalias() += rule.weight[q] * (B.transpose() * C * B);
      for (int a = 0; a < 8; ++a)
        for (int b = 0; b < 8; ++b)
          for (int i = 0; i < 3; ++i) ke(3 * a + i, 3 * b + i) += rule.weight[q] * geo(a, b);
    }
    const auto nodes = m.mesh.elem_nodes(e);
    for (int p = 0; p < 24; ++p) {
      const int gp = free_of[3 * nodes[p / 3] + p % 3];
      if (gp < 0) continue;
      for (int c = 0; c < 24; ++c) {
        const int gc = free_of[3 * nodes[c / 3] + c % 3];
        if (gc < 0) continue;
        // Mirror the upper triangle so the assembled matrix is exactly symmetric.
        trips.emplace_back(gp, gc, p <= c ? ke(p, c) : ke(c, p));
      }
    }
  }
  const auto n = static_cast<Eigen::Index>(free.size());
  Eigen::SparseMatrix<double> H(n, n);
  H.setFromTriplets(trips.begin(), trips.end());
  return H;
}

// ---------------------------------------------------------------------------
// Newton

namespace {

int newton_stage_3d(const SolidModel& model, DisplacementField& u, const std::vector<int>& free,
                    double tol, int max_iterations, double& residual_norm) {
  for (int it = 0;; ++it) {
    const Eigen::VectorXd r = restrict_to_free(residual_3d(model, u), free);
    residual_norm = max_abs(r);
    if (!std::isfinite(residual_norm)) throw NonConvergence("non-finite residual");
    if (residual_norm <= tol) return it;
    if (it >= max_iterations) {
      throw NonConvergence("Newton stage hit " + std::to_string(max_iterations) +
                           " iterations, residual " + std::to_string(residual_norm));
    }
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(hessian_3d(model, u));
    if (ldlt.info() != Eigen::Success) throw SingularSystem("sparse LDL^T factorization failed");
    const Eigen::VectorXd du = ldlt.solve(r);
    if (ldlt.info() != Eigen::Success || !du.allFinite()) {
      throw SingularSystem("sparse LDL^T solve failed");
    }
    u.values -= extend_from_free(du, free, model.mesh.n_dofs());
  }
}

}  // namespace

Newton3DResult solve_newton_3d(const SolidModel& m, const Newton3DOptions& opts) {
  m.validate();
  if (opts.continuation_steps < 1) throw InvalidModel("continuation_steps must be >= 1");
  if (!(opts.tol > 0.0)) throw InvalidModel("tol must be positive");
  const std::vector<int> free = free_dofs(m.mesh);

  Newton3DResult result{DisplacementField::zero(m.mesh)};
  const double nominal = 1.0 / opts.continuation_steps;
  double increment = nominal;
  double factor_reached = 0.0;
  int halvings = 0;
  while (factor_reached < 1.0) {
    const double target = std::min(1.0, factor_reached + increment);
    const double factor = (1.0 - target) < 1e-14 ? 1.0 : target;
    DisplacementField trial = result.u;
    double rnorm = 0.0;
    int iters = 0;
    try {
      iters = newton_stage_3d(m.scaled(factor), trial, free, opts.tol, opts.max_iterations, rnorm);
    } catch (const Error&) {
      if (halvings >= opts.max_step_halvings) throw;
      ++halvings;
      increment *= 0.5;
      continue;
    }
    result.u = std::move(trial);
    result.iterations += iters;
    result.residual_norm = rnorm;
    ++result.stages;
    factor_reached = factor;
    halvings = 0;
    increment = std::min(nominal, 2.0 * increment);
  }
  return result;
}

DisplacementField solve_newton_3d(const SolidModel& m, int steps, double tol) {
  Newton3DOptions o;
  o.continuation_steps = steps;
  o.tol = tol;
  return solve_newton_3d(m, o).u;
}

double gradient_sup_norm(const SolidModel& m, const DisplacementField& u) {
  const VolumeRule rule = volume_rule(m.mesh, 2);
  double s = 0.0;
  for (int e = 0; e < m.mesh.n_elems(); ++e) {
    const ElemDisp ue = gather(m.mesh, u.values, e);
    for (int q = 0; q < kQuadPerElem; ++q) {
      s = std::max(s, grad(ue, rule.shape[q]).cwiseAbs().maxCoeff());
    }
  }
  return s;
}

// ---------------------------------------------------------------------------
// Duals

DualField3D construct_duals_3d(const SolidModel& m, const DisplacementField& u0, double K,
                               V1Order order) {
  m.validate();
  u0.validate(m.mesh);
  const Tensor4Sym H = hooke(m.lame);
  const VolumeRule rule = volume_rule(m.mesh, 2);
  DualField3D d;
  d.points.reserve(static_cast<std::size_t>(m.mesh.n_elems()) * kQuadPerElem);
  for (int e = 0; e < m.mesh.n_elems(); ++e) {
    const ElemDisp ue = gather(m.mesh, u0.values, e);
    for (int q = 0; q < kQuadPerElem; ++q) {
      d.points.push_back(construct_duals_pointwise(H, K, grad(ue, rule.shape[q]), order));
    }
  }
  return d;
}

namespace {

void require_points(const SolidModel& m, const DualField3D& d) {
  if (d.points.size() != static_cast<std::size_t>(m.mesh.n_elems()) * kQuadPerElem) {
    throw SizeMismatch("dual field needs one point per volume quadrature point");
  }
}

}  // namespace

double dual_functional_3d(const SolidModel& m, const DualField3D& d, double K) {
  require_points(m, d);
  const Tensor4Sym hbar = hooke_inverse(m.lame);
  const VolumeRule rule = volume_rule(m.mesh, 2);
  double sum = 0.0;
  for (std::size_t p = 0; p < d.points.size(); ++p) {
    const DualPoint& dp = d.points[p];
    sum += rule.weight[p % kQuadPerElem] * dual_density_3d(dp.v1, dp.v2, dp.z, hbar, K);
  }
  return sum;
}

Eigen::VectorXd equilibrium_residual_3d(const SolidModel& m, const DualField3D& d) {
  require_points(m, d);
  const VolumeRule rule = volume_rule(m.mesh, 2);
  Eigen::VectorXd r = Eigen::VectorXd::Zero(m.mesh.n_dofs());
  for (int e = 0; e < m.mesh.n_elems(); ++e) {
    ElemDisp re = ElemDisp::Zero();
    for (int q = 0; q < kQuadPerElem; ++q) {
      const DualPoint& dp = d.points[e * kQuadPerElem + q];
      const Mat3 T = dp.v1 + dp.v2.matrix();
      re += rule.weight[q] * rule.shape[q].dN * T.transpose();
    }
    scatter(m.mesh, e, re, r);
  }
  r -= load_vector(m);
  zero_clamped(m.mesh, r);
  return r;
}

double skew_defect(const SolidModel& m, const DisplacementField& u, double K) {
  const VolumeRule rule = volume_rule(m.mesh, 2);
  double sum = 0.0;
  for (int e = 0; e < m.mesh.n_elems(); ++e) {
    const ElemDisp ue = gather(m.mesh, u.values, e);
    for (int q = 0; q < kQuadPerElem; ++q) {
      const Mat3 g = grad(ue, rule.shape[q]);
      sum += rule.weight[q] * (0.5 * (g - g.transpose())).squaredNorm();
    }
  }
  return 0.5 * K * sum;
}

// ---------------------------------------------------------------------------
// Certification

namespace {

// Nodal noise on the free dofs scaled to sup|delta| + sup|grad delta| = rho * radius.
Eigen::VectorXd random_perturbation(Rng& rng, const SolidModel& m, const std::vector<int>& free,
                                    double radius) {
  Eigen::VectorXd d = Eigen::VectorXd::Zero(m.mesh.n_dofs());
  for (int k : free) d[k] = rng.symmetric();
  const double norm = max_abs(d) + gradient_sup_norm(m, {d});
  const double scale = norm > 0.0 ? rng.uniform() * radius / norm : 0.0;
  return d * scale;
}

SymMat3 random_sym(Rng& rng, double radius) {
  SymMat3 s;
  for (int k = 0; k < 6; ++k) s[k] = radius * rng.symmetric();
  return s;
}

}  // namespace

double second_variation_min_eig_3d(const SolidModel& m, const DisplacementField& u) {
  const Eigen::MatrixXd dense(hessian_3d(m, u));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NonConvergence("dense eigensolver failed");
  return es.eigenvalues()(0);
}

GapReport certify_3d(const SolidModel& m, std::uint64_t seed, const Certify3DOptions& opts) {
  GapReport rep;
  rep.model = "solid3d";
  rep.seed = seed;
  rep.condition_limit = opts.condition_limit;
  rep.modes["delta_term"] = to_string(opts.delta_mode);
  rep.modes["v1_order"] = to_string(opts.v1_order);
  rep.modes["quadrature"] = "gauss_2x2x2";
  rep.modes["constraint"] = "weak_trilinear";

  try {
    m.validate();
    const Tensor4Sym hbar = hooke_inverse(m.lame);
    Newton3DOptions nopts;
    nopts.continuation_steps = opts.continuation_steps;
    nopts.tol = opts.newton_tol;
    nopts.max_step_halvings = opts.max_step_halvings;
    const Newton3DResult sol = solve_newton_3d(m, nopts);
    const DisplacementField& u0 = sol.u;
    const std::vector<int> free = free_dofs(m.mesh);
    rep.newton_iters = sol.iterations;
    rep.newton_stages = sol.stages;
    rep.J_primal = energy_3d(m, u0);
    const Eigen::VectorXd primal_res = residual_3d(m, u0);
    rep.residual_norm = max_abs(primal_res);

    rep.condition_norm = gradient_sup_norm(m, u0);
    rep.condition_ok = rep.condition_norm < opts.condition_limit;
    rep.add_check("condition", rep.condition_ok, rep.condition_norm, opts.condition_limit);
    if (!rep.condition_ok) {
      rep.status = Status::kHypothesisViolated;
      rep.diagnostics = "||u_ij||_inf >= 1/8 at some quadrature point";
      return rep;
    }
    rep.add_check("newton_residual", rep.residual_norm <= opts.newton_tol, rep.residual_norm,
                  opts.newton_tol);
    rep.min_eig = second_variation_min_eig_3d(m, u0);
    rep.add_check("second_variation", rep.min_eig >= -opts.eig_tol, rep.min_eig, -opts.eig_tol);

    // Admissible K: M positive definite needs K < K_max; the positivity
    // hypothesis needs K >= -2 min eig(sigma).
    const KMaxResult km = k_max_bisection(m.lame, opts.delta_mode);
    const VolumeRule rule = volume_rule(m.mesh, 2);
    const Tensor4Sym H = hooke(m.lame);
    double min_sigma_eig = 0.0;
    for (int e = 0; e < m.mesh.n_elems(); ++e) {
      const ElemDisp ue = gather(m.mesh, u0.values, e);
      for (int q = 0; q < kQuadPerElem; ++q) {
        min_sigma_eig = std::min(min_sigma_eig, stress(H, grad(ue, rule.shape[q])).min_eigenvalue());
      }
    }
    const double k_lower = std::max(0.0, -2.0 * min_sigma_eig);
    rep.extra["K_max"] = km.k_max;
    rep.extra["K_lower"] = k_lower;

    const double K = std::isnan(opts.K) ? km.k_max : opts.K;
    rep.K = K;
    rep.modes["K_source"] = std::isnan(opts.K) ? "bisection" : "user";
    if (!(K > 0.0)) throw InvalidModel("K must be positive");
    const MCheck mc = m_tensor_check(m.lame, K, opts.delta_mode);
    rep.extra["M_min_eig"] = mc.min_eigenvalue;
    rep.add_check("m_tensor", mc.min_eigenvalue > 0.0, mc.min_eigenvalue, 0.0);

    const DualField3D d_hat = construct_duals_3d(m, u0, K, opts.v1_order);
    double margin = std::numeric_limits<double>::infinity();
    for (const DualPoint& dp : d_hat.points) margin = std::min(margin, pd_margin(dp.v2 + dp.z, K));
    rep.min_positivity_margin = margin;
    rep.add_check("positivity", margin >= 0.0, margin, 0.0);
    if (mc.min_eigenvalue <= 0.0 || margin < 0.0) {
      rep.status = Status::kNoAdmissibleK;
      rep.diagnostics = k_lower >= km.k_max
                            ? "no admissible K: positivity needs K >= " + std::to_string(k_lower) +
                                  " but M is positive definite only for K < " +
                                  std::to_string(km.k_max)
                            : "K = " + std::to_string(K) + " outside the admissible interval [" +
                                  std::to_string(k_lower) + ", " + std::to_string(km.k_max) + ")";
      return rep;
    }

    rep.J_dual = dual_functional_3d(m, d_hat, K);
    rep.gap = rep.J_primal - rep.J_dual;
    const double rel_gap = rep.gap == 0.0 ? 0.0 : std::abs(rep.gap) / std::abs(rep.J_primal);
    rep.extra["relative_gap"] = rel_gap;
    rep.add_check("zero_gap", rel_gap <= opts.gap_tol, rel_gap, opts.gap_tol);
    const double skew = skew_defect(m, u0, K);
    rep.extra["skew_defect"] = skew;

    const Eigen::VectorXd dual_res = equilibrium_residual_3d(m, d_hat);
    rep.constraint_residual_norm = max_abs(dual_res);
    rep.extra["constraint_minus_primal_residual"] = max_abs(dual_res - primal_res);
    rep.add_check("constraint", rep.constraint_residual_norm <= opts.constraint_tol,
                  rep.constraint_residual_norm, opts.constraint_tol);

    StationarityResiduals st{0.0, 0.0, 0.0, rep.constraint_residual_norm};
    double hz_min = std::numeric_limits<double>::infinity();
    for (std::size_t p = 0; p < d_hat.points.size(); ++p) {
      const DualPoint& dp = d_hat.points[p];
      const int e = static_cast<int>(p / kQuadPerElem);
      const Mat3 g = grad(gather(m.mesh, u0.values, e), rule.shape[p % kQuadPerElem]);
      const PointStationarity ps = point_stationarity(dp, g, hbar, K);
      st.z = std::max(st.z, ps.z);
      st.v1 = std::max(st.v1, ps.v1);
      st.v2 = std::max(st.v2, ps.v2);
      hz_min = std::min(hz_min, dstar_hessian_z_3d(dp.v1, dp.v2, dp.z, hbar, K).min_eigenvalue());
    }
    rep.stationarity = st;
    rep.min_hessian_z = hz_min;
    rep.add_check("hessian_z_bound", hz_min >= mc.min_eigenvalue - opts.hessian_tol, hz_min,
                  mc.min_eigenvalue - opts.hessian_tol);

    Rng rng(seed);
    rep.local_min_samples = opts.local_min_samples;
    for (int k = 0; k < opts.local_min_samples; ++k) {
      const Eigen::VectorXd delta = random_perturbation(rng, m, free, opts.local_min_radius);
      if (energy_3d(m, {u0.values + delta}) >= rep.J_primal - opts.local_min_tol) {
        ++rep.local_min_passed;
      }
    }
    rep.add_check("local_min", rep.local_min_passed == rep.local_min_samples,
                  rep.local_min_passed, rep.local_min_samples);

    // Midpoint convexity in z on a ball that keeps v2 + z + K I positive definite.
    rep.r1 = std::min(1e-2, K / 16.0);
    rep.saddle_samples = opts.convexity_samples;
    for (int k = 0; k < opts.convexity_samples; ++k) {
      DualField3D a = d_hat, b = d_hat, mid = d_hat;
      for (std::size_t p = 0; p < d_hat.points.size(); ++p) {
        a.points[p].z += random_sym(rng, rep.r1);
        b.points[p].z += random_sym(rng, rep.r1);
        mid.points[p].z = 0.5 * (a.points[p].z + b.points[p].z);
      }
      const double lhs = dual_functional_3d(m, mid, K);
      const double rhs = 0.5 * (dual_functional_3d(m, a, K) + dual_functional_3d(m, b, K));
      if (lhs <= rhs + opts.convexity_tol) ++rep.passed_z;
    }
    rep.add_check("z_convexity", rep.passed_z == rep.saddle_samples, rep.passed_z,
                  rep.saddle_samples);

    rep.finalize();
  } catch (const Error& e) {
    rep.status = Status::kSolverError;
    rep.diagnostics += e.what();
  }
  return rep;
}

}  // namespace elastodual
