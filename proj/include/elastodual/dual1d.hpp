#pragma once

#include <cstdint>

#include "elastodual/mesh1d.hpp"
#include "elastodual/primal1d.hpp"
#include "elastodual/report.hpp"

namespace elastodual {

/// Perturbation modulus of the quadratic split F(u_x) = (K/2) int u_x^2.
struct DualConfig {
  double K = 0.5;

  /// K = EA/2.
  static DualConfig for_bar(const BarModel& m) { return {0.5 * m.ea()}; }
};

/// Dual fields (v1*, v2*, z*), one value per element.
struct DualState1D {
  ElemField v1;
  ElemField v2;
  ElemField z;

  static DualState1D zero(const Grid1D& g) {
    return {ElemField(g.n_elem()), ElemField(g.n_elem()), ElemField(g.n_elem())};
  }
};

// Pointwise densities. `s` denotes v2 + z + K throughout.
double f_star_density(double z, double K) noexcept;
double g_star_k_density(double v1, double v2, double z, double EA, double K);
double dual_density(double v1, double v2, double z, double EA, double K);

/// F*(z) = (1/2K) int z^2 dx.
double f_star(const ElemField& z, const DualConfig& cfg, const Grid1D& g);

/// G*_K(v, z) = 1/2 int v1^2 / (v2 + z + K) + (1/2EA) int (v2 + z)^2.
/// Throws PositivityViolated if v2 + z + K <= 0 on some element.
double g_star_k(const DualState1D& d, const BarModel& m, const DualConfig& cfg);

/// Elementwise v2 + z + K.
ElemField positivity(const DualState1D& d, const DualConfig& cfg);

/// z = K u_x, v2 = EA(u_x + u_x^2/2) - z, v1 = (z + v2 + K) u_x.
/// Throws ConditionViolated unless ||u_x||_inf < 1/4.
DualState1D construct_duals(const BarModel& m, const PrimalState& u0, const DualConfig& cfg);

/// J*(v, z) = F*(z) - G*_K(v, z).
double dual_functional(const DualState1D& d, const BarModel& m, const DualConfig& cfg);

/// Weak equilibrium r_i = int (v1 + v2) phi_i' dx - int P phi_i dx on the
/// interior nodes; boundary entries are zero.
NodalField equilibrium_residual(const DualState1D& d, const BarModel& m);

/// d^2 J*/dz^2 = 1/K - v1^2 / s^3 - 1/EA per element.
ElemField dstar_hessian_z(const DualState1D& d, const BarModel& m, const DualConfig& cfg);

/// Sup norms of the four stationarity conditions of the Lagrangian
/// J*(v, z) - <u, (v1 + v2)' + P>: three pointwise (z, v1, v2) and the weak
/// equilibrium (u).
StationarityResiduals stationarity_residuals(const DualState1D& d, const BarModel& m,
                                             const DualConfig& cfg, const PrimalState& u);

/// Norm on V x V: ||a||_V + ||b||_V.
double norm_VV(const ElemField& a, const ElemField& b);

struct SaddleCounts {
  int samples = 0;
  int passed_z = 0;
  int passed_v = 0;
  /// v-samples rejected because the inner minimiser left the open z-ball.
  int boundary_minima = 0;
  double r1 = 0.0;
  double r2 = 0.0;
};

struct SaddleOptions {
  double tol = 1e-10;
  /// Largest |equilibrium residual| accepted for the centre point.
  double constraint_tol = 1e-9;
};

/// Randomised check of the saddle structure around (v_hat, z_hat):
/// (a) J*(v_hat, z) >= J*(v_hat, z_hat) - tol on B_r1(z_hat);
/// (b) inf_{z in B_r1(z_hat)} J*(v_hat + delta, z) <= J*(v_hat, z_hat) + tol
///     for A*-preserving delta with ||delta||_{VxV} <= r2.
/// Radii are halved until r1 + r2 stays below the positivity margin; the
/// radii used are returned. Throws ConstraintViolated if v_hat is not in A*.
SaddleCounts saddle_verify(const BarModel& m, const PrimalState& u0, const DualState1D& d_hat,
                           const DualConfig& cfg, double r1, double r2, int n_samples,
                           std::uint64_t seed, const SaddleOptions& opts = {});

struct KktResult {
  DualState1D duals;
  PrimalState u;
  int iterations = 0;
  bool converged = false;
  StationarityResiduals residuals;
};

/// Newton on the full stationarity system of the Lagrangian in (v1, v2, z, u).
KktResult kkt_solve(const BarModel& m, const DualConfig& cfg, const DualState1D& init_duals,
                    const PrimalState& init_u, double tol = 1e-12, int max_iterations = 50);

struct CertifyOptions {
  int continuation_steps = 10;
  int max_step_halvings = 30;
  double newton_tol = 1e-12;
  int saddle_samples = 100;
  int local_min_samples = 200;
  double local_min_radius = 1e-3;
  int upper_bound_samples = 100;
  double kkt_perturbation = 1e-3;

  double gap_tol = 1e-10;
  double bound_slack = 1e-12;
  double stationarity_tol = 1e-11;
  double kkt_distance_tol = 1e-8;
  double saddle_tol = 1e-10;
  double local_min_tol = 1e-12;
  double eig_tol = 1e-10;
  double constraint_tol = 1e-9;
};

/// Solve -> construct duals -> gap, bounds, saddle, local-min and KKT checks.
/// `unit_load` is scaled by `amplitude`. Failures are recorded in the report.
GapReport certify(const BarModel& unit_load, double amplitude, std::uint64_t seed,
                  const CertifyOptions& opts = {});

}  // namespace elastodual
