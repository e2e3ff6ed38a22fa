#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "elastodual/mesh1d.hpp"

namespace elastodual {

/// Straight bar on [0, L] with axial load P sampled at element midpoints.
struct BarModel {
  double E = 1.0;
  double A = 1.0;
  Grid1D grid{1.0, 2};
  ElemField load;

  double ea() const noexcept { return E * A; }
  void validate() const;

  /// Same bar with the load multiplied by `factor`.
  BarModel scaled(double factor) const;

  static BarModel sine_load(double E, double A, double L, std::size_t n_elem,
                            double amplitude, int mode = 1);
};

/// Displacement field; u vanishes at both ends.
struct PrimalState {
  NodalField u;

  static PrimalState zero(const Grid1D& g) { return {NodalField(g.n_nodes())}; }
  void validate(const Grid1D& g) const;
};

/// Symmetric tridiagonal operator on the interior nodes 1..n-1.
class Tridiagonal {
 public:
  Tridiagonal() = default;
  Tridiagonal(std::vector<double> diag, std::vector<double> off);

  std::size_t size() const noexcept { return diag_.size(); }
  const std::vector<double>& diag() const noexcept { return diag_; }
  /// off()[i] couples interior unknowns i and i+1.
  const std::vector<double>& off() const noexcept { return off_; }

  /// Product with a nodal field; boundary entries of x are ignored and the
  /// result has zero boundary entries.
  NodalField apply(const NodalField& x) const;

  /// Solves T y = rhs on the interior (Thomas algorithm without pivoting).
  /// Throws SingularHessian when a pivot magnitude drops below `pivot_tol`.
  NodalField solve(const NodalField& rhs, double pivot_tol = 1e-14) const;

  /// Count of eigenvalues strictly below x (Sturm sequence).
  std::size_t count_below(double x) const noexcept;

  /// Smallest eigenvalue by Sturm bisection, to absolute width `tol`.
  double min_eigenvalue(double tol = 1e-13) const;

  Tridiagonal scaled(double s) const;

 private:
  std::vector<double> diag_;
  std::vector<double> off_;
};

/// J(u) = (EA/2) int (u_x + u_x^2/2)^2 dx - int P u dx, midpoint quadrature.
double energy(const BarModel& m, const PrimalState& s);

/// Stored-energy part G(u_x) only.
double stored_energy(const BarModel& m, const PrimalState& s);

/// dJ(u)[phi_i] for each interior node; boundary entries are zero.
NodalField residual(const BarModel& m, const PrimalState& s);

/// Elementwise total axial force EA (u_x + u_x^2/2)(1 + u_x).
ElemField axial_force(const BarModel& m, const ElemField& ux);

/// Tangent coefficient EA [(1 + u_x)^2 + (u_x + u_x^2/2)] per element.
ElemField tangent_coefficient(const BarModel& m, const ElemField& ux);

Tridiagonal hessian(const BarModel& m, const PrimalState& s);

struct NewtonOptions {
  int continuation_steps = 1;
  double tol = 1e-12;
  int max_iterations = 50;
  /// When a stage fails, retry it with half the load increment up to this many
  /// times. Zero gives strict equal increments.
  int max_step_halvings = 0;
  /// Called after each converged stage with the load factor reached; returning
  /// false stops the continuation.
  std::function<bool(const PrimalState&, double load_factor)> on_stage;
};

struct NewtonResult {
  PrimalState state;
  int iterations = 0;
  int stages = 0;
  double load_factor = 0.0;
  double residual_norm = 0.0;
  bool stopped_early = false;
};

NewtonResult solve_newton(const BarModel& m, const NewtonOptions& opts);
PrimalState solve_newton(const BarModel& m, int continuation_steps, double tol);

struct ConditionCheck {
  double norm = 0.0;
  bool satisfied = true;
};

/// ||u_x||_inf and whether it is strictly below 1/4.
ConditionCheck condition_check(const PrimalState& s, const Grid1D& g);

/// Smallest eigenvalue of the second variation on the interior P1 space,
/// measured against the lumped L2 inner product (Hessian divided by h).
double second_variation_min_eig(const BarModel& m, const PrimalState& s,
                                double tol = 1e-13);

}  // namespace elastodual
