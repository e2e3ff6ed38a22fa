#include "elastodual/primal1d.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "elastodual/errors.hpp"

namespace elastodual {

void BarModel::validate() const {
  if (!(E > 0.0) || !(A > 0.0)) throw InvalidModel("E and A must be positive");
  if (load.size() != grid.n_elem()) {
    throw SizeMismatch("load has " + std::to_string(load.size()) + " entries, grid has " +
                       std::to_string(grid.n_elem()) + " elements");
  }
}

BarModel BarModel::scaled(double factor) const {
  BarModel m = *this;
  m.load *= factor;
  return m;
}

BarModel BarModel::sine_load(double E, double A, double L, std::size_t n_elem,
                             double amplitude, int mode) {
  Grid1D grid(L, n_elem);
  const double k = mode * std::numbers::pi / L;
  ElemField load = sample_midpoints(grid, [&](double x) { return amplitude * std::sin(k * x); });
  BarModel m{E, A, grid, std::move(load)};
  m.validate();
  return m;
}

void PrimalState::validate(const Grid1D& g) const {
  if (u.size() != g.n_nodes()) throw SizeMismatch("state size does not match grid");
  if (u[0] != 0.0 || u[u.size() - 1] != 0.0) {
    throw InvalidModel("displacement must vanish at both ends");
  }
}

// ---------------------------------------------------------------------------
// Tridiagonal

Tridiagonal::Tridiagonal(std::vector<double> diag, std::vector<double> off)
    : diag_(std::move(diag)), off_(std::move(off)) {
  if (!diag_.empty() && off_.size() + 1 != diag_.size()) {
    throw SizeMismatch("tridiagonal off-diagonal must have n-1 entries");
  }
}

NodalField Tridiagonal::apply(const NodalField& x) const {
  const std::size_t m = size();
  detail::require_same_size(x.size(), m + 2, "Tridiagonal::apply");
  NodalField y(m + 2);
  for (std::size_t i = 0; i < m; ++i) {
    double v = diag_[i] * x[i + 1];
    if (i > 0) v += off_[i - 1] * x[i];
    if (i + 1 < m) v += off_[i] * x[i + 2];
    y[i + 1] = v;
  }
  return y;
}

NodalField Tridiagonal::solve(const NodalField& rhs, double pivot_tol) const {
  const std::size_t m = size();
  detail::require_same_size(rhs.size(), m + 2, "Tridiagonal::solve");
  std::vector<double> c(m), d(m);
  double pivot = diag_[0];
  if (std::abs(pivot) < pivot_tol) throw SingularHessian("zero pivot at row 0");
  c[0] = m > 1 ? off_[0] / pivot : 0.0;
  d[0] = rhs[1] / pivot;
  for (std::size_t i = 1; i < m; ++i) {
    pivot = diag_[i] - off_[i - 1] * c[i - 1];
    if (std::abs(pivot) < pivot_tol) {
      throw SingularHessian("pivot " + std::to_string(pivot) + " at row " + std::to_string(i));
    }
    c[i] = i + 1 < m ? off_[i] / pivot : 0.0;
    d[i] = (rhs[i + 1] - off_[i - 1] * d[i - 1]) / pivot;
  }
  NodalField y(m + 2);
  y[m] = d[m - 1];
  for (std::size_t i = m - 1; i-- > 0;) y[i + 1] = d[i] - c[i] * y[i + 2];
  return y;
}

std::size_t Tridiagonal::count_below(double x) const noexcept {
  std::size_t count = 0;
  double q = 1.0;
  const double tiny = 1e-300;
  for (std::size_t i = 0; i < size(); ++i) {
    q = diag_[i] - x - (i > 0 ? off_[i - 1] * off_[i - 1] / q : 0.0);
    if (q == 0.0) q = -tiny;
    if (q < 0.0) ++count;
  }
  return count;
}

double Tridiagonal::min_eigenvalue(double tol) const {
  if (size() == 0) throw SizeMismatch("empty tridiagonal");
  double lo = diag_[0], hi = diag_[0];
  for (std::size_t i = 0; i < size(); ++i) {
    const double radius = (i > 0 ? std::abs(off_[i - 1]) : 0.0) +
                          (i < off_.size() ? std::abs(off_[i]) : 0.0);
    lo = std::min(lo, diag_[i] - radius);
    hi = std::max(hi, diag_[i] + radius);
  }
  for (int it = 0; it < 400; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (hi - lo <= tol * std::max(1.0, std::abs(mid)) || mid == lo || mid == hi) {
      return mid;
    }
    if (count_below(mid) >= 1) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  throw NonConvergence("Sturm bisection did not converge");
}

Tridiagonal Tridiagonal::scaled(double s) const {
  Tridiagonal t = *this;
  for (auto& v : t.diag_) v *= s;
  for (auto& v : t.off_) v *= s;
  return t;
}

// ---------------------------------------------------------------------------
// Energy and variations

namespace {

double green(double ux) { return ux + 0.5 * ux * ux; }

double max_abs(const NodalField& r) { return norm_inf(r); }

}  // namespace

double stored_energy(const BarModel& m, const PrimalState& s) {
  const ElemField ux = derivative(s.u, m.grid);
  double sum = 0.0;
  for (double w : ux) sum += green(w) * green(w);
  return 0.5 * m.ea() * sum * m.grid.h();
}

double energy(const BarModel& m, const PrimalState& s) {
  const ElemField mid = midpoint_values(s.u, m.grid);
  double work = 0.0;
  for (std::size_t e = 0; e < mid.size(); ++e) work += m.load[e] * mid[e];
  return stored_energy(m, s) - work * m.grid.h();
}

ElemField axial_force(const BarModel& m, const ElemField& ux) {
  ElemField n(ux.size());
  for (std::size_t e = 0; e < ux.size(); ++e) n[e] = m.ea() * green(ux[e]) * (1.0 + ux[e]);
  return n;
}

ElemField tangent_coefficient(const BarModel& m, const ElemField& ux) {
  ElemField c(ux.size());
  for (std::size_t e = 0; e < ux.size(); ++e) {
    c[e] = m.ea() * ((1.0 + ux[e]) * (1.0 + ux[e]) + green(ux[e]));
  }
  return c;
}

NodalField residual(const BarModel& m, const PrimalState& s) {
  m.validate();
  const Grid1D& g = m.grid;
  const ElemField n = axial_force(m, derivative(s.u, g));
  const double h = g.h();
  NodalField r(g.n_nodes());
  for (std::size_t i = 1; i + 1 < g.n_nodes(); ++i) {
    r[i] = (n[i - 1] - n[i]) - 0.5 * h * (m.load[i - 1] + m.load[i]);
  }
  return r;
}

Tridiagonal hessian(const BarModel& m, const PrimalState& s) {
  const Grid1D& g = m.grid;
  const ElemField c = tangent_coefficient(m, derivative(s.u, g));
  const std::size_t interior = g.n_nodes() - 2;
  std::vector<double> diag(interior), off(interior > 0 ? interior - 1 : 0);
  const double inv_h = 1.0 / g.h();
  for (std::size_t i = 0; i < interior; ++i) {
    diag[i] = (c[i] + c[i + 1]) * inv_h;
    if (i + 1 < interior) off[i] = -c[i + 1] * inv_h;
  }
  return {std::move(diag), std::move(off)};
}

// ---------------------------------------------------------------------------
// Newton with load continuation

namespace {

// Newton iterations at a fixed load level; returns the iteration count.
int newton_stage(const BarModel& model, PrimalState& s, double tol, int max_iterations,
                 double& residual_norm) {
  for (int it = 0;; ++it) {
    const NodalField r = residual(model, s);
    residual_norm = max_abs(r);
    if (!std::isfinite(residual_norm)) throw NonConvergence("non-finite residual");
    if (residual_norm <= tol) return it;
    if (it >= max_iterations) {
      throw NonConvergence("Newton stage hit " + std::to_string(max_iterations) +
                           " iterations, residual " + std::to_string(residual_norm));
    }
    const NodalField du = hessian(model, s).solve(r);
    const std::size_t last = s.u.size() - 1;
    for (std::size_t i = 1; i < last; ++i) s.u[i] -= du[i];
  }
}

}  // namespace

NewtonResult solve_newton(const BarModel& m, const NewtonOptions& opts) {
  m.validate();
  if (opts.continuation_steps < 1) throw InvalidModel("continuation_steps must be >= 1");
  if (!(opts.tol > 0.0)) throw InvalidModel("tol must be positive");

  NewtonResult result{PrimalState::zero(m.grid)};
  const double nominal = 1.0 / opts.continuation_steps;
  double increment = nominal;
  int halvings = 0;
  while (result.load_factor < 1.0) {
    const double target = std::min(1.0, result.load_factor + increment);
    // Land exactly on 1 once the remaining span is below rounding.
    const double factor = (1.0 - target) < 1e-14 ? 1.0 : target;
    PrimalState trial = result.state;
    double rnorm = 0.0;
    int iters = 0;
    try {
      iters = newton_stage(m.scaled(factor), trial, opts.tol, opts.max_iterations, rnorm);
    } catch (const Error&) {
      if (halvings >= opts.max_step_halvings) throw;
      ++halvings;
      increment *= 0.5;
      continue;
    }
    result.state = std::move(trial);
    result.iterations += iters;
    result.residual_norm = rnorm;
    result.load_factor = factor;
    ++result.stages;
    halvings = 0;
    increment = std::min(nominal, 2.0 * increment);
    if (opts.on_stage && !opts.on_stage(result.state, factor)) {
      result.stopped_early = factor < 1.0;
      break;
    }
  }
  return result;
}

PrimalState solve_newton(const BarModel& m, int continuation_steps, double tol) {
  NewtonOptions opts;
  opts.continuation_steps = continuation_steps;
  opts.tol = tol;
  return solve_newton(m, opts).state;
}

ConditionCheck condition_check(const PrimalState& s, const Grid1D& g) {
  const double n = norm_V(derivative(s.u, g));
  return {n, n < 0.25};
}

double second_variation_min_eig(const BarModel& m, const PrimalState& s, double tol) {
  return hessian(m, s).scaled(1.0 / m.grid.h()).min_eigenvalue(tol);
}

}  // namespace elastodual
