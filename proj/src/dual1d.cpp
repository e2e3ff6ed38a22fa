#include "elastodual/dual1d.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "elastodual/errors.hpp"
#include "elastodual/random.hpp"

namespace elastodual {

// ---------------------------------------------------------------------------
// Densities

double f_star_density(double z, double K) noexcept { return z * z / (2.0 * K); }

double g_star_k_density(double v1, double v2, double z, double EA, double K) {
  const double s = v2 + z + K;
  if (!(s > 0.0)) throw PositivityViolated(0, s);
  const double t = v2 + z;
  return 0.5 * v1 * v1 / s + t * t / (2.0 * EA);
}

double dual_density(double v1, double v2, double z, double EA, double K) {
  return f_star_density(z, K) - g_star_k_density(v1, v2, z, EA, K);
}

namespace {

void require_sizes(const DualState1D& d, const Grid1D& g) {
  const std::size_t n = g.n_elem();
  if (d.v1.size() != n || d.v2.size() != n || d.z.size() != n) {
    throw SizeMismatch("dual state does not match grid");
  }
}

// First derivatives of the dual density.
struct DensityGradient {
  double v1, v2, z;
};

DensityGradient density_gradient(double v1, double v2, double z, double EA, double K) {
  const double s = v2 + z + K;
  const double t = v2 + z;
  const double half_sq = 0.5 * v1 * v1 / (s * s);
  return {-v1 / s, half_sq - t / EA, z / K + half_sq - t / EA};
}

}  // namespace

// ---------------------------------------------------------------------------
// Functionals

double f_star(const ElemField& z, const DualConfig& cfg, const Grid1D& g) {
  if (!(cfg.K > 0.0)) throw InvalidModel("K must be positive");
  detail::require_same_size(z.size(), g.n_elem(), "f_star");
  double sum = 0.0;
  for (double v : z) sum += v * v;
  return sum * g.h() / (2.0 * cfg.K);
}

ElemField positivity(const DualState1D& d, const DualConfig& cfg) {
  ElemField s(d.z.size());
  for (std::size_t e = 0; e < s.size(); ++e) s[e] = d.v2[e] + d.z[e] + cfg.K;
  return s;
}

double g_star_k(const DualState1D& d, const BarModel& m, const DualConfig& cfg) {
  require_sizes(d, m.grid);
  const double EA = m.ea();
  double sum = 0.0;
  for (std::size_t e = 0; e < d.z.size(); ++e) {
    const double s = d.v2[e] + d.z[e] + cfg.K;
    if (!(s > 0.0)) throw PositivityViolated(e, s);
    const double t = d.v2[e] + d.z[e];
    sum += 0.5 * d.v1[e] * d.v1[e] / s + t * t / (2.0 * EA);
  }
  return sum * m.grid.h();
}

DualState1D construct_duals(const BarModel& m, const PrimalState& u0, const DualConfig& cfg) {
  const ConditionCheck cond = condition_check(u0, m.grid);
  if (!cond.satisfied) {
    throw ConditionViolated("||u_x||_inf = " + std::to_string(cond.norm) + " is not below 1/4");
  }
  const ElemField ux = derivative(u0.u, m.grid);
  DualState1D d = DualState1D::zero(m.grid);
  for (std::size_t e = 0; e < ux.size(); ++e) {
    const double w = ux[e];
    d.z[e] = cfg.K * w;
    d.v2[e] = m.ea() * (w + 0.5 * w * w) - d.z[e];
    d.v1[e] = (d.z[e] + d.v2[e] + cfg.K) * w;
  }
  return d;
}

double dual_functional(const DualState1D& d, const BarModel& m, const DualConfig& cfg) {
  return f_star(d.z, cfg, m.grid) - g_star_k(d, m, cfg);
}

NodalField equilibrium_residual(const DualState1D& d, const BarModel& m) {
  require_sizes(d, m.grid);
  m.validate();
  const Grid1D& g = m.grid;
  NodalField r(g.n_nodes());
  for (std::size_t i = 1; i + 1 < g.n_nodes(); ++i) {
    const double left = d.v1[i - 1] + d.v2[i - 1];
    const double right = d.v1[i] + d.v2[i];
    r[i] = (left - right) - 0.5 * g.h() * (m.load[i - 1] + m.load[i]);
  }
  return r;
}

ElemField dstar_hessian_z(const DualState1D& d, const BarModel& m, const DualConfig& cfg) {
  require_sizes(d, m.grid);
  ElemField hz(d.z.size());
  for (std::size_t e = 0; e < hz.size(); ++e) {
    const double s = d.v2[e] + d.z[e] + cfg.K;
    if (!(s > 0.0)) throw PositivityViolated(e, s);
    hz[e] = 1.0 / cfg.K - d.v1[e] * d.v1[e] / (s * s * s) - 1.0 / m.ea();
  }
  return hz;
}

StationarityResiduals stationarity_residuals(const DualState1D& d, const BarModel& m,
                                             const DualConfig& cfg, const PrimalState& u) {
  require_sizes(d, m.grid);
  const ElemField ux = derivative(u.u, m.grid);
  StationarityResiduals res{0.0, 0.0, 0.0, 0.0};
  for (std::size_t e = 0; e < ux.size(); ++e) {
    const double s = d.v2[e] + d.z[e] + cfg.K;
    if (!(s > 0.0)) throw PositivityViolated(e, s);
    const DensityGradient gr = density_gradient(d.v1[e], d.v2[e], d.z[e], m.ea(), cfg.K);
    res.z = std::max(res.z, std::abs(gr.z));
    res.v1 = std::max(res.v1, std::abs(gr.v1 + ux[e]));
    res.v2 = std::max(res.v2, std::abs(gr.v2 + ux[e]));
  }
  res.u = norm_inf(equilibrium_residual(d, m));
  return res;
}

double norm_VV(const ElemField& a, const ElemField& b) { return norm_V(a) + norm_V(b); }

// ---------------------------------------------------------------------------
// Saddle sampling

namespace {

// Perturbation with sup norm rho * radius, rho uniform in [0, 1).
ElemField ball_sample(Rng& rng, std::size_t n, double radius) {
  ElemField xi(n);
  for (auto& v : xi) v = rng.symmetric();
  const double peak = norm_V(xi);
  const double scale = peak > 0.0 ? rng.uniform() * radius / peak : 0.0;
  return xi * scale;
}

struct InnerMin {
  double z = 0.0;
  bool interior = false;
};

// Minimises the dual density in z for fixed (v1, v2) by Newton, starting at
// the ball centre.
InnerMin inner_z_min(double v1, double v2, double z_centre, double radius, double EA, double K) {
  double z = z_centre;
  for (int it = 0; it < 60; ++it) {
    const double s = v2 + z + K;
    if (!(s > 0.0)) return {z, false};
    const double grad = density_gradient(v1, v2, z, EA, K).z;
    const double curv = 1.0 / K - v1 * v1 / (s * s * s) - 1.0 / EA;
    if (!(curv > 0.0)) return {z, false};
    const double step = grad / curv;
    z -= step;
    if (std::abs(step) <= 1e-16 * (1.0 + std::abs(z))) break;
  }
  return {z, std::abs(z - z_centre) < radius};
}

}  // namespace

SaddleCounts saddle_verify(const BarModel& m, const PrimalState& u0, const DualState1D& d_hat,
                           const DualConfig& cfg, double r1, double r2, int n_samples,
                           std::uint64_t seed, const SaddleOptions& opts) {
  require_sizes(d_hat, m.grid);
  if (r1 < 0.0 || r2 < 0.0) throw InvalidModel("radii must be non-negative");
  const double constraint = norm_inf(equilibrium_residual(d_hat, m));
  if (constraint > opts.constraint_tol) {
    throw ConstraintViolated("centre point is not in A*: equilibrium residual " +
                             std::to_string(constraint));
  }
  u0.validate(m.grid);

  const ElemField pos = positivity(d_hat, cfg);
  const double margin = *std::min_element(pos.begin(), pos.end());
  if (!(margin > 0.0)) throw PositivityViolated(0, margin);
  while (r1 + r2 >= margin) {
    r1 *= 0.5;
    r2 *= 0.5;
  }

  SaddleCounts counts;
  counts.samples = n_samples;
  counts.r1 = r1;
  counts.r2 = r2;
  if (r1 == 0.0 && r2 == 0.0) {
    counts.passed_z = counts.passed_v = n_samples;
    return counts;
  }

  const std::size_t n = m.grid.n_elem();
  const double h = m.grid.h();
  const double EA = m.ea();
  const double centre = dual_functional(d_hat, m, cfg);

  // Samples are drawn up front so the outcome does not depend on evaluation
  // order.
  Rng rng(seed);
  std::vector<ElemField> z_samples, d1_samples, d2_samples;
  for (int k = 0; k < n_samples; ++k) z_samples.push_back(ball_sample(rng, n, r1));
  for (int k = 0; k < n_samples; ++k) {
    // A*-preserving: d1 + d2 is constant. Each piece is at most r2/3 so that
    // ||d1||_V + ||d2||_V <= r2.
    const double rho = rng.uniform();
    const double a = rho * r2 / 3.0;
    const double c = a * rng.symmetric();
    ElemField d1(n), d2(n);
    for (std::size_t e = 0; e < n; ++e) {
      d1[e] = a * rng.symmetric();
      d2[e] = c - d1[e];
    }
    d1_samples.push_back(std::move(d1));
    d2_samples.push_back(std::move(d2));
  }

  for (const ElemField& dz : z_samples) {
    if (r1 == 0.0) {
      ++counts.passed_z;
      continue;
    }
    DualState1D d = d_hat;
    d.z += dz;
    if (dual_functional(d, m, cfg) >= centre - opts.tol) ++counts.passed_z;
  }

  for (int k = 0; k < n_samples; ++k) {
    if (r2 == 0.0) {
      ++counts.passed_v;
      continue;
    }
    double inf_value = 0.0;
    bool interior = true;
    for (std::size_t e = 0; e < n; ++e) {
      const double v1 = d_hat.v1[e] + d1_samples[k][e];
      const double v2 = d_hat.v2[e] + d2_samples[k][e];
      const InnerMin best = inner_z_min(v1, v2, d_hat.z[e], r1, EA, cfg.K);
      if (!best.interior) {
        interior = false;
        break;
      }
      inf_value += dual_density(v1, v2, best.z, EA, cfg.K);
    }
    if (!interior) {
      ++counts.boundary_minima;
      continue;
    }
    if (inf_value * h <= centre + opts.tol) ++counts.passed_v;
  }
  return counts;
}

// ---------------------------------------------------------------------------
// KKT Newton

KktResult kkt_solve(const BarModel& m, const DualConfig& cfg, const DualState1D& init_duals,
                    const PrimalState& init_u, double tol, int max_iterations) {
  require_sizes(init_duals, m.grid);
  init_u.validate(m.grid);
  const std::size_t n = m.grid.n_elem();
  const std::size_t n_int = n - 1;
  const std::size_t dim = 3 * n + n_int;
  const double h = m.grid.h();
  const double EA = m.ea();
  const double K = cfg.K;

  KktResult res;
  res.duals = init_duals;
  res.u = init_u;
  auto v1_idx = [](std::size_t e) { return e; };
  auto v2_idx = [n](std::size_t e) { return n + e; };
  auto z_idx = [n](std::size_t e) { return 2 * n + e; };
  auto u_idx = [n](std::size_t node) { return 3 * n + node - 1; };

  for (int it = 0;; ++it) {
    res.residuals = stationarity_residuals(res.duals, m, cfg, res.u);
    if (res.residuals.max() <= tol) {
      res.converged = true;
      res.iterations = it;
      return res;
    }
    if (it >= max_iterations) {
      res.iterations = it;
      throw NonConvergence("KKT Newton hit " + std::to_string(max_iterations) +
                           " iterations, residual " + std::to_string(res.residuals.max()));
    }

    const ElemField ux = derivative(res.u.u, m.grid);
    const NodalField eq = equilibrium_residual(res.duals, m);
    Eigen::VectorXd rhs(dim);
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(13 * n);
    for (std::size_t e = 0; e < n; ++e) {
      const double v1 = res.duals.v1[e];
      const double v2 = res.duals.v2[e];
      const double z = res.duals.z[e];
      const double s = v2 + z + K;
      const DensityGradient gr = density_gradient(v1, v2, z, EA, K);
      rhs[v1_idx(e)] = -h * (gr.v1 + ux[e]);
      rhs[v2_idx(e)] = -h * (gr.v2 + ux[e]);
      rhs[z_idx(e)] = -h * gr.z;

      const double q = v1 * v1 / (s * s * s);
      const double mixed = v1 / (s * s);
      const double tt = -q - 1.0 / EA;
      const std::size_t idx[3] = {v1_idx(e), v2_idx(e), z_idx(e)};
      const double block[3][3] = {{-1.0 / s, mixed, mixed},
                                  {mixed, tt, tt},
                                  {mixed, tt, 1.0 / K + tt}};
      for (int a = 0; a < 3; ++a) {
        for (int b = 0; b < 3; ++b) triplets.emplace_back(idx[a], idx[b], h * block[a][b]);
      }
      // d(u_x[e])/du at nodes e (left, -1/h) and e+1 (right, +1/h), times h.
      const std::size_t left = e, right = e + 1;
      for (std::size_t dv : {v1_idx(e), v2_idx(e)}) {
        if (left >= 1) {
          triplets.emplace_back(dv, u_idx(left), -1.0);
          triplets.emplace_back(u_idx(left), dv, -1.0);
        }
        if (right <= n_int) {
          triplets.emplace_back(dv, u_idx(right), 1.0);
          triplets.emplace_back(u_idx(right), dv, 1.0);
        }
      }
    }
    for (std::size_t node = 1; node <= n_int; ++node) rhs[u_idx(node)] = -eq[node];

    Eigen::SparseMatrix<double> jac(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    jac.setFromTriplets(triplets.begin(), triplets.end());
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(jac);
    if (lu.info() != Eigen::Success) throw SingularKKTMatrix("KKT factorisation failed");
    const Eigen::VectorXd dx = lu.solve(rhs);
    if (lu.info() != Eigen::Success || !dx.allFinite()) {
      throw SingularKKTMatrix("KKT solve failed");
    }
    for (std::size_t e = 0; e < n; ++e) {
      res.duals.v1[e] += dx[v1_idx(e)];
      res.duals.v2[e] += dx[v2_idx(e)];
      res.duals.z[e] += dx[z_idx(e)];
    }
    for (std::size_t node = 1; node <= n_int; ++node) res.u.u[node] += dx[u_idx(node)];
  }
}

// ---------------------------------------------------------------------------
// Certification

namespace {

// Random element of U with ||delta||_U = rho * radius, rho uniform in [0, 1):
// a few sine modes plus nodal noise, zero at both ends.
NodalField random_u_perturbation(Rng& rng, const Grid1D& g, double radius) {
  NodalField d(g.n_nodes());
  const double pi = 3.14159265358979323846;
  double amp[4];
  for (double& a : amp) a = rng.symmetric();
  const double noise = rng.uniform();
  for (std::size_t i = 1; i + 1 < g.n_nodes(); ++i) {
    const double x = g.node(i) / g.length();
    double v = 0.0;
    for (int k = 0; k < 4; ++k) v += amp[k] * std::sin((k + 1) * pi * x);
    d[i] = v + noise * rng.symmetric();
  }
  const double norm = norm_U(d, g);
  const double scale = norm > 0.0 ? rng.uniform() * radius / norm : 0.0;
  return d * scale;
}

double dot_nodal_elem_load(const BarModel& m, const NodalField& u) {
  const ElemField mid = midpoint_values(u, m.grid);
  double sum = 0.0;
  for (std::size_t e = 0; e < mid.size(); ++e) sum += m.load[e] * mid[e];
  return sum * m.grid.h();
}

}  // namespace

GapReport certify(const BarModel& unit_load, double amplitude, std::uint64_t seed,
                  const CertifyOptions& opts) {
  GapReport rep;
  rep.model = "bar1d";
  rep.seed = seed;
  rep.condition_limit = 0.25;
  rep.modes["quadrature"] = "midpoint";
  rep.modes["constraint"] = "weak_p1";

  try {
    const BarModel m = unit_load.scaled(amplitude);
    m.validate();
    const double EA = m.ea();
    const Grid1D& g = m.grid;

    NewtonOptions nopts;
    nopts.continuation_steps = opts.continuation_steps;
    nopts.tol = opts.newton_tol;
    nopts.max_step_halvings = opts.max_step_halvings;
    nopts.on_stage = [&](const PrimalState& s, double) {
      return condition_check(s, g).satisfied;
    };
    const NewtonResult sol = solve_newton(m, nopts);
    const PrimalState& u0 = sol.state;
    rep.newton_iters = sol.iterations;
    rep.newton_stages = sol.stages;
    rep.J_primal = energy(m, u0);
    rep.residual_norm = norm_inf(residual(m, u0));
    const ConditionCheck cond = condition_check(u0, g);
    rep.condition_norm = cond.norm;
    rep.condition_ok = cond.satisfied && !sol.stopped_early;
    rep.add_check("condition", rep.condition_ok, cond.norm, 0.25);
    if (!rep.condition_ok) {
      rep.status = Status::kHypothesisViolated;
      rep.diagnostics = sol.stopped_early
                            ? "continuation stopped at load factor " +
                                  std::to_string(sol.load_factor) + ": ||u_x||_inf >= 1/4"
                            : "||u_x||_inf >= 1/4 at the critical point";
      return rep;
    }
    rep.add_check("newton_residual", rep.residual_norm <= opts.newton_tol, rep.residual_norm,
                  opts.newton_tol);

    rep.min_eig = second_variation_min_eig(m, u0);
    rep.add_check("second_variation", rep.min_eig >= -opts.eig_tol, rep.min_eig, -opts.eig_tol);

    const DualConfig cfg = DualConfig::for_bar(m);
    rep.K = cfg.K;
    const DualState1D d_hat = construct_duals(m, u0, cfg);
    rep.J_dual = dual_functional(d_hat, m, cfg);
    rep.gap = rep.J_primal - rep.J_dual;
    const double gap_limit = opts.gap_tol * (1.0 + std::abs(rep.J_primal));
    rep.add_check("zero_gap", std::abs(rep.gap) <= gap_limit, std::abs(rep.gap), gap_limit);

    const ElemField pos = positivity(d_hat, cfg);
    rep.min_positivity_margin = *std::min_element(pos.begin(), pos.end());
    rep.add_check("positivity_bound",
                  rep.min_positivity_margin > 7.0 / 32.0 * EA - opts.bound_slack,
                  rep.min_positivity_margin, 7.0 / 32.0 * EA);

    const ElemField hz = dstar_hessian_z(d_hat, m, cfg);
    rep.min_hessian_z = *std::min_element(hz.begin(), hz.end());
    rep.add_check("hessian_z_bound", rep.min_hessian_z > 5.0 / (7.0 * EA) - opts.bound_slack,
                  rep.min_hessian_z, 5.0 / (7.0 * EA));

    const NodalField eq = equilibrium_residual(d_hat, m);
    rep.constraint_residual_norm = norm_inf(eq);
    rep.add_check("constraint", rep.constraint_residual_norm <= opts.constraint_tol,
                  rep.constraint_residual_norm, opts.constraint_tol);

    rep.stationarity = stationarity_residuals(d_hat, m, cfg, u0);
    rep.add_check("stationarity", rep.stationarity.max() <= opts.stationarity_tol,
                  rep.stationarity.max(), opts.stationarity_tol);

    // Radii from the positivity margin.
    rep.r1 = std::min(1e-2, 0.5 * rep.min_positivity_margin);
    rep.r2 = rep.r1;
    rep.r = rep.r1 / cfg.K;

    const SaddleCounts sc = saddle_verify(m, u0, d_hat, cfg, rep.r1, rep.r2,
                                          opts.saddle_samples, seed, {opts.saddle_tol,
                                                                      opts.constraint_tol});
    rep.r1 = sc.r1;
    rep.r2 = sc.r2;
    rep.saddle_samples = sc.samples;
    rep.passed_z = sc.passed_z;
    rep.passed_v = sc.passed_v;
    rep.boundary_minima = sc.boundary_minima;
    rep.add_check("saddle_z", sc.passed_z == sc.samples, sc.passed_z, sc.samples);
    rep.add_check("saddle_v", sc.passed_v == sc.samples, sc.passed_v, sc.samples);

    // Local minimality and the upper-bound chain use independent streams.
    Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
    rep.local_min_samples = opts.local_min_samples;
    for (int k = 0; k < opts.local_min_samples; ++k) {
      const NodalField delta = random_u_perturbation(rng, g, opts.local_min_radius);
      const PrimalState u{u0.u + delta};
      if (energy(m, u) >= rep.J_primal - opts.local_min_tol) ++rep.local_min_passed;
    }
    rep.add_check("local_min", rep.local_min_passed == rep.local_min_samples,
                  rep.local_min_passed, rep.local_min_samples);

    rep.upper_bound_samples = opts.upper_bound_samples;
    const double slack = opts.local_min_tol;
    for (int k = 0; k < opts.upper_bound_samples; ++k) {
      const NodalField delta = random_u_perturbation(rng, g, rep.r);
      const PrimalState u{u0.u + delta};
      const ElemField ux = derivative(u.u, g);
      DualState1D d = d_hat;
      d.z = ux * cfg.K;
      // J*(v_hat, z_hat) <= J*(v_hat, z) (z-convexity)
      const double at_z = dual_functional(d, m, cfg);
      // + <u_x, v1 + v2> - <u, P>, which vanishes on A*
      const double lagrangian = at_z + integrate(pointwise_product(ux, d_hat.v1 + d_hat.v2), g) -
                                dot_nodal_elem_load(m, u.u);
      // Fenchel-Young for G_K at (u_x, u_x)
      const double fy = f_star(d.z, cfg, g) -
                        integrate(pointwise_product(ux, d.z), g) + stored_energy(m, u) +
                        0.5 * cfg.K * integrate(pointwise_product(ux, ux), g) -
                        dot_nodal_elem_load(m, u.u);
      const double j_u = energy(m, u);
      double u_l1 = 0.0;
      for (double v : u.u) u_l1 += std::abs(v);
      const double multiplier_slack = slack + rep.constraint_residual_norm * u_l1;
      const bool ok = rep.J_dual <= at_z + slack &&
                      std::abs(lagrangian - at_z) <= multiplier_slack &&
                      lagrangian <= fy + slack && rep.J_dual <= j_u + slack;
      if (ok) ++rep.upper_bound_passed;
    }
    rep.add_check("upper_bound_chain", rep.upper_bound_passed == rep.upper_bound_samples,
                  rep.upper_bound_passed, rep.upper_bound_samples);

    // KKT Newton from perturbed data.
    DualState1D d0 = d_hat;
    PrimalState w0 = u0;
    const double eps = opts.kkt_perturbation;
    for (std::size_t e = 0; e < g.n_elem(); ++e) {
      d0.v1[e] += eps * rng.symmetric();
      d0.v2[e] += eps * rng.symmetric();
      d0.z[e] += eps * rng.symmetric();
    }
    for (std::size_t i = 1; i + 1 < g.n_nodes(); ++i) w0.u[i] += eps * rng.symmetric();
    try {
      const KktResult kkt = kkt_solve(m, cfg, d0, w0);
      rep.kkt_converged = kkt.converged;
      rep.kkt_iters = kkt.iterations;
      rep.kkt_dist_v = std::max({norm_V(kkt.duals.v1 - d_hat.v1), norm_V(kkt.duals.v2 - d_hat.v2),
                                 norm_V(kkt.duals.z - d_hat.z)});
      rep.kkt_dist_u = norm_U(kkt.u.u - u0.u, g);
    } catch (const Error& e) {
      rep.diagnostics += std::string("kkt: ") + e.what() + "; ";
    }
    const double kkt_dist = std::max(rep.kkt_dist_v, rep.kkt_dist_u);
    rep.add_check("kkt_reconverge", rep.kkt_converged && kkt_dist <= opts.kkt_distance_tol,
                  kkt_dist, opts.kkt_distance_tol);

    rep.finalize();
  } catch (const Error& e) {
    rep.status = Status::kSolverError;
    rep.diagnostics += e.what();
  }
  return rep;
}

}  // namespace elastodual
