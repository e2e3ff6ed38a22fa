#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <numbers>

#include "elastodual/errors.hpp"
#include "elastodual/primal1d.hpp"
#include "elastodual/random.hpp"

using namespace elastodual;

namespace {

constexpr double kPi = std::numbers::pi;

BarModel unloaded(std::size_t n, double E = 1.0) {
  Grid1D g(1.0, n);
  return BarModel{E, 1.0, g, ElemField(n)};
}

PrimalState random_state(Rng& rng, const Grid1D& g, double amp) {
  PrimalState s = PrimalState::zero(g);
  for (std::size_t i = 1; i + 1 < g.n_nodes(); ++i) s.u[i] = amp * rng.symmetric();
  return s;
}

NodalField random_direction(Rng& rng, const Grid1D& g) {
  NodalField d(g.n_nodes());
  for (std::size_t i = 1; i + 1 < g.n_nodes(); ++i) d[i] = rng.symmetric();
  return d;
}

double dot(const NodalField& a, const NodalField& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

Eigen::MatrixXd dense(const Tridiagonal& t) {
  const auto n = static_cast<Eigen::Index>(t.size());
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    m(i, i) = t.diag()[i];
    if (i + 1 < n) m(i, i + 1) = m(i + 1, i) = t.off()[i];
  }
  return m;
}

// Energy of the P1 interpolant evaluated with a fine midpoint rule that knows
// nothing about the element structure beyond locating the sample point.
double fine_quadrature_energy(const BarModel& m, const PrimalState& s, std::size_t samples) {
  const Grid1D& g = m.grid;
  const double dx = g.length() / static_cast<double>(samples);
  double sum = 0.0;
  for (std::size_t k = 0; k < samples; ++k) {
    const double x = (k + 0.5) * dx;
    std::size_t e = std::min(g.n_elem() - 1, static_cast<std::size_t>(x / g.h()));
    const double slope = (s.u[e + 1] - s.u[e]) / g.h();
    const double strain = slope + 0.5 * slope * slope;
    sum += 0.5 * m.ea() * strain * strain * dx;
  }
  return sum;
}

}  // namespace

TEST_CASE("energy") {
  SUBCASE("zero displacement") {
    const BarModel m = BarModel::sine_load(1, 1, 1, 16, 0.3);
    CHECK(energy(m, PrimalState::zero(m.grid)) == 0.0);
  }
  SUBCASE("matches fine quadrature of the interpolant") {
    const BarModel m = unloaded(256);
    const PrimalState s{sample_nodes(m.grid, [](double x) { return x * (1 - x); })};
    const double oracle = fine_quadrature_energy(m, s, 1000000);
    CHECK(std::abs(energy(m, s) - oracle) <= 1e-6 * std::abs(oracle));
  }
  SUBCASE("homogeneous in E") {
    const BarModel m1 = unloaded(32, 1.0), m2 = unloaded(32, 2.0);
    const PrimalState s{sample_nodes(m1.grid, [](double x) { return 0.1 * x * (1 - x); })};
    CHECK(energy(m2, s) == doctest::Approx(2.0 * energy(m1, s)).epsilon(1e-14));
  }
}

TEST_CASE("residual") {
  SUBCASE("unloaded reference state") {
    const BarModel m = unloaded(8);
    for (double v : residual(m, PrimalState::zero(m.grid))) CHECK(v == 0.0);
  }
  SUBCASE("load vector at zero displacement") {
    const BarModel m = BarModel::sine_load(1, 1, 1, 10, 0.7);
    const NodalField r = residual(m, PrimalState::zero(m.grid));
    CHECK(r[0] == 0.0);
    CHECK(r[10] == 0.0);
    for (std::size_t i = 1; i < 10; ++i) {
      const double pbar = 0.5 * (m.load[i - 1] + m.load[i]);
      CHECK(r[i] == doctest::Approx(-pbar * m.grid.h()).epsilon(1e-14));
    }
  }
  SUBCASE("central finite differences of the energy") {
    Rng rng(3);
    const BarModel m = BarModel::sine_load(1.3, 0.8, 1.0, 24, 0.2);
    const double eps = 1e-5;
    for (int trial = 0; trial < 20; ++trial) {
      const PrimalState s = random_state(rng, m.grid, 0.01);
      const NodalField phi = random_direction(rng, m.grid);
      const double analytic = dot(residual(m, s), phi);
      const double fd = (energy(m, {s.u + phi * eps}) - energy(m, {s.u - phi * eps})) / (2 * eps);
      CHECK(std::abs(analytic - fd) <= 1e-6 * (1.0 + std::abs(analytic)));
    }
  }
}

TEST_CASE("hessian") {
  SUBCASE("linear stiffness at rest") {
    const BarModel m = unloaded(10, 3.0);
    const Tridiagonal H = hessian(m, PrimalState::zero(m.grid));
    REQUIRE(H.size() == 9);
    for (double d : H.diag()) CHECK(d == doctest::Approx(2.0 * 3.0 / m.grid.h()));
    for (double o : H.off()) CHECK(o == doctest::Approx(-3.0 / m.grid.h()));
  }
  SUBCASE("finite differences of the residual and symmetry") {
    Rng rng(5);
    const BarModel m = BarModel::sine_load(1.0, 1.0, 1.0, 20, 0.1);
    const double eps = 1e-5;
    for (int trial = 0; trial < 20; ++trial) {
      const PrimalState s = random_state(rng, m.grid, 0.02);
      const NodalField psi = random_direction(rng, m.grid);
      const NodalField phi = random_direction(rng, m.grid);
      const Tridiagonal H = hessian(m, s);
      const NodalField hv = H.apply(psi);
      const NodalField fd =
          (residual(m, {s.u + psi * eps}) - residual(m, {s.u - psi * eps})) * (1.0 / (2 * eps));
      CHECK(norm_inf(hv - fd) <= 1e-6 * (1.0 + norm_inf(hv)));
      CHECK(dot(H.apply(phi), psi) == doctest::Approx(dot(phi, H.apply(psi))).epsilon(1e-13));
      const Eigen::MatrixXd D = dense(H);
      CHECK((D - D.transpose()).norm() == 0.0);
    }
  }
}

TEST_CASE("tridiagonal solve and errors") {
  Rng rng(9);
  const BarModel m = BarModel::sine_load(1, 1, 1, 12, 0.1);
  const Tridiagonal H = hessian(m, random_state(rng, m.grid, 0.01));
  const NodalField b = random_direction(rng, m.grid);
  const NodalField x = H.solve(b);
  CHECK(norm_inf(H.apply(x) - b) < 1e-12);

  const Tridiagonal singular({0.0, 1.0, 1.0}, {1.0, 0.5});
  CHECK_THROWS_AS(singular.solve(NodalField(5, 1.0)), SingularHessian);
}

TEST_CASE("solve_newton") {
  SUBCASE("unloaded bar needs no iterations") {
    const BarModel m = unloaded(16);
    NewtonOptions o;
    o.continuation_steps = 3;
    const NewtonResult r = solve_newton(m, o);
    CHECK(r.iterations == 0);
    CHECK(norm_inf(r.state.u) == 0.0);
  }
  SUBCASE("matches damped gradient descent") {
    const BarModel m = BarModel::sine_load(1, 1, 1, 64, 0.1);
    NewtonOptions o;
    o.continuation_steps = 4;
    const NewtonResult r = solve_newton(m, o);
    CHECK(norm_inf(residual(m, r.state)) <= 1e-12);

    // Oracle: fixed-step gradient descent on J from rest.
    PrimalState gd = PrimalState::zero(m.grid);
    const double step = m.grid.h() / 5.0;
    for (int it = 0; it < 400000; ++it) {
      const NodalField g = residual(m, gd);
      if (norm_inf(g) < 1e-15) break;
      gd.u -= g * step;
    }
    CHECK(norm_U(gd.u - r.state.u, m.grid) <= 1e-8);
  }
  SUBCASE("antisymmetric load gives zero midpoint displacement") {
    const BarModel m = BarModel::sine_load(1, 1, 1, 64, 0.15, 2);
    const PrimalState s = solve_newton(m, 3, 1e-12);
    CHECK(std::abs(s.u[32]) <= 1e-10);
    CHECK(norm_inf(s.u) > 1e-4);
  }
  SUBCASE("iteration cap") {
    const BarModel m = BarModel::sine_load(1, 1, 1, 16, 0.1);
    NewtonOptions o;
    o.max_iterations = 1;
    CHECK_THROWS_AS(solve_newton(m, o), NonConvergence);
  }
  SUBCASE("bad options") {
    const BarModel m = unloaded(4);
    CHECK_THROWS_AS(solve_newton(m, 0, 1e-12), InvalidModel);
    CHECK_THROWS_AS(solve_newton(m, 1, 0.0), InvalidModel);
  }
  SUBCASE("observer stops the continuation") {
    const BarModel m = BarModel::sine_load(1, 1, 1, 16, 0.1);
    NewtonOptions o;
    o.continuation_steps = 5;
    int calls = 0;
    o.on_stage = [&](const PrimalState&, double) { return ++calls < 2; };
    const NewtonResult r = solve_newton(m, o);
    CHECK(r.stopped_early);
    CHECK(r.load_factor == doctest::Approx(0.4));
  }
}

TEST_CASE("condition_check") {
  const Grid1D g(1.0, 4);
  const ConditionCheck zero = condition_check(PrimalState::zero(g), g);
  CHECK(zero.norm == 0.0);
  CHECK(zero.satisfied);

  const Grid1D fine(1.0, 64);
  PrimalState s{sample_nodes(fine, [](double x) { return x * (1 - x); })};
  s.u *= 0.3 / norm_V(derivative(s.u, fine));
  const ConditionCheck steep = condition_check(s, fine);
  CHECK(steep.norm == doctest::Approx(0.3));
  CHECK_FALSE(steep.satisfied);

  // Slopes of exactly +-1/4: the inequality is strict.
  const PrimalState edge{NodalField{0.0, 0.0625, 0.125, 0.0625, 0.0}};
  const ConditionCheck at = condition_check(edge, g);
  CHECK(at.norm == 0.25);
  CHECK_FALSE(at.satisfied);
}

TEST_CASE("second_variation_min_eig") {
  SUBCASE("discrete Laplacian spectrum at rest") {
    const BarModel m = unloaded(64);
    const double lam = second_variation_min_eig(m, PrimalState::zero(m.grid));
    CHECK(std::abs(lam - kPi * kPi) <= 0.02 * kPi * kPi);
    const double h = m.grid.h();
    CHECK(lam == doctest::Approx(2.0 / (h * h) * (1 - std::cos(kPi * h))).epsilon(1e-12));
  }
  SUBCASE("dense eigensolver oracle") {
    Rng rng(21);
    const BarModel m = BarModel::sine_load(1.2, 0.9, 1.5, 48, 0.1);
    for (int trial = 0; trial < 5; ++trial) {
      const PrimalState s = random_state(rng, m.grid, 0.01);
      const Eigen::MatrixXd D = dense(hessian(m, s)) / m.grid.h();
      const double oracle = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(D).eigenvalues()(0);
      CHECK(std::abs(second_variation_min_eig(m, s) - oracle) <= 1e-10);
    }
  }
  SUBCASE("doubling E doubles the spectrum at rest") {
    const BarModel a = unloaded(32, 1.0), b = unloaded(32, 2.0);
    const PrimalState z = PrimalState::zero(a.grid);
    CHECK(second_variation_min_eig(b, z) ==
          doctest::Approx(2.0 * second_variation_min_eig(a, z)).epsilon(1e-11));
  }
}

TEST_CASE("properties at converged critical points") {
  Rng rng(77);
  for (double amp : {0.02, 0.05, 0.1}) {
    const BarModel m = BarModel::sine_load(1, 1, 1, 64, amp);
    const PrimalState u0 = solve_newton(m, 5, 1e-12);
    REQUIRE(condition_check(u0, m.grid).satisfied);
    CHECK(second_variation_min_eig(m, u0) >= -1e-10);
    const double j0 = energy(m, u0);
    for (int k = 0; k < 200; ++k) {
      NodalField d = random_direction(rng, m.grid);
      d *= rng.uniform() * 1e-3 / norm_U(d, m.grid);
      CHECK(energy(m, {u0.u + d}) >= j0 - 1e-12);
    }
  }
}
