#include <doctest.h>

#include <cmath>
#include <numbers>

#include "elastodual/dual1d.hpp"
#include "elastodual/errors.hpp"
#include "elastodual/random.hpp"
#include "elastodual/tensor3d.hpp"

using namespace elastodual;

namespace {

SymMat3 random_sym(Rng& rng, double scale = 1.0) {
  SymMat3 s;
  for (int k = 0; k < 6; ++k) s[k] = scale * rng.symmetric();
  return s;
}

Mat3 random_mat(Rng& rng, double scale = 1.0) {
  Mat3 m;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) m(i, j) = scale * rng.symmetric();
  return m;
}

// Rotation about a random axis by a random angle (Rodrigues).
Mat3 random_rotation(Rng& rng) {
  Vec3 axis(rng.symmetric(), rng.symmetric(), rng.symmetric());
  axis.normalize();
  const double theta = std::numbers::pi * rng.symmetric();
  Mat3 k;
  k << 0, -axis[2], axis[1], axis[2], 0, -axis[0], -axis[1], axis[0], 0;
  return Mat3::Identity() + std::sin(theta) * k + (1 - std::cos(theta)) * k * k;
}

// Smallest root of the characteristic polynomial of a symmetric 3x3 matrix
// (trigonometric form of the cubic).
double char_poly_min_eig(const Mat3& a) {
  const double q = a.trace() / 3.0;
  const Mat3 b = a - q * Mat3::Identity();
  const double p = std::sqrt(b.squaredNorm() / 6.0);
  if (p == 0.0) return q;
  const double r = std::clamp((b / p).determinant() / 2.0, -1.0, 1.0);
  const double phi = std::acos(r) / 3.0;
  return q + 2.0 * p * std::cos(phi + 2.0 * std::numbers::pi / 3.0);
}

// Compliance from its closed form.
double hbar_closed(const LameParams& p, int i, int j, int k, int l) {
  const double d = ((i == k) * (j == l) + (i == l) * (j == k)) / (4.0 * p.mu);
  return d - p.lambda / (2.0 * p.mu * (3 * p.lambda + 2 * p.mu)) * (i == j) * (k == l);
}

// M on symmetric arguments, assembled componentwise from the closed-form
// compliance.
double m_min_eig_direct(const LameParams& p, double K, DeltaMode mode) {
  Mat9 full;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l) {
          const double d = (i == k) * (j == l);
          const double x = mode == DeltaMode::kIdentity ? d : double((i == j) * (k == l));
          full(3 * i + j, 3 * k + l) = d / K - 3.0 / (32.0 * K) * x - hbar_closed(p, i, j, k, l);
        }
  const auto& P = mandel_embedding();
  const Mat6 m = P.transpose() * full * P;
  return Eigen::SelfAdjointEigenSolver<Mat6>(0.5 * (m + m.transpose())).eigenvalues()(0);
}

// Sign change of the direct M eigenvalue on a uniform K grid, linear in 1/K.
double grid_sweep_oracle(const LameParams& p, DeltaMode mode, double lo, double hi, int n) {
  double pk = lo, pv = m_min_eig_direct(p, lo, mode);
  for (int i = 1; i < n; ++i) {
    const double k = lo + (hi - lo) * i / (n - 1);
    const double v = m_min_eig_direct(p, k, mode);
    if (pv > 0 && v <= 0) {
      const double x = 1 / pk + (1 / k - 1 / pk) * pv / (pv - v);
      return 1 / x;
    }
    pk = k;
    pv = v;
  }
  return NAN;
}

// Objective whose supremum defines the perturbed conjugate:
// v1 : a + t : q - 1/2 (q + a^T a / 2) : H : (q + a^T a / 2) - K/2 a : a.
double conjugate_objective(const Mat3& v1, const SymMat3& t, const Tensor4Sym& H, double K,
                           const Mat3& a, const SymMat3& q) {
  const SymMat3 e = q + SymMat3::from_matrix(0.5 * a.transpose() * a);
  return (v1.array() * a.array()).sum() + t.ddot(q) - 0.5 * e.ddot(H.apply(e)) -
         0.5 * K * a.squaredNorm();
}

}  // namespace

TEST_CASE("SymMat3 storage") {
  Rng rng(1);
  const SymMat3 s = random_sym(rng);
  const Mat3 m = s.matrix();
  CHECK((m - m.transpose()).norm() == 0.0);
  CHECK(SymMat3::from_mandel(s.mandel()).mandel() == s.mandel());
  CHECK(s(1, 2) == s(2, 1));
  CHECK(s(0, 2) == m(0, 2));
  const SymMat3 t = random_sym(rng);
  CHECK(s.ddot(t) == doctest::Approx((m.array() * t.matrix().array()).sum()).epsilon(1e-14));
  CHECK((vec(m) - mandel_embedding() * s.mandel()).norm() <= 1e-15);
  CHECK((mandel_embedding().transpose() * mandel_embedding() - Mat6::Identity()).norm() <= 1e-15);
}

TEST_CASE("hooke") {
  const LameParams p{1.3, 0.7};
  const Tensor4Sym H = hooke(p);
  SUBCASE("components") {
    CHECK(H(0, 0, 0, 0) == doctest::Approx(p.lambda + 2 * p.mu));
    CHECK(H(0, 0, 1, 1) == doctest::Approx(p.lambda));
    CHECK(H(0, 1, 0, 1) == doctest::Approx(p.mu));
    const SymMat3 hi = H.apply(SymMat3::identity());
    CHECK((hi.matrix() - (3 * p.lambda + 2 * p.mu) * Mat3::Identity()).norm() <= 1e-14);
  }
  SUBCASE("minor and major symmetry") {
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k)
          for (int l = 0; l < 3; ++l) {
            CHECK(H(i, j, k, l) == H(j, i, k, l));
            CHECK(H(i, j, k, l) == H(i, j, l, k));
            CHECK(H(i, j, k, l) == H(k, l, i, j));
          }
  }
  SUBCASE("Mandel form is SPD for lambda = mu = 1") {
    const Mat6 m = hooke({1, 1}).mandel();
    const auto ev = Eigen::SelfAdjointEigenSolver<Mat6>(m).eigenvalues();
    for (int k = 0; k < 6; ++k) CHECK(ev[k] > 0.0);
    CHECK(ev[0] == doctest::Approx(2.0));
    CHECK(ev[5] == doctest::Approx(5.0));
  }
  SUBCASE("full and Mandel forms agree on symmetric arguments") {
    Rng rng(2);
    for (int k = 0; k < 20; ++k) {
      const SymMat3 s = random_sym(rng);
      CHECK((H.apply(s).matrix() - H.apply(s.matrix())).norm() <= 1e-14);
    }
  }
  SUBCASE("isotropic lower bound S:H:S >= 2 mu S:S") {
    Rng rng(3);
    for (int k = 0; k < 200; ++k) {
      const SymMat3 s = random_sym(rng);
      CHECK(s.ddot(H.apply(s)) >= 2 * p.mu * s.ddot(s) - 1e-13);
    }
  }
  SUBCASE("invalid parameters") {
    CHECK_THROWS_AS(hooke({1, 0}), InvalidModel);
    CHECK_THROWS_AS(hooke({-1, 1}), InvalidModel);
  }
}

TEST_CASE("hooke_inverse") {
  const LameParams p{1.0, 1.0};
  const Tensor4Sym H = hooke(p), Hb = hooke_inverse(p);
  Rng rng(4);
  for (int k = 0; k < 100; ++k) {
    const SymMat3 s = random_sym(rng);
    CHECK((Hb.apply(H.apply(s)).mandel() - s.mandel()).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((H.apply(Hb.apply(s)).mandel() - s.mandel()).cwiseAbs().maxCoeff() <= 1e-12);
  }
  CHECK((H.mandel() * Hb.mandel() - Mat6::Identity()).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((Hb.apply(SymMat3::identity()).matrix() - Mat3::Identity() / 5.0).norm() <= 1e-15);
  for (const LameParams q : {LameParams{1, 1}, LameParams{0.3, 2.0}, LameParams{-0.5, 1.0}}) {
    const Tensor4Sym inv = hooke_inverse(q);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k)
          for (int l = 0; l < 3; ++l) {
            CHECK(std::abs(inv(i, j, k, l) - hbar_closed(q, i, j, k, l)) <= 1e-13);
          }
  }
  CHECK_THROWS_AS(hooke_inverse(Tensor4Sym::from_mandel(Mat6::Zero())), SingularHooke);
}

TEST_CASE("green_strain and stress") {
  CHECK(green_strain(Mat3::Zero()).mandel().norm() == 0.0);
  Mat3 g = Mat3::Zero();
  g(0, 0) = 0.1;
  const SymMat3 e = green_strain(g);
  CHECK(e(0, 0) == doctest::Approx(0.105).epsilon(1e-15));
  CHECK(e.mandel().tail<5>().norm() == 0.0);

  const LameParams p{1, 1};
  const Mat3 expect = p.lambda * 0.105 * Mat3::Identity() + 2 * p.mu * e.matrix();
  CHECK((stress(p, g).matrix() - expect).norm() <= 1e-15);

  Rng rng(5);
  for (int k = 0; k < 50; ++k) {
    const Mat3 R = random_rotation(rng);
    CHECK(green_strain(R - Mat3::Identity()).mandel().cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(stress(p, R - Mat3::Identity()).mandel().cwiseAbs().maxCoeff() <= 1e-12);
  }
  SUBCASE("frame indifference") {
    for (int k = 0; k < 50; ++k) {
      const Mat3 G = random_mat(rng, 0.2);
      const Mat3 R = random_rotation(rng);
      const Mat3 a = green_strain(G).matrix();
      const Mat3 b = green_strain(R * (Mat3::Identity() + G) - Mat3::Identity()).matrix();
      CHECK(std::abs(a.trace() - b.trace()) <= 1e-12);
      const double i2a = 0.5 * (a.trace() * a.trace() - (a * a).trace());
      const double i2b = 0.5 * (b.trace() * b.trace() - (b * b).trace());
      CHECK(std::abs(i2a - i2b) <= 1e-12);
      CHECK(std::abs(a.determinant() - b.determinant()) <= 1e-12);
    }
  }
}

TEST_CASE("construct_duals_pointwise") {
  const LameParams p{1, 1};
  const DualPoint zero = construct_duals_pointwise(p, 1.0, Mat3::Zero());
  CHECK(zero.v1.norm() == 0.0);
  CHECK(zero.v2.mandel().norm() == 0.0);
  CHECK(zero.z.mandel().norm() == 0.0);

  Rng rng(6);
  for (int k = 0; k < 50; ++k) {
    const Mat3 g = random_mat(rng, 0.1);
    const double K = 0.5 + rng.uniform();
    const DualPoint d = construct_duals_pointwise(p, K, g);
    const SymMat3 sigma = stress(p, g);
    CHECK(((d.z + d.v2).mandel() - sigma.mandel()).cwiseAbs().maxCoeff() <= 1e-15);
    const Mat3 a = sigma.matrix() + K * Mat3::Identity();
    CHECK((d.v1 - a * g).norm() <= 1e-15);
    const DualPoint r = construct_duals_pointwise(p, K, g, V1Order::kRight);
    CHECK((r.v1 - g * a).norm() <= 1e-15);
    CHECK((r.z.mandel() - d.z.mandel()).norm() == 0.0);
  }
  CHECK_THROWS_AS(construct_duals_pointwise(p, 0.0, Mat3::Zero()), InvalidModel);
}

TEST_CASE("reduction to the bar") {
  // lambda = 0 and 2 mu = E make the (1,1) response that of the bar.
  const double E = 1.0;
  const LameParams p{0.0, E / 2};
  BarModel bar{E, 1.0, Grid1D(2.0, 2), ElemField(2)};
  const DualConfig cfg = DualConfig::for_bar(bar);
  for (double w : {0.1, -0.2, 0.05}) {
    const PrimalState u{NodalField{0.0, 2 * w / 2, 0.0}};
    const DualState1D d1 = construct_duals(bar, u, cfg);
    Mat3 g = Mat3::Zero();
    g(0, 0) = w;
    const DualPoint d3 = construct_duals_pointwise(p, cfg.K, g);
    CHECK(d3.z(0, 0) == doctest::Approx(d1.z[0]).epsilon(1e-15));
    CHECK(d3.v2(0, 0) == doctest::Approx(d1.v2[0]).epsilon(1e-15));
    CHECK(d3.v1(0, 0) == doctest::Approx(d1.v1[0]).epsilon(1e-15));
    const Mat3 A = (d3.v2 + d3.z).matrix() + cfg.K * Mat3::Identity();
    CHECK(A(0, 0) == doctest::Approx(positivity(d1, cfg)[0]).epsilon(1e-15));
    const Tensor4Sym hb = hooke_inverse(p);
    CHECK(dual_density_3d(d3.v1, d3.v2, d3.z, hb, cfg.K) ==
          doctest::Approx(dual_density(d1.v1[0], d1.v2[0], d1.z[0], E, cfg.K)).epsilon(1e-14));
    const Tensor4Sym hz = dstar_hessian_z_3d(d3.v1, d3.v2, d3.z, hb, cfg.K);
    CHECK(hz.mandel()(0, 0) ==
          doctest::Approx(dstar_hessian_z(d1, bar, cfg)[0]).epsilon(1e-13));
  }
}

TEST_CASE("pd_margin") {
  CHECK(pd_margin(SymMat3::zero(), 2.0) == doctest::Approx(1.0));
  CHECK(pd_margin(-0.5 * SymMat3::identity(), 2.0) == doctest::Approx(0.5));
  Rng rng(7);
  for (int k = 0; k < 200; ++k) {
    const SymMat3 s = random_sym(rng);
    const double K = rng.uniform(0.1, 3.0);
    CHECK(std::abs(pd_margin(s, K) - (char_poly_min_eig(s.matrix()) + 0.5 * K)) <= 1e-12);
  }
}

TEST_CASE("m_tensor_check and K_max") {
  const LameParams p{1, 1};
  CHECK(m_tensor_check(p, 1e6).min_eigenvalue < 0.0);
  CHECK(m_tensor_check(p, 1e6, DeltaMode::kDeltaDelta).min_eigenvalue < 0.0);
  CHECK(m_tensor_check(p, 1.0).min_eigenvalue > 0.0);

  const KMaxResult a = k_max_bisection(p, DeltaMode::kIdentity);
  const KMaxResult b = k_max_bisection(p, DeltaMode::kDeltaDelta);
  CHECK(a.k_max == doctest::Approx(29.0 / 16.0).epsilon(1e-12));
  CHECK(b.k_max == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(m_tensor_check(p, a.k_max).min_eigenvalue > 0.0);
  CHECK(m_tensor_check(p, a.k_fail).min_eigenvalue <= 0.0);

  for (DeltaMode mode : {DeltaMode::kIdentity, DeltaMode::kDeltaDelta}) {
    const double kmax = k_max_bisection(p, mode).k_max;
    const double oracle = grid_sweep_oracle(p, mode, 0.01, 5.0, 10000);
    CHECK(std::abs(kmax - oracle) <= 1e-6);
    CHECK(std::abs(k_max_grid_sweep(p, mode, 0.01, 5.0, 10000) - oracle) <= 1e-12);
    // Direct eigenvalues agree with the library assembly.
    for (double K : {0.3, 1.0, 1.7, 2.5}) {
      CHECK(std::abs(m_tensor_check(p, K, mode).min_eigenvalue - m_min_eig_direct(p, K, mode)) <=
            1e-13);
    }
  }
}

TEST_CASE("3D conjugate densities") {
  const LameParams p{1, 1};
  const Tensor4Sym Hb = hooke_inverse(p);
  const double K = 1.5;
  CHECK(g_star_k_density(Mat3::Zero(), SymMat3::zero(), SymMat3::zero(), p, K) == 0.0);
  CHECK(g_star_k_density(Mat3::Identity(), SymMat3::zero(), SymMat3::zero(), p, K) ==
        doctest::Approx(1.5 / K));
  CHECK(f_star_3d_density(SymMat3::zero(), K) == 0.0);
  CHECK(f_star_3d_density(SymMat3::identity(), K) == doctest::Approx(3 / (2 * K)));
  CHECK_THROWS_AS(g_star_k_density(Mat3::Zero(), -2.0 * SymMat3::identity(), SymMat3::zero(), p,
                                   K),
                  NotPositiveDefinite);

  Rng rng(8);
  SUBCASE("f_star componentwise") {
    for (int k = 0; k < 50; ++k) {
      const SymMat3 z = random_sym(rng);
      const Mat3 m = z.matrix();
      double sum = 0.0;
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) sum += f_star_density(m(i, j), K);
      CHECK(f_star_3d_density(z, K) == doctest::Approx(sum).epsilon(1e-14));
    }
  }
  SUBCASE("closed form is the supremum of the defining objective") {
    const Tensor4Sym H = hooke(p);
    for (int trial = 0; trial < 10; ++trial) {
      const Mat3 v1 = random_mat(rng, 0.3);
      const SymMat3 v2 = random_sym(rng, 0.2), z = random_sym(rng, 0.2);
      const SymMat3 t = v2 + z;
      const double closed = g_star_k_density(v1, v2, z, Hb, K);
      const Mat3 ainv = (t.matrix() + K * Mat3::Identity()).inverse();
      Mat3 a = v1 * ainv;
      SymMat3 q = Hb.apply(t) - SymMat3::from_matrix(0.5 * a.transpose() * a);
      double best = conjugate_objective(v1, t, H, K, a, q);
      CHECK(std::abs(best - closed) <= 1e-12);
      // Coordinate ascent over the 9 + 6 variables.
      for (int sweep = 0; sweep < 30; ++sweep) {
        for (int c = 0; c < 15; ++c) {
          for (double step = 1e-2; step > 1e-10; step *= 0.5) {
            for (double sign : {1.0, -1.0}) {
              Mat3 a2 = a;
              SymMat3 q2 = q;
              if (c < 9) {
                a2(c / 3, c % 3) += sign * step;
              } else {
                Mandel6 mq = q.mandel();
                mq[c - 9] += sign * step;
                q2 = SymMat3::from_mandel(mq);
              }
              const double v = conjugate_objective(v1, t, H, K, a2, q2);
              if (v > best) {
                best = v;
                a = a2;
                q = q2;
              }
            }
          }
        }
      }
      CHECK(best <= closed + 1e-6);
    }
  }
}

TEST_CASE("dstar_hessian_z_3d") {
  const LameParams p{1, 1};
  const Tensor4Sym Hb = hooke_inverse(p);
  SUBCASE("vanishing v1") {
    Rng rng(9);
    const SymMat3 v2 = random_sym(rng, 0.1), z = random_sym(rng, 0.1);
    const double K = 1.2;
    const Tensor4Sym hz = dstar_hessian_z_3d(Mat3::Zero(), v2, z, Hb, K);
    CHECK((hz.mandel() - (Mat6::Identity() / K - Hb.mandel())).cwiseAbs().maxCoeff() <= 1e-15);
  }
  SUBCASE("finite differences in Mandel coordinates") {
    Rng rng(10);
    for (int trial = 0; trial < 10; ++trial) {
      const Mat3 v1 = random_mat(rng, 0.3);
      const SymMat3 v2 = random_sym(rng, 0.2), z = random_sym(rng, 0.2);
      const double K = 1.5;
      const Mat6 hz = dstar_hessian_z_3d(v1, v2, z, Hb, K).mandel();
      const double eps = 1e-4;
      auto f = [&](const Mandel6& dz) {
        return dual_density_3d(v1, v2, SymMat3::from_mandel(z.mandel() + dz), Hb, K);
      };
      for (int a = 0; a < 6; ++a) {
        for (int b = 0; b < 6; ++b) {
          Mandel6 ea = Mandel6::Zero(), eb = Mandel6::Zero();
          ea[a] = eps;
          eb[b] = eps;
          const double fd = (f(ea + eb) - f(ea - eb) - f(eb - ea) + f(-ea - eb)) / (4 * eps * eps);
          CHECK(std::abs(fd - hz(a, b)) <= 1e-5);
        }
      }
    }
  }
  SUBCASE("bounded below by M at constructed duals") {
    Rng rng(11);
    const double K = k_max_bisection(p).k_max;
    const double lam_m = m_tensor_check(p, K).min_eigenvalue;
    int checked = 0;
    for (int trial = 0; trial < 200; ++trial) {
      const Mat3 g = random_mat(rng, 0.124);
      for (V1Order order : {V1Order::kLeft, V1Order::kRight}) {
        const DualPoint d = construct_duals_pointwise(p, K, g, order);
        if (pd_margin(d.v2 + d.z, K) < 0.0) continue;
        ++checked;
        CHECK(dstar_hessian_z_3d(d.v1, d.v2, d.z, Hb, K).min_eigenvalue() >= lam_m - 1e-12);
      }
    }
    CHECK(checked > 100);
  }
}

TEST_CASE("pointwise stationarity depends on the product order") {
  const LameParams p{1, 1};
  const Tensor4Sym Hb = hooke_inverse(p);
  Rng rng(12);
  const double K = 1.0;
  for (int trial = 0; trial < 20; ++trial) {
    const Mat3 g = random_mat(rng, 0.1);
    const PointStationarity r =
        point_stationarity(construct_duals_pointwise(p, K, g, V1Order::kRight), g, Hb, K);
    CHECK(r.z <= 1e-14);
    CHECK(r.v1 <= 1e-14);
    CHECK(r.v2 <= 1e-14);
    const PointStationarity l =
        point_stationarity(construct_duals_pointwise(p, K, g, V1Order::kLeft), g, Hb, K);
    CHECK(l.v1 > 1e-6);
  }
  // Commuting case: a diagonal gradient makes both orders coincide.
  Mat3 g = Mat3::Zero();
  g.diagonal() << 0.05, -0.02, 0.03;
  const PointStationarity l =
      point_stationarity(construct_duals_pointwise(p, K, g, V1Order::kLeft), g, Hb, K);
  CHECK(l.v1 <= 1e-15);
  CHECK(l.z <= 1e-15);
}
