#include "elastodual/tensor3d.hpp"

#include <cmath>
#include <limits>

#include "elastodual/errors.hpp"

namespace elastodual {

namespace {

constexpr double kSqrt2 = 1.41421356237309504880;

// Index pairs of the six symmetric components.
constexpr int kPairI[6] = {0, 1, 2, 1, 0, 0};
constexpr int kPairJ[6] = {0, 1, 2, 2, 2, 1};

int component_index(int i, int j) {
  return i == j ? i : 6 - i - j;
}

}  // namespace

// ---------------------------------------------------------------------------
// SymMat3

SymMat3 SymMat3::identity() {
  SymMat3 s;
  s.c_ << 1, 1, 1, 0, 0, 0;
  return s;
}

SymMat3 SymMat3::from_matrix(const Mat3& m) {
  SymMat3 s;
  for (int k = 0; k < 6; ++k) s.c_[k] = 0.5 * (m(kPairI[k], kPairJ[k]) + m(kPairJ[k], kPairI[k]));
  return s;
}

SymMat3 SymMat3::from_mandel(const Mandel6& v) {
  SymMat3 s;
  s.c_ = v;
  s.c_.tail<3>() /= kSqrt2;
  return s;
}

double SymMat3::operator()(int i, int j) const { return c_[component_index(i, j)]; }

Mat3 SymMat3::matrix() const {
  Mat3 m;
  m << c_[0], c_[5], c_[4],
       c_[5], c_[1], c_[3],
       c_[4], c_[3], c_[2];
  return m;
}

Mandel6 SymMat3::mandel() const {
  Mandel6 v = c_;
  v.tail<3>() *= kSqrt2;
  return v;
}

double SymMat3::min_eigenvalue() const {
  Eigen::SelfAdjointEigenSolver<Mat3> es(matrix(), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

// ---------------------------------------------------------------------------
// Vectorisation and the Mandel embedding

Vec9 vec(const Mat3& m) {
  Vec9 v;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) v[3 * i + j] = m(i, j);
  return v;
}

Mat3 unvec(const Vec9& v) {
  Mat3 m;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) m(i, j) = v[3 * i + j];
  return m;
}

const Eigen::Matrix<double, 9, 6>& mandel_embedding() {
  static const Eigen::Matrix<double, 9, 6> P = [] {
    Eigen::Matrix<double, 9, 6> p = Eigen::Matrix<double, 9, 6>::Zero();
    for (int k = 0; k < 6; ++k) {
      const int i = kPairI[k], j = kPairJ[k];
      if (i == j) {
        p(3 * i + j, k) = 1.0;
      } else {
        p(3 * i + j, k) = 1.0 / kSqrt2;
        p(3 * j + i, k) = 1.0 / kSqrt2;
      }
    }
    return p;
  }();
  return P;
}

// ---------------------------------------------------------------------------
// Tensor4Sym

Tensor4Sym Tensor4Sym::from_mandel(const Mat6& m) {
  const auto& P = mandel_embedding();
  return {m, P * m * P.transpose()};
}

Tensor4Sym Tensor4Sym::from_full(const Mat9& f) {
  const auto& P = mandel_embedding();
  return {P.transpose() * f * P, f};
}

double Tensor4Sym::min_eigenvalue() const {
  const Mat6 sym = 0.5 * (mandel_ + mandel_.transpose());
  Eigen::SelfAdjointEigenSolver<Mat6> es(sym, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

Tensor4Sym operator-(const Tensor4Sym& a, const Tensor4Sym& b) {
  return {a.mandel_ - b.mandel_, a.full_ - b.full_};
}

// ---------------------------------------------------------------------------
// Material

void LameParams::validate() const {
  if (!(mu > 0.0)) throw InvalidModel("mu must be positive");
  if (!(3.0 * lambda + 2.0 * mu > 0.0)) throw InvalidModel("3 lambda + 2 mu must be positive");
}

Tensor4Sym hooke(const LameParams& p) {
  p.validate();
  Mat9 f = Mat9::Zero();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l) {
          const double v = p.lambda * (i == j) * (k == l) +
                           p.mu * ((i == k) * (j == l) + (i == l) * (j == k));
          f(3 * i + j, 3 * k + l) = v;
        }
  return Tensor4Sym::from_full(f);
}

Tensor4Sym hooke_inverse(const Tensor4Sym& h) {
  Eigen::FullPivLU<Mat6> lu(h.mandel());
  if (lu.rank() < 6) throw SingularHooke("Hooke tensor is singular on symmetric tensors");
  return Tensor4Sym::from_mandel(lu.inverse());
}

Tensor4Sym hooke_inverse(const LameParams& p) { return hooke_inverse(hooke(p)); }

Tensor4Sym identity_tensor() { return Tensor4Sym::from_full(Mat9::Identity()); }

Tensor4Sym delta_delta_tensor() {
  const Vec9 d = vec(Mat3::Identity());
  return Tensor4Sym::from_full(d * d.transpose());
}

SymMat3 green_strain(const Mat3& g) {
  return SymMat3::from_matrix(0.5 * (g + g.transpose() + g.transpose() * g));
}

SymMat3 stress(const Tensor4Sym& h, const Mat3& g) { return h.apply(green_strain(g)); }

SymMat3 stress(const LameParams& p, const Mat3& g) { return stress(hooke(p), g); }

// ---------------------------------------------------------------------------
// Dual construction and hypotheses

std::string to_string(V1Order o) { return o == V1Order::kLeft ? "left" : "right"; }

std::string to_string(DeltaMode m) {
  return m == DeltaMode::kIdentity ? "identity" : "delta_delta";
}

DualPoint construct_duals_pointwise(const Tensor4Sym& h, double K, const Mat3& g0,
                                    V1Order order) {
  if (!(K > 0.0)) throw InvalidModel("K must be positive");
  DualPoint d;
  d.z = K * SymMat3::from_matrix(g0);
  d.v2 = stress(h, g0) - d.z;
  const Mat3 a = (d.z + d.v2).matrix() + K * Mat3::Identity();
  d.v1 = order == V1Order::kLeft ? Mat3(a * g0) : Mat3(g0 * a);
  return d;
}

DualPoint construct_duals_pointwise(const LameParams& p, double K, const Mat3& g0,
                                    V1Order order) {
  return construct_duals_pointwise(hooke(p), K, g0, order);
}

double pd_margin(const SymMat3& s, double K) { return s.min_eigenvalue() + 0.5 * K; }

MCheck m_tensor_check(const LameParams& p, double K, DeltaMode mode) {
  if (!(K > 0.0)) throw InvalidModel("K must be positive");
  const Tensor4Sym hbar = hooke_inverse(p);
  const Tensor4Sym x = mode == DeltaMode::kIdentity ? identity_tensor() : delta_delta_tensor();
  const Mat9 full = Mat9::Identity() / K - (3.0 / (32.0 * K)) * x.full() - hbar.full();
  MCheck r;
  r.M = Tensor4Sym::from_full(full);
  r.min_eigenvalue = r.M.min_eigenvalue();
  return r;
}

KMaxResult k_max_bisection(const LameParams& p, DeltaMode mode, double tol) {
  auto pd = [&](double K) { return m_tensor_check(p, K, mode).min_eigenvalue > 0.0; };
  double lo = 1.0, hi = 1.0;
  KMaxResult r;
  if (pd(1.0)) {
    while (pd(hi)) {
      lo = hi;
      hi *= 2.0;
      if (++r.iterations > 2000) throw NonConvergence("M stays positive definite as K grows");
    }
  } else {
    while (!pd(lo)) {
      hi = lo;
      lo *= 0.5;
      if (++r.iterations > 2000) throw NonConvergence("no K with M positive definite");
    }
  }
  while (hi - lo > tol * hi) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    (pd(mid) ? lo : hi) = mid;
    ++r.iterations;
  }
  r.k_max = lo;
  r.k_fail = hi;
  return r;
}

double k_max_grid_sweep(const LameParams& p, DeltaMode mode, double k_lo, double k_hi,
                        int points) {
  if (!(k_lo > 0.0) || !(k_hi > k_lo) || points < 2) throw InvalidModel("bad K grid");
  const double step = (k_hi - k_lo) / (points - 1);
  double prev_k = k_lo;
  double prev = m_tensor_check(p, k_lo, mode).min_eigenvalue;
  for (int i = 1; i < points; ++i) {
    const double k = k_lo + i * step;
    const double lam = m_tensor_check(p, k, mode).min_eigenvalue;
    if (prev > 0.0 && lam <= 0.0) {
      const double x0 = 1.0 / prev_k, x1 = 1.0 / k;
      const double x = x0 + (x1 - x0) * prev / (prev - lam);
      return 1.0 / x;
    }
    prev = lam;
    prev_k = k;
  }
  return std::numeric_limits<double>::quiet_NaN();
}

// ---------------------------------------------------------------------------
// Conjugate densities

SpdEigen::SpdEigen(const Mat3& a) {
  Eigen::SelfAdjointEigenSolver<Mat3> es(0.5 * (a + a.transpose()));
  values_ = es.eigenvalues();
  vectors_ = es.eigenvectors();
}

Mat3 SpdEigen::inverse_power(int k) const {
  Vec3 d;
  for (int i = 0; i < 3; ++i) d[i] = std::pow(values_[i], -k);
  return vectors_ * d.asDiagonal() * vectors_.transpose();
}

namespace {

SpdEigen positive_part(const SymMat3& v2, const SymMat3& z, double K) {
  const SpdEigen eig((v2 + z).matrix() + K * Mat3::Identity());
  if (!(eig.min_eigenvalue() > 0.0)) throw NotPositiveDefinite(eig.min_eigenvalue());
  return eig;
}

}  // namespace

double g_star_k_density(const Mat3& v1, const SymMat3& v2, const SymMat3& z,
                        const Tensor4Sym& hbar, double K) {
  const SpdEigen eig = positive_part(v2, z, K);
  const SymMat3 s = v2 + z;
  const double quad = (eig.inverse_power(1) * (v1.transpose() * v1)).trace();
  return 0.5 * quad + 0.5 * s.ddot(hbar.apply(s));
}

double g_star_k_density(const Mat3& v1, const SymMat3& v2, const SymMat3& z,
                        const LameParams& p, double K) {
  return g_star_k_density(v1, v2, z, hooke_inverse(p), K);
}

double f_star_3d_density(const SymMat3& z, double K) { return z.ddot(z) / (2.0 * K); }

double dual_density_3d(const Mat3& v1, const SymMat3& v2, const SymMat3& z,
                       const Tensor4Sym& hbar, double K) {
  return f_star_3d_density(z, K) - g_star_k_density(v1, v2, z, hbar, K);
}

Tensor4Sym dstar_hessian_z_3d(const Mat3& v1, const SymMat3& v2, const SymMat3& z,
                              const Tensor4Sym& hbar, double K) {
  const SpdEigen eig = positive_part(v2, z, K);
  const Mat3 ainv = eig.inverse_power(1);
  const Mat3 ainv_b = ainv * (v1.transpose() * v1);
  Mat3 x[9];
  for (int a = 0; a < 9; ++a) {
    Mat3 e = Mat3::Zero();
    e(a / 3, a % 3) = 1.0;
    x[a] = ainv * e * ainv;
  }
  Mat9 full;
  for (int a = 0; a < 9; ++a) {
    for (int b = 0; b < 9; ++b) {
      Mat3 eb = Mat3::Zero(), ea = Mat3::Zero();
      eb(b / 3, b % 3) = 1.0;
      ea(a / 3, a % 3) = 1.0;
      const double middle = 0.5 * ((x[a] * eb * ainv_b).trace() + (x[b] * ea * ainv_b).trace());
      full(a, b) = (a == b ? 1.0 / K : 0.0) - middle - hbar.full()(a, b);
    }
  }
  return Tensor4Sym::from_full(full);
}

Tensor4Sym dstar_hessian_z_3d(const Mat3& v1, const SymMat3& v2, const SymMat3& z,
                              const LameParams& p, double K) {
  return dstar_hessian_z_3d(v1, v2, z, hooke_inverse(p), K);
}

PointStationarity point_stationarity(const DualPoint& d, const Mat3& g, const Tensor4Sym& hbar,
                                     double K) {
  const SpdEigen eig = positive_part(d.v2, d.z, K);
  const Mat3 ainv = eig.inverse_power(1);
  const Mat3 c = ainv * (d.v1.transpose() * d.v1) * ainv;
  const Mat3 hs = hbar.apply(d.v2 + d.z).matrix();
  const Mat3 eps = 0.5 * (g + g.transpose());
  PointStationarity r;
  r.z = (d.z.matrix() / K + 0.5 * c - hs).norm();
  r.v1 = (g - d.v1 * ainv).norm();
  r.v2 = (0.5 * c - hs + eps).norm();
  return r;
}

}  // namespace elastodual
