#pragma once

#include <Eigen/Dense>
#include <string>

namespace elastodual {

/// Row-major 3x3 tensor: a displacement gradient g(i, j) = u_{i,j} or a
/// non-symmetric dual field.
using Mat3 = Eigen::Matrix3d;
using Vec3 = Eigen::Vector3d;
using Mandel6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using Vec9 = Eigen::Matrix<double, 9, 1>;
using Mat9 = Eigen::Matrix<double, 9, 9>;

/// Symmetric 3x3 tensor stored by its six independent components in the
/// order 11, 22, 33, 23, 13, 12.
class SymMat3 {
 public:
  SymMat3() { c_.setZero(); }
  static SymMat3 zero() { return {}; }
  static SymMat3 identity();
  /// Symmetric part of m.
  static SymMat3 from_matrix(const Mat3& m);
  static SymMat3 from_mandel(const Mandel6& v);

  double& operator[](int k) { return c_[k]; }
  double operator[](int k) const { return c_[k]; }
  double operator()(int i, int j) const;

  Mat3 matrix() const;
  /// Orthonormal coordinates (shear components scaled by sqrt 2).
  Mandel6 mandel() const;

  double trace() const { return c_[0] + c_[1] + c_[2]; }
  /// S : T.
  double ddot(const SymMat3& o) const { return mandel().dot(o.mandel()); }
  double min_eigenvalue() const;

  SymMat3& operator+=(const SymMat3& o) {
    c_ += o.c_;
    return *this;
  }
  SymMat3& operator-=(const SymMat3& o) {
    c_ -= o.c_;
    return *this;
  }
  SymMat3& operator*=(double s) {
    c_ *= s;
    return *this;
  }
  friend SymMat3 operator+(SymMat3 a, const SymMat3& b) { return a += b; }
  friend SymMat3 operator-(SymMat3 a, const SymMat3& b) { return a -= b; }
  friend SymMat3 operator*(SymMat3 a, double s) { return a *= s; }
  friend SymMat3 operator*(double s, SymMat3 a) { return a *= s; }

 private:
  Mandel6 c_;
};

/// Row-major vectorisation, index 3i + j.
Vec9 vec(const Mat3& m);
Mat3 unvec(const Vec9& v);

/// 9x6 map from Mandel coordinates of a symmetric tensor to its row-major
/// vectorisation. Its columns are orthonormal.
const Eigen::Matrix<double, 9, 6>& mandel_embedding();

/// Fourth-order tensor held both as a 6x6 Mandel matrix (action on symmetric
/// arguments) and as a 9x9 matrix on row-major vectorised 3x3 tensors.
class Tensor4Sym {
 public:
  Tensor4Sym() : mandel_(Mat6::Zero()), full_(Mat9::Zero()) {}

  /// Full form P M P^T; minor symmetric by construction.
  static Tensor4Sym from_mandel(const Mat6& m);
  /// Mandel form is the projection P^T F P onto symmetric arguments.
  static Tensor4Sym from_full(const Mat9& f);

  const Mat6& mandel() const { return mandel_; }
  const Mat9& full() const { return full_; }

  /// T(i, j, k, l) from the full form.
  double operator()(int i, int j, int k, int l) const { return full_(3 * i + j, 3 * k + l); }

  SymMat3 apply(const SymMat3& s) const { return SymMat3::from_mandel(mandel_ * s.mandel()); }
  Mat3 apply(const Mat3& m) const { return unvec(full_ * vec(m)); }

  /// Smallest eigenvalue over symmetric arguments.
  double min_eigenvalue() const;

  friend Tensor4Sym operator-(const Tensor4Sym& a, const Tensor4Sym& b);

 private:
  Tensor4Sym(Mat6 m, Mat9 f) : mandel_(std::move(m)), full_(std::move(f)) {}
  Mat6 mandel_;
  Mat9 full_;
};

Tensor4Sym operator-(const Tensor4Sym& a, const Tensor4Sym& b);

struct LameParams {
  double lambda = 1.0;
  double mu = 1.0;
  /// Throws InvalidModel unless mu > 0 and 3 lambda + 2 mu > 0.
  void validate() const;
};

/// lambda d_ij d_kl + mu (d_ik d_jl + d_il d_jk).
Tensor4Sym hooke(const LameParams& p);
/// Inverse of the Mandel form of H. Throws SingularHooke.
Tensor4Sym hooke_inverse(const LameParams& p);
Tensor4Sym hooke_inverse(const Tensor4Sym& h);

/// D_ijkl = d_ik d_jl: the identity on 3x3 tensors.
Tensor4Sym identity_tensor();
/// d_ij d_kl.
Tensor4Sym delta_delta_tensor();

/// (g + g^T + g^T g) / 2.
SymMat3 green_strain(const Mat3& g);
/// H : E(g).
SymMat3 stress(const LameParams& p, const Mat3& g);
SymMat3 stress(const Tensor4Sym& h, const Mat3& g);

/// Order of the product in v1 = A g (A = sigma + K I). kLeft is the defining
/// formula; kRight (g A) is the ordering under which v1 is the derivative of
/// the perturbed conjugate.
enum class V1Order { kLeft, kRight };
std::string to_string(V1Order o);

struct DualPoint {
  Mat3 v1 = Mat3::Zero();
  SymMat3 v2;
  SymMat3 z;
};

/// z = K sym(g0), v2 = sigma(g0) - z, v1 = (z + v2 + K I) g0 (or g0 times it).
DualPoint construct_duals_pointwise(const Tensor4Sym& h, double K, const Mat3& g0,
                                    V1Order order = V1Order::kLeft);
DualPoint construct_duals_pointwise(const LameParams& p, double K, const Mat3& g0,
                                    V1Order order = V1Order::kLeft);

/// Smallest eigenvalue of S + K I - (K/2) I.
double pd_margin(const SymMat3& s, double K);

/// Reading of the 3/(32K) term of M: times D (kIdentity) or times
/// d_ij d_kl (kDeltaDelta).
enum class DeltaMode { kIdentity, kDeltaDelta };
std::string to_string(DeltaMode m);

struct MCheck {
  Tensor4Sym M;
  /// Smallest eigenvalue on symmetric arguments; M is positive definite iff > 0.
  double min_eigenvalue = 0.0;
};

/// M = D/K - (3/(32K)) X - Hbar with X chosen by `mode`.
MCheck m_tensor_check(const LameParams& p, double K, DeltaMode mode = DeltaMode::kIdentity);

struct KMaxResult {
  /// Largest K found with M positive definite.
  double k_max = 0.0;
  /// Upper end of the final bracket (M not positive definite there).
  double k_fail = 0.0;
  int iterations = 0;
};

/// Bisection on K for the boundary of positive definiteness of M.
KMaxResult k_max_bisection(const LameParams& p, DeltaMode mode = DeltaMode::kIdentity,
                           double tol = 1e-14);

/// Independent estimate of K_max: evaluates the smallest eigenvalue of M on
/// `points` equally spaced K in [k_lo, k_hi] and interpolates the first sign
/// change linearly in 1/K. NaN if M never changes sign on the grid.
double k_max_grid_sweep(const LameParams& p, DeltaMode mode, double k_lo, double k_hi,
                        int points);

/// Spectral functions of a symmetric positive definite 3x3 matrix.
class SpdEigen {
 public:
  explicit SpdEigen(const Mat3& a);
  double min_eigenvalue() const { return values_.minCoeff(); }
  /// a^{-k}.
  Mat3 inverse_power(int k) const;

 private:
  Vec3 values_;
  Mat3 vectors_;
};

/// 1/2 tr(A^{-1} v1^T v1) + 1/2 S : Hbar : S with S = v2 + z, A = S + K I.
/// Throws NotPositiveDefinite when A is not positive definite.
double g_star_k_density(const Mat3& v1, const SymMat3& v2, const SymMat3& z,
                        const Tensor4Sym& hbar, double K);
double g_star_k_density(const Mat3& v1, const SymMat3& v2, const SymMat3& z,
                        const LameParams& p, double K);

/// z : z / (2K).
double f_star_3d_density(const SymMat3& z, double K);

/// f_star_3d_density - g_star_k_density.
double dual_density_3d(const Mat3& v1, const SymMat3& v2, const SymMat3& z,
                       const Tensor4Sym& hbar, double K);

/// Second derivative of the dual density in z:
/// D/K - 1/2 [A^-1 E_a A^-1 E_b A^-1 + (a <-> b)] : v1^T v1 - Hbar.
Tensor4Sym dstar_hessian_z_3d(const Mat3& v1, const SymMat3& v2, const SymMat3& z,
                              const Tensor4Sym& hbar, double K);
Tensor4Sym dstar_hessian_z_3d(const Mat3& v1, const SymMat3& v2, const SymMat3& z,
                              const LameParams& p, double K);

/// Pointwise stationarity of the Lagrangian density
/// dual_density_3d + (v1 + v2) : g in (z, v1, v2); Frobenius norms.
struct PointStationarity {
  double z = 0.0;
  double v1 = 0.0;
  double v2 = 0.0;
};
PointStationarity point_stationarity(const DualPoint& d, const Mat3& g, const Tensor4Sym& hbar,
                                     double K);

}  // namespace elastodual
