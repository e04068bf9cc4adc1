#pragma once
// Structure of so(n,1) and SO(n,1) in the defining (n+1)-dimensional representation.
// Indices are 0-based: the Lorentz form is J = diag(1,...,1,-1) with the negative
// entry at index n.

#include "lorentz/common.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <complex>
#include <string>
#include <utility>
#include <vector>

namespace lorentz::liealg {

struct AlgebraElement {
  int n = 0;
  Mat mat;
};

struct GroupElement {
  int n = 0;
  Mat mat;
};

inline void require_dimension(int n, int min_n = 2) {
  if (n < min_n) throw Error(Errc::invalid_dimension, "n=" + std::to_string(n) + " < " + std::to_string(min_n));
}

inline Mat lorentz_form(int n) {
  Mat j = Mat::Identity(n + 1, n + 1);
  j(n, n) = -1.0;
  return j;
}

inline double algebra_defect(const Mat& a) {
  const int n = static_cast<int>(a.rows()) - 1;
  Mat j = lorentz_form(n);
  return (j * a.transpose() * j + a).cwiseAbs().maxCoeff();
}

inline double group_defect(const Mat& g) {
  const int n = static_cast<int>(g.rows()) - 1;
  Mat j = lorentz_form(n);
  Mat r = j * g.transpose() * j * g - Mat::Identity(n + 1, n + 1);
  return std::max(r.cwiseAbs().maxCoeff(), std::abs(g.determinant() - 1.0));
}

/// Inverse of a group element via the Lorentz form: g^{-1} = J g^T J.
inline Mat group_inverse(const Mat& g) {
  const int n = static_cast<int>(g.rows()) - 1;
  Mat j = lorentz_form(n);
  return j * g.transpose() * j;
}

/// Boost generator Y_k, k in 1..n.
inline Mat boost(int n, int k) {
  Mat y = Mat::Zero(n + 1, n + 1);
  y(k - 1, n) = 1.0;
  y(n, k - 1) = 1.0;
  return y;
}

/// Rotation generator Theta_ij = E_ji - E_ij, 1 <= i < j <= n.
inline Mat rotation(int n, int i, int j) {
  Mat t = Mat::Zero(n + 1, n + 1);
  t(j - 1, i - 1) = 1.0;
  t(i - 1, j - 1) = -1.0;
  return t;
}

/// The nilpotent flow generator.
inline Mat unipotent(int n) {
  require_dimension(n);
  Mat u = Mat::Zero(n + 1, n + 1);
  u(n - 2, n - 1) = 1.0;
  u(n - 2, n) = 1.0;
  u(n - 1, n - 2) = -1.0;
  u(n, n - 2) = 1.0;
  return u;
}

/// The opposite nilpotent completing the sl2 triple with unipotent(n) and boost(n, n).
inline Mat opposite_unipotent(int n) {
  require_dimension(n);
  Mat u = Mat::Zero(n + 1, n + 1);
  u(n - 2, n - 1) = -1.0;
  u(n - 2, n) = 1.0;
  u(n - 1, n - 2) = 1.0;
  u(n, n - 2) = 1.0;
  return u;
}

/// Geodesic generator Y_n.
inline Mat geodesic(int n) { return boost(n, n); }

struct Generators {
  int n = 0;
  std::vector<Mat> boosts;                  // Y_1..Y_n
  std::vector<Mat> rotations;               // Theta_ij, lexicographic in (i,j)
  std::vector<std::pair<int, int>> rotation_index;
  Mat U;
  Mat U_opp;

  /// Basis {Y_1..Y_n, Theta_12, Theta_13, ...} of the algebra.
  std::vector<Mat> basis() const {
    std::vector<Mat> b = boosts;
    b.insert(b.end(), rotations.begin(), rotations.end());
    return b;
  }
};

inline Generators generators(int n) {
  require_dimension(n);
  Generators g;
  g.n = n;
  for (int k = 1; k <= n; ++k) g.boosts.push_back(boost(n, k));
  for (int i = 1; i <= n; ++i)
    for (int j = i + 1; j <= n; ++j) {
      g.rotations.push_back(rotation(n, i, j));
      g.rotation_index.emplace_back(i, j);
    }
  g.U = unipotent(n);
  g.U_opp = opposite_unipotent(n);
  return g;
}

inline int algebra_dim(int n) { return n * (n + 1) / 2; }

/// Coordinates of an algebra element in the generator basis.
inline Vec coordinates(const Mat& a) {
  const int n = static_cast<int>(a.rows()) - 1;
  Vec c(algebra_dim(n));
  int idx = 0;
  for (int k = 1; k <= n; ++k) c(idx++) = a(k - 1, n);
  for (int i = 1; i <= n; ++i)
    for (int j = i + 1; j <= n; ++j) c(idx++) = a(j - 1, i - 1);
  return c;
}

inline Mat from_coordinates(int n, const Vec& c) {
  Mat a = Mat::Zero(n + 1, n + 1);
  int idx = 0;
  for (int k = 1; k <= n; ++k) a += c(idx++) * boost(n, k);
  for (int i = 1; i <= n; ++i)
    for (int j = i + 1; j <= n; ++j) a += c(idx++) * rotation(n, i, j);
  return a;
}

inline Mat bracket(const Mat& a, const Mat& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw Error(Errc::dimension_mismatch, "bracket of differently sized elements");
  return a * b - b * a;
}

inline AlgebraElement bracket(const AlgebraElement& a, const AlgebraElement& b) {
  if (a.n != b.n) throw Error(Errc::dimension_mismatch, "bracket across different n");
  return {a.n, bracket(a.mat, b.mat)};
}

/// Matrix of ad(a) in the generator basis.
inline Mat ad_matrix(const Mat& a) {
  const int n = static_cast<int>(a.rows()) - 1;
  const int d = algebra_dim(n);
  Mat m(d, d);
  Vec e = Vec::Zero(d);
  for (int c = 0; c < d; ++c) {
    e.setZero();
    e(c) = 1.0;
    m.col(c) = coordinates(bracket(a, from_coordinates(n, e)));
  }
  return m;
}

inline double killing_form(const Mat& a, const Mat& b) {
  if (a.rows() != b.rows()) throw Error(Errc::dimension_mismatch, "killing_form across different n");
  return (ad_matrix(a) * ad_matrix(b)).trace();
}

/// Gram matrix of the Killing form in the generator basis.
inline Mat killing_gram(int n) {
  const int d = algebra_dim(n);
  std::vector<Mat> ads;
  Vec e = Vec::Zero(d);
  for (int c = 0; c < d; ++c) {
    e.setZero();
    e(c) = 1.0;
    ads.push_back(ad_matrix(from_coordinates(n, e)));
  }
  Mat k(d, d);
  for (int r = 0; r < d; ++r)
    for (int c = r; c < d; ++c) k(r, c) = k(c, r) = (ads[r] * ads[c]).trace();
  return k;
}

/// Orthonormal basis (columns) of the null space of m, by SVD with relative tolerance.
inline Mat null_space(const Mat& m, double rel_tol = 1e-10) {
  Eigen::JacobiSVD<Mat> svd(m, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  const double scale = s.size() > 0 ? std::max(1.0, s(0)) : 1.0;
  int rank = 0;
  for (int i = 0; i < s.size(); ++i)
    if (s(i) > rel_tol * scale) ++rank;
  return svd.matrixV().rightCols(m.cols() - rank);
}

// ---------------------------------------------------------------------------
// exponential and principal logarithm

inline Mat exp_matrix(const Mat& a) { return a.exp(); }

inline Mat log_principal(const Mat& g) {
  Eigen::EigenSolver<Mat> es(g, false);
  const double scale = std::max(1.0, g.norm());
  for (int i = 0; i < es.eigenvalues().size(); ++i) {
    std::complex<double> lam = es.eigenvalues()(i);
    if (lam.real() < 0 && std::abs(lam.imag()) <= 1e-12 * scale)
      throw Error(Errc::branch_cut, "eigenvalue on the negative real axis");
  }
  return g.log();
}

// ---------------------------------------------------------------------------
// root space decomposition with respect to ad(Y_n)

struct RootComponents {
  Mat minus;   // eigenvalue -1
  Mat m;       // centralizer of Y_n inside K
  Mat a;       // multiples of Y_n
  Mat plus;    // eigenvalue +1
};

inline RootComponents root_space_decompose(const Mat& x) {
  const int n = static_cast<int>(x.rows()) - 1;
  Mat y = geodesic(n);
  Mat ad1 = bracket(y, x);
  Mat ad2 = bracket(y, ad1);
  RootComponents r;
  r.plus = 0.5 * (ad2 + ad1);
  r.minus = 0.5 * (ad2 - ad1);
  Mat zero = x - ad2;
  r.a = zero(n - 1, n) * y;
  r.m = zero - r.a;
  return r;
}

// ---------------------------------------------------------------------------
// sl2 triple and weight strings

struct WeightString {
  int highest_weight = 0;        // varsigma
  std::vector<Mat> vectors;      // v_0 .. v_varsigma with U.v_i = (i+1) v_{i+1}
};

struct WeightDecomposition {
  int n = 0;
  Mat U, Yn, U_opp;
  double triple_scalar = 0.0;    // [U, U_opp] = triple_scalar * Y_n
  std::vector<WeightString> strings;
  Mat vperp_basis;               // coordinates (columns) of a basis of the Killing complement

  /// Weight coordinates b_i of v in V-perp, concatenated string by string.
  Vec weight_coordinates(const Mat& v) const {
    int total = 0;
    for (auto& s : strings) total += static_cast<int>(s.vectors.size());
    Mat b(algebra_dim(n), total);
    int c = 0;
    for (auto& s : strings)
      for (auto& w : s.vectors) b.col(c++) = coordinates(w);
    return b.colPivHouseholderQr().solve(coordinates(v));
  }

  Mat from_weight_coordinates(const Vec& b) const {
    Mat v = Mat::Zero(n + 1, n + 1);
    int c = 0;
    for (auto& s : strings)
      for (auto& w : s.vectors) v += b(c++) * w;
    return v;
  }
};

/// Scalar c with [U, U_opp] = c Y_n, by direct bracket.
inline double triple_scalar(int n) {
  Mat br = bracket(unipotent(n), opposite_unipotent(n));
  return br(n - 1, n);
}

inline WeightDecomposition sl2_weight_decompose(int n) {
  require_dimension(n);
  WeightDecomposition w;
  w.n = n;
  w.U = unipotent(n);
  w.Yn = geodesic(n);
  w.U_opp = opposite_unipotent(n);
  w.triple_scalar = triple_scalar(n);
  const int d = algebra_dim(n);

  Mat kg = killing_gram(n);
  Mat s(d, 3);
  s.col(0) = coordinates(w.U);
  s.col(1) = coordinates(w.Yn);
  s.col(2) = coordinates(w.U_opp);
  w.vperp_basis = null_space(s.transpose() * kg);
  const int dperp = static_cast<int>(w.vperp_basis.cols());
  if (dperp == 0) return w;

  // Work inside V-perp: restrict ad(Y_n), ad(U_opp) to the complement coordinates.
  Mat P = w.vperp_basis;
  Mat pinv = P.completeOrthogonalDecomposition().pseudoInverse();
  Mat adY = pinv * ad_matrix(w.Yn) * P;
  Mat adUo = pinv * ad_matrix(w.U_opp) * P;
  Mat adU = pinv * ad_matrix(w.U) * P;

  auto eigen_space = [&](double lambda) {
    return null_space(adY - lambda * Mat::Identity(dperp, dperp), 1e-9);
  };

  // Highest weight vectors: killed by the raising operator ad(U_opp).
  for (int hw : {2, 1, 0}) {
    Mat es = eigen_space(hw / 2.0);
    if (es.cols() == 0) continue;
    Mat kill = null_space(adUo * es, 1e-9);
    if (kill.cols() == 0) continue;
    Mat top = es * kill;  // columns in V-perp coordinates
    // Orthonormalize for a deterministic basis choice.
    Eigen::HouseholderQR<Mat> qr(top);
    Mat q = qr.householderQ() * Mat::Identity(top.rows(), top.cols());
    for (int c = 0; c < q.cols(); ++c) {
      WeightString str;
      str.highest_weight = hw;
      Vec v = q.col(c);
      str.vectors.push_back(from_coordinates(n, P * v));
      for (int i = 0; i < hw; ++i) {
        v = (adU * v) / static_cast<double>(i + 1);
        str.vectors.push_back(from_coordinates(n, P * v));
      }
      w.strings.push_back(std::move(str));
    }
  }
  return w;
}

// ---------------------------------------------------------------------------
// centralizer of U

/// Block-form basis: the so(n-2) rotations on the first n-2 coordinates and the
/// nilpotent family N_k = -Theta_kn + Y_k, k = 1..n-1 (N_{n-1} = U).
inline std::vector<Mat> centralizer_basis(int n) {
  require_dimension(n);
  std::vector<Mat> out;
  for (int i = 1; i <= n - 2; ++i)
    for (int j = i + 1; j <= n - 2; ++j) out.push_back(rotation(n, i, j));
  for (int k = 1; k <= n - 1; ++k) out.push_back(boost(n, k) - rotation(n, k, n));
  return out;
}

/// Dimension of ker(ad U) by numerical rank.
inline int centralizer_dim_bruteforce(int n) {
  return static_cast<int>(null_space(ad_matrix(unipotent(n)), 1e-12).cols());
}

// ---------------------------------------------------------------------------
// one-parameter subgroups

inline Mat u_flow(int n, double t) {
  // U is nilpotent of order 3 in the defining representation.
  Mat u = unipotent(n);
  return Mat::Identity(n + 1, n + 1) + t * u + 0.5 * t * t * (u * u);
}

inline Mat a_flow(int n, double t) {
  Mat a = Mat::Identity(n + 1, n + 1);
  a(n - 1, n - 1) = std::cosh(t);
  a(n, n) = std::cosh(t);
  a(n - 1, n) = std::sinh(t);
  a(n, n - 1) = std::sinh(t);
  return a;
}

/// Ad(u^s) X = X + s[U,X] + s^2/2 [U,[U,X]] (ad U is nilpotent of order 3 on g).
inline Mat ad_u_flow(const Mat& x, double s) {
  const int n = static_cast<int>(x.rows()) - 1;
  Mat u = unipotent(n);
  Mat b1 = bracket(u, x);
  Mat b2 = bracket(u, b1);
  return x + s * b1 + 0.5 * s * s * b2;
}

// ---------------------------------------------------------------------------
// Iwasawa decomposition g = k exp(t Y_n) nu, nu in exp(g_1)

struct Iwasawa {
  Mat k;
  double t = 0.0;
  Mat nu;
  Mat w;                 // log nu, an element of g_1
  double condition = 1.0;
};


/// K/M part of the Iwasawa projection of g k, where k e_n = x: g (x,1) = e^H (kappa,1).
struct BoundaryImage {
  Vec point;
  double H = 0.0;
};

inline BoundaryImage boundary_action(const Mat& g, const Vec& x) {
  const int n = static_cast<int>(g.rows()) - 1;
  Vec p(n + 1);
  p.head(n) = x;
  p(n) = 1.0;
  Vec gp = g * p;
  BoundaryImage b;
  if (!(gp(n) > 0)) throw Error(Errc::numeric_failure, "boundary action left the forward light cone");
  b.H = std::log(gp(n));
  b.point = gp.head(n) / gp(n);
  b.point /= b.point.norm();
  return b;
}

/// g = k exp(t Y_n) nu. With xi = e_n + e_{n+1} fixed by N: g xi = e^t k xi, and
/// nu e_j = e_j + c_j xi for j < n, so c_j = (g e_j)_{n+1} / (g xi)_{n+1}. The K factor is
/// assembled from columns of g without re-orthogonalizing, which keeps the product exact
/// to rounding; its orthogonality defect grows like eps * condition.
inline Iwasawa iwasawa(const Mat& g) {
  const int n = static_cast<int>(g.rows()) - 1;
  require_dimension(n);
  Iwasawa r;
  r.condition = g.norm() * group_inverse(g).norm();
  Vec gx = g.col(n - 1) + g.col(n);
  if (!(gx(n) > 0)) throw Error(Errc::numeric_failure, "g does not preserve the forward cone");
  r.t = std::log(gx(n));
  r.k = Mat::Identity(n + 1, n + 1);
  r.w = Mat::Zero(n + 1, n + 1);
  for (int j = 0; j < n - 1; ++j) {
    const double c = g(n, j) / gx(n);
    r.k.col(j).head(n) = g.col(j).head(n) - c * gx.head(n);
    r.w += c * (boost(n, j + 1) + rotation(n, j + 1, n));
  }
  r.k.col(n - 1).head(n) = gx.head(n) / gx(n);
  r.nu = Mat::Identity(n + 1, n + 1) + r.w + 0.5 * r.w * r.w;
  if (!std::isfinite(r.nu.norm()) || !std::isfinite(r.k.norm()))
    throw Error(Errc::numeric_failure, "Iwasawa produced non-finite factors (condition " +
                                           std::to_string(r.condition) + ")");
  return r;
}

inline double iwasawa_reconstruction_error(const Mat& g, const Iwasawa& r) {
  const int n = static_cast<int>(g.rows()) - 1;
  Mat rec = r.k * a_flow(n, r.t) * r.nu;
  return (rec - g).norm() / std::max(1.0, g.norm());
}

// ---------------------------------------------------------------------------
// random elements

inline Mat random_algebra_element(int n, CounterRng& rng, double scale = 1.0) {
  Vec c(algebra_dim(n));
  for (int i = 0; i < c.size(); ++i) c(i) = scale * rng.normal();
  return from_coordinates(n, c);
}

inline Mat random_group_element(int n, CounterRng& rng, double scale = 1.0) {
  return exp_matrix(random_algebra_element(n, rng, scale));
}

}  // namespace lorentz::liealg
