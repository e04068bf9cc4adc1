#pragma once
// Spherical harmonics on S^{n-1} with the probability measure, product quadrature,
// equator restriction and the zonal embedding of S^{n-2} harmonics.

#include "lorentz/common.hpp"
#include "lorentz/special.hpp"

#include <gmpxx.h>

#include <map>
#include <memory>
#include <numeric>
#include <vector>

namespace lorentz::harmonics {

// ---------------------------------------------------------------------------
// quadrature

struct QuadratureRule {
  int n = 0;
  int degree = 0;
  Mat nodes;    // rows are points of S^{n-1}
  Vec weights;  // positive, summing to 1
  int size() const { return static_cast<int>(weights.size()); }
};

/// Gauss rule for the weight (1-t^2)^{lambda-1/2} on [-1,1] via Golub-Welsch;
/// weights are normalized to sum to 1.
inline std::pair<Vec, Vec> gauss_gegenbauer(double lambda, int points) {
  Mat jac = Mat::Zero(points, points);
  for (int k = 1; k < points; ++k) {
    double b = std::sqrt(k * (k + 2.0 * lambda - 1.0) / (4.0 * (k + lambda) * (k + lambda - 1.0)));
    jac(k, k - 1) = jac(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<Mat> es(jac);
  Vec t = es.eigenvalues();
  Vec w(points);
  for (int i = 0; i < points; ++i) w(i) = es.eigenvectors()(0, i) * es.eigenvectors()(0, i);
  w /= w.sum();
  return {t, w};
}

/// Exact probability-measure moment of x_1^{2k} on S^{n-1}.
inline double sphere_even_moment(int n, int k) {
  double m = 1.0;
  for (int j = 0; j < k; ++j) m *= (2.0 * j + 1.0) / (n + 2.0 * j);
  return m;
}

namespace detail {
inline void build_sphere_rule(int n, int degree, Mat& nodes, Vec& weights) {
  if (n == 2) {
    const int k = degree + 1;
    nodes.resize(k, 2);
    weights = Vec::Constant(k, 1.0 / k);
    for (int j = 0; j < k; ++j) {
      double th = 2.0 * M_PI * (j + 0.5) / k;
      nodes(j, 0) = std::cos(th);
      nodes(j, 1) = std::sin(th);
    }
    return;
  }
  Mat sub_nodes;
  Vec sub_w;
  build_sphere_rule(n - 1, degree, sub_nodes, sub_w);
  auto [t, w] = gauss_gegenbauer(0.5 * (n - 2), degree / 2 + 1);
  const int q = static_cast<int>(t.size());
  const int s = static_cast<int>(sub_w.size());
  nodes.resize(q * s, n);
  weights.resize(q * s);
  for (int i = 0; i < q; ++i) {
    double r = std::sqrt(std::max(0.0, 1.0 - t(i) * t(i)));
    for (int j = 0; j < s; ++j) {
      int row = i * s + j;
      nodes(row, 0) = t(i);
      nodes.row(row).tail(n - 1) = r * sub_nodes.row(j);
      weights(row) = w(i) * sub_w(j);
    }
  }
}
}  // namespace detail

/// Product rule on S^{n-1}: Gauss in the polar coordinate x_1 (Legendre when n = 3,
/// Gegenbauer-weighted otherwise) times the recursive rule on the S^{n-2} slices.
/// Exactness is checked on even moments at construction.
inline QuadratureRule sphere_quadrature(int n, int degree) {
  if (n < 2) throw Error(Errc::invalid_dimension, "sphere_quadrature needs n >= 2");
  if (degree < 1) throw Error(Errc::invalid_input, "sphere_quadrature needs degree >= 1");
  QuadratureRule q;
  q.n = n;
  q.degree = degree;
  detail::build_sphere_rule(n, degree, q.nodes, q.weights);
  for (int k = 0; 2 * k <= degree; ++k) {
    for (int c : {0, n - 1}) {
      CompensatedSum s;
      for (int i = 0; i < q.size(); ++i) s.add(q.weights(i) * std::pow(q.nodes(i, c), 2 * k));
      if (std::abs(s.value() - sphere_even_moment(n, k)) > 1e-12)
        throw Error(Errc::numeric_failure, "quadrature failed its exactness check");
    }
  }
  return q;
}

template <class F>
double integrate(const QuadratureRule& q, F&& f) {
  CompensatedSum s;
  for (int i = 0; i < q.size(); ++i) s.add(q.weights(i) * f(Vec(q.nodes.row(i).transpose())));
  return s.value();
}

// ---------------------------------------------------------------------------
// exact harmonic basis from the monomial null space of the Laplacian

using Exponent = std::vector<int>;

inline std::vector<Exponent> monomials(int n, int degree) {
  std::vector<Exponent> out;
  Exponent e(n, 0);
  std::function<void(int, int)> rec = [&](int pos, int left) {
    if (pos == n - 1) {
      e[pos] = left;
      out.push_back(e);
      return;
    }
    for (int a = left; a >= 0; --a) {
      e[pos] = a;
      rec(pos + 1, left - a);
    }
  };
  if (n == 1) {
    out.push_back(Exponent{degree});
    return out;
  }
  rec(0, degree);
  return out;
}

/// Exact probability-measure integral of x^gamma over S^{n-1}.
inline mpq_class monomial_integral(const Exponent& g) {
  int total = 0;
  for (int a : g) {
    if (a % 2) return mpq_class(0);
    total += a;
  }
  const int n = static_cast<int>(g.size());
  mpq_class num(1), den(1);
  for (int a : g)
    for (int j = 1; j < a; j += 2) num *= j;
  for (int j = 0; j < total / 2; ++j) den *= (n + 2 * j);
  mpq_class r = num / den;
  r.canonicalize();
  return r;
}

/// Rational basis of ker(Laplacian) on homogeneous polynomials of degree m; columns
/// are coefficient vectors over monomials(n, m).
inline std::vector<std::vector<mpq_class>> harmonic_nullspace(int n, int m) {
  auto mons = monomials(n, m);
  const int cols = static_cast<int>(mons.size());
  if (m < 2) {
    std::vector<std::vector<mpq_class>> basis;
    for (int c = 0; c < cols; ++c) {
      std::vector<mpq_class> v(cols, mpq_class(0));
      v[c] = 1;
      basis.push_back(v);
    }
    return basis;
  }
  auto low = monomials(n, m - 2);
  std::map<Exponent, int> low_index;
  for (int i = 0; i < static_cast<int>(low.size()); ++i) low_index[low[i]] = i;
  const int rows = static_cast<int>(low.size());
  std::vector<std::vector<mpq_class>> a(rows, std::vector<mpq_class>(cols, mpq_class(0)));
  for (int c = 0; c < cols; ++c)
    for (int i = 0; i < n; ++i) {
      int ai = mons[c][i];
      if (ai < 2) continue;
      Exponent e = mons[c];
      e[i] -= 2;
      a[low_index[e]][c] += ai * (ai - 1);
    }
  // reduced row echelon form
  std::vector<int> pivot_col;
  int r = 0;
  for (int c = 0; c < cols && r < rows; ++c) {
    int p = -1;
    for (int i = r; i < rows; ++i)
      if (sgn(a[i][c]) != 0) {
        p = i;
        break;
      }
    if (p < 0) continue;
    std::swap(a[p], a[r]);
    mpq_class inv = 1 / a[r][c];
    for (int j = c; j < cols; ++j) a[r][j] *= inv;
    for (int i = 0; i < rows; ++i) {
      if (i == r || sgn(a[i][c]) == 0) continue;
      mpq_class f = a[i][c];
      for (int j = c; j < cols; ++j) a[i][j] -= f * a[r][j];
    }
    pivot_col.push_back(c);
    ++r;
  }
  std::vector<bool> is_pivot(cols, false);
  for (int c : pivot_col) is_pivot[c] = true;
  std::vector<std::vector<mpq_class>> basis;
  for (int f = 0; f < cols; ++f) {
    if (is_pivot[f]) continue;
    std::vector<mpq_class> v(cols, mpq_class(0));
    v[f] = 1;
    for (int i = 0; i < static_cast<int>(pivot_col.size()); ++i) v[pivot_col[i]] = -a[i][f];
    basis.push_back(v);
  }
  return basis;
}

/// Orthonormal basis of W_m in monomial coordinates. Gram matrix and its LDL^T
/// factorization are exact; only the final diagonal square roots are floating point.
struct PolynomialBasis {
  int n = 0;
  int m = 0;
  std::vector<Exponent> exponents;
  Mat coeffs;  // rows: monomials, cols: basis elements

  int size() const { return static_cast<int>(coeffs.cols()); }

  Vec eval(const Vec& x) const {
    std::vector<std::vector<long double>> pw(n, std::vector<long double>(m + 1, 1.0L));
    for (int i = 0; i < n; ++i)
      for (int k = 1; k <= m; ++k) pw[i][k] = pw[i][k - 1] * x(i);
    std::vector<long double> mon(exponents.size());
    for (std::size_t r = 0; r < exponents.size(); ++r) {
      long double v = 1.0L;
      for (int i = 0; i < n; ++i) v *= pw[i][exponents[r][i]];
      mon[r] = v;
    }
    Vec out(size());
    for (int c = 0; c < size(); ++c) {
      long double s = 0.0L;
      for (std::size_t r = 0; r < exponents.size(); ++r) s += static_cast<long double>(coeffs(r, c)) * mon[r];
      out(c) = static_cast<double>(s);
    }
    return out;
  }
};

inline PolynomialBasis harmonic_basis(int n, int m) {
  if (n < 2 || m < 0) throw Error(Errc::invalid_input, "harmonic_basis needs n >= 2, m >= 0");
  PolynomialBasis pb;
  pb.n = n;
  pb.m = m;
  pb.exponents = monomials(n, m);
  auto ns = harmonic_nullspace(n, m);
  const int d = static_cast<int>(ns.size());
  const int rows = static_cast<int>(pb.exponents.size());
  // exact Gram matrix
  std::vector<std::vector<mpq_class>> g(d, std::vector<mpq_class>(d, mpq_class(0)));
  std::map<Exponent, mpq_class> cache;
  auto integral = [&](const Exponent& a, const Exponent& b) {
    Exponent s(n);
    for (int i = 0; i < n; ++i) s[i] = a[i] + b[i];
    auto it = cache.find(s);
    if (it != cache.end()) return it->second;
    mpq_class v = monomial_integral(s);
    cache.emplace(s, v);
    return v;
  };
  std::vector<std::vector<int>> support(d);
  for (int c = 0; c < d; ++c)
    for (int r = 0; r < rows; ++r)
      if (sgn(ns[c][r]) != 0) support[c].push_back(r);
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) {
      mpq_class s(0);
      for (int r1 : support[i])
        for (int r2 : support[j]) s += ns[i][r1] * ns[j][r2] * integral(pb.exponents[r1], pb.exponents[r2]);
      g[i][j] = g[j][i] = s;
    }
  // exact LDL^T, then basis = ns * L^{-T} * D^{-1/2}
  std::vector<std::vector<mpq_class>> L(d, std::vector<mpq_class>(d, mpq_class(0)));
  std::vector<mpq_class> D(d);
  for (int j = 0; j < d; ++j) {
    mpq_class s = g[j][j];
    for (int k = 0; k < j; ++k) s -= L[j][k] * L[j][k] * D[k];
    D[j] = s;
    L[j][j] = 1;
    for (int i = j + 1; i < d; ++i) {
      mpq_class t = g[i][j];
      for (int k = 0; k < j; ++k) t -= L[i][k] * L[j][k] * D[k];
      L[i][j] = t / D[j];
    }
  }
  // Solve L^T X = I column by column: X = L^{-T} (upper triangular).
  std::vector<std::vector<mpq_class>> X(d, std::vector<mpq_class>(d, mpq_class(0)));
  for (int c = 0; c < d; ++c) {
    for (int i = d - 1; i >= 0; --i) {
      mpq_class s = (i == c) ? mpq_class(1) : mpq_class(0);
      for (int k = i + 1; k < d; ++k) s -= L[k][i] * X[k][c];
      X[i][c] = s;
    }
  }
  pb.coeffs = Mat::Zero(rows, d);
  for (int c = 0; c < d; ++c) {
    const double scale = 1.0 / std::sqrt(D[c].get_d());
    for (int r = 0; r < rows; ++r) {
      mpq_class s(0);
      for (int k = 0; k <= c; ++k)
        if (sgn(X[k][c]) != 0 && sgn(ns[k][r]) != 0) s += ns[k][r] * X[k][c];
      pb.coeffs(r, c) = s.get_d() * scale;
    }
  }
  return pb;
}

/// dim W_m on S^{n-1}.
inline int harmonic_dim(int n, int m) {
  if (n == 2) return m == 0 ? 1 : 2;
  // C(m+n-1, n-1) - C(m+n-3, n-1)
  auto binom = [](int a, int b) -> long long {
    if (b < 0 || a < b) return 0;
    long double r = 1;
    for (int i = 1; i <= b; ++i) r = r * (a - b + i) / i;
    return static_cast<long long>(std::llround(r));
  };
  return static_cast<int>(binom(m + n - 1, n - 1) - binom(m + n - 3, n - 1));
}

// ---------------------------------------------------------------------------
// adapted basis: W_m(S^{n-1}) = sum_l { Z(x') phi^{n+2l}_{m-l}(x_1) : Z in W_l(S^{n-2}) }

class HarmonicSystem {
 public:
  HarmonicSystem(int n, int m_max) : n_(n), m_max_(m_max) {
    if (n < 2) throw Error(Errc::invalid_dimension, "HarmonicSystem needs n >= 2");
    if (m_max < 0) throw Error(Errc::invalid_input, "HarmonicSystem needs m_max >= 0");
    if (n > 2) sub_ = std::make_shared<HarmonicSystem>(n - 1, m_max);
    offsets_.assign(m_max + 2, 0);
    for (int m = 0; m <= m_max; ++m) offsets_[m + 1] = offsets_[m] + harmonic_dim(n, m);
    if (n > 2) {
      norm_.assign(m_max + 1, std::vector<double>(m_max + 1, 0.0));
      const double cn = special::polar_density_constant(n);
      for (int m = 0; m <= m_max; ++m)
        for (int l = 0; l <= m; ++l) {
          double lambda = l + 0.5 * (n - 2);
          norm_[m][l] = 1.0 / std::sqrt(cn * std::exp(special::log_gegenbauer_norm2(lambda, m - l)));
        }
      // (m,l) block offsets within degree m
      block_.assign(m_max + 1, std::vector<int>(m_max + 2, 0));
      for (int m = 0; m <= m_max; ++m)
        for (int l = 0; l <= m; ++l) block_[m][l + 1] = block_[m][l] + harmonic_dim(n - 1, l);
    }
  }

  int n() const { return n_; }
  int m_max() const { return m_max_; }
  int size() const { return offsets_.back(); }
  int offset(int m) const { return offsets_[m]; }
  int dim(int m) const { return offsets_[m + 1] - offsets_[m]; }
  const HarmonicSystem* sub() const { return sub_.get(); }

  /// Index range of the (m,l) block inside the full vector (n >= 3).
  std::pair<int, int> block(int m, int l) const {
    return {offsets_[m] + block_[m][l], offsets_[m] + block_[m][l + 1]};
  }
  /// Normalization of the (m,l) block elements.
  double block_norm(int m, int l) const { return norm_[m][l]; }

  /// Values of every basis element at a point of S^{n-1}.
  void eval(const double* x, double* out) const {
    if (n_ == 2) {
      const double th = std::atan2(x[1], x[0]);
      out[0] = 1.0;
      for (int m = 1; m <= m_max_; ++m) {
        out[2 * m - 1] = M_SQRT2 * std::cos(m * th);
        out[2 * m] = M_SQRT2 * std::sin(m * th);
      }
      return;
    }
    const double t = x[0];
    const double r = std::sqrt(std::max(0.0, 1.0 - t * t));
    std::vector<double> omega(n_ - 1);
    if (r > 1e-300) {
      for (int i = 0; i < n_ - 1; ++i) omega[i] = x[i + 1] / r;
    } else {
      omega.assign(n_ - 1, 0.0);
      omega[0] = 1.0;
    }
    std::vector<double> subv(sub_->size());
    sub_->eval(omega.data(), subv.data());
    std::vector<double> geg(m_max_ + 1);
    std::vector<double> rpow(m_max_ + 1, 1.0);
    for (int l = 1; l <= m_max_; ++l) rpow[l] = rpow[l - 1] * r;
    for (int l = 0; l <= m_max_; ++l) {
      special::normalized_gegenbauer(l + 0.5 * (n_ - 2), m_max_ - l, t, geg.data());
      const int s0 = sub_->offset(l), sd = sub_->dim(l);
      for (int m = l; m <= m_max_; ++m) {
        const double f = norm_[m][l] * geg[m - l] * rpow[l];
        const int o = offsets_[m] + block_[m][l];
        for (int j = 0; j < sd; ++j) out[o + j] = f * subv[s0 + j];
      }
    }
  }

  Vec eval(const Vec& x) const {
    Vec out(size());
    eval(x.data(), out.data());
    return out;
  }

 private:
  int n_;
  int m_max_;
  std::shared_ptr<HarmonicSystem> sub_;
  std::vector<int> offsets_;
  std::vector<std::vector<double>> norm_;
  std::vector<std::vector<int>> block_;
};

// ---------------------------------------------------------------------------
// sampled models and spherical functions

/// Harmonic system up to m_max together with a quadrature rule and the sampled basis.
struct SphereModel {
  int n = 0;
  int m_max = 0;
  std::shared_ptr<HarmonicSystem> system;
  QuadratureRule quad;
  Mat basis_at_nodes;  // quad.size() x system->size()

  SphereModel(int n_, int m_max_, int quad_degree = -1)
      : n(n_), m_max(m_max_), system(std::make_shared<HarmonicSystem>(n_, m_max_)) {
    quad = sphere_quadrature(n, quad_degree > 0 ? quad_degree : 2 * m_max + 4);
    basis_at_nodes.resize(quad.size(), system->size());
    for (int i = 0; i < quad.size(); ++i) {
      Vec x = quad.nodes.row(i).transpose();
      Vec v = system->eval(x);
      basis_at_nodes.row(i) = v.transpose();
    }
  }

  int size() const { return system->size(); }

  Vec analysis(const Vec& samples) const {
    return basis_at_nodes.transpose() * quad.weights.cwiseProduct(samples);
  }
  Vec synthesis(const Vec& coeffs) const { return basis_at_nodes * coeffs; }

  /// Squared L^2 mass per degree.
  std::vector<double> degree_mass(const Vec& coeffs) const {
    std::vector<double> out(m_max + 1);
    for (int m = 0; m <= m_max; ++m) out[m] = coeffs.segment(system->offset(m), system->dim(m)).squaredNorm();
    return out;
  }
};

struct SphericalFunction {
  int n = 0;
  Vec samples;  // at the model's quadrature nodes
  Vec coeffs;   // in the model's harmonic basis
};

inline SphericalFunction from_coeffs(const SphereModel& model, const Vec& coeffs) {
  return {model.n, model.synthesis(coeffs), coeffs};
}

template <class F>
SphericalFunction from_function(const SphereModel& model, F&& f) {
  Vec s(model.quad.size());
  for (int i = 0; i < model.quad.size(); ++i) s(i) = f(Vec(model.quad.nodes.row(i).transpose()));
  return {model.n, s, model.analysis(s)};
}

/// Evaluate a coefficient vector anywhere on the sphere.
inline double evaluate(const SphereModel& model, const Vec& coeffs, const Vec& x) {
  return model.system->eval(x).dot(coeffs);
}

/// Restriction to the equator x_1 = 0, re-expanded on S^{n-2}.
inline SphericalFunction restrict(const SphereModel& model, const Vec& coeffs, const SphereModel& equator) {
  if (model.n < 3 || equator.n != model.n - 1) throw Error(Errc::invalid_dimension, "restrict needs n >= 3");
  Vec s(equator.quad.size());
  Vec x(model.n);
  for (int i = 0; i < equator.quad.size(); ++i) {
    x(0) = 0.0;
    x.tail(model.n - 1) = equator.quad.nodes.row(i).transpose();
    s(i) = evaluate(model, coeffs, x);
  }
  return {equator.n, s, equator.analysis(s)};
}

/// h(x_2..x_n) phi^{n+2l}_{m-l}(x_1) for h of degree l on S^{n-2}, given by its
/// coefficients in the equator model's degree-l block.
inline SphericalFunction embed_vtilde(const SphereModel& model, const SphereModel& equator, const Vec& h_coeffs,
                                      int l, int m, int zonal_index = -1) {
  if (l < 0 || l > m || (m - l) % 2 != 0) throw Error(Errc::parity_violation, "embed_vtilde needs m-l even, 0<=l<=m");
  const int N = zonal_index > 0 ? zonal_index : model.n + 2 * l;
  const auto& sub = *equator.system;
  return from_function(model, [&](const Vec& x) {
    const double t = x(0);
    const double r = std::sqrt(std::max(0.0, 1.0 - t * t));
    double hv = 0.0;
    if (l == 0) {
      hv = h_coeffs(0);
    } else if (r > 1e-300) {
      Vec omega = x.tail(model.n - 1) / r;
      Vec vals = sub.eval(omega);
      hv = std::pow(r, l) * vals.segment(sub.offset(l), sub.dim(l)).dot(h_coeffs);
    }
    return hv * special::phi_poly(N, m - l, t);
  });
}

/// Relative L^2 distance of f from W_m.
inline double projection_error(const SphereModel& model, const SphericalFunction& f, int m) {
  const int o = model.system->offset(m), d = model.system->dim(m);
  Vec resid = f.samples - model.basis_at_nodes.middleCols(o, d) * f.coeffs.segment(o, d);
  const double total = f.samples.cwiseAbs2().dot(model.quad.weights);
  return std::sqrt(resid.cwiseAbs2().dot(model.quad.weights) / std::max(total, 1e-300));
}

}  // namespace lorentz::harmonics
