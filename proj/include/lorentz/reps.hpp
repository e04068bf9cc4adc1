#pragma once
// Spherical complementary series of SO(n,1) realized on L^2(S^{n-1}).
//
// RepContext(n, nu, ...) models pi_{-nu}: (pi(g) f)(x) = e^{-(rho - nu) H} f(kappa), where
// g^{-1}(x, 1) = e^H (kappa, 1). Its unitarizing weight on W_m is (rho+nu)_m / (rho-nu)_m.
// The subgroup SO(n-1,1) acts on coordinates 2..n+1 and fixes x_1.

#include "lorentz/common.hpp"
#include "lorentz/harmonics.hpp"
#include "lorentz/liealg.hpp"
#include "lorentz/special.hpp"

#include <limits>
#include <map>
#include <memory>
#include <optional>

namespace lorentz::reps {

using harmonics::SphereModel;

inline double half_sum_rho(int n) { return 0.5 * (n - 1); }

// ---------------------------------------------------------------------------
// Casimir scalars

/// Scalar of -sum Y_k^2 + sum Theta_ij^2 on the representation with M-highest weight
/// nvec (length floor((n-1)/2)) and parameter nu.
inline double casimir_scalar(int n, const std::vector<int>& nvec, double nu) {
  if (n < 2) throw Error(Errc::invalid_dimension, "casimir_scalar needs n >= 2");
  const int len = (n - 1) / 2;
  if (static_cast<int>(nvec.size()) != len)
    throw Error(Errc::invalid_input, "M-highest weight must have length floor((n-1)/2)");
  const double rho = half_sum_rho(n);
  double s = 0.0;
  if (n % 2 == 0) {
    for (int i = 0; i < len; ++i) {
      if (nvec[i] < 0 || (i > 0 && nvec[i] < nvec[i - 1]))
        throw Error(Errc::invalid_input, "M-highest weight must be nondecreasing and nonnegative");
      s += nvec[i] * (nvec[i] + 2.0 * (i + 1) - 1.0);
    }
  } else {
    for (int i = 0; i < len; ++i) {
      if ((i == 1 && nvec[1] < std::abs(nvec[0])) || (i > 1 && nvec[i] < nvec[i - 1]))
        throw Error(Errc::invalid_input, "M-highest weight must satisfy |n_1| <= n_2 <= ...");
      s += nvec[i] * (nvec[i] + 2.0 * (i + 1) - 2.0);
    }
  }
  return rho * rho - nu * nu - s;
}

inline double casimir_scalar(int n, double nu) {
  return casimir_scalar(n, std::vector<int>((n - 1) / 2, 0), nu);
}

/// Scalar of sum Theta_ij^2 on the SO(n)-type with highest weight mvec
/// (length ceil((n-1)/2)).
inline double casimir_k_scalar(int n, const std::vector<int>& mvec) {
  if (n < 2) throw Error(Errc::invalid_dimension, "casimir_k_scalar needs n >= 2");
  const int len = n / 2;
  if (static_cast<int>(mvec.size()) != len)
    throw Error(Errc::invalid_input, "K-highest weight must have length ceil((n-1)/2)");
  double s = 0.0;
  for (int i = 0; i < len; ++i) {
    if (n % 2 == 0) {
      if (n > 2 && ((i == 1 && mvec[1] < std::abs(mvec[0])) || (i > 1 && mvec[i] < mvec[i - 1])))
        throw Error(Errc::invalid_input, "K-highest weight must satisfy |m_1| <= m_2 <= ...");
      s += mvec[i] * (mvec[i] + 2.0 * (i + 1) - 2.0);
    } else {
      if (mvec[i] < 0 || (i > 0 && mvec[i] < mvec[i - 1]))
        throw Error(Errc::invalid_input, "K-highest weight must be nondecreasing and nonnegative");
      s += mvec[i] * (mvec[i] + 2.0 * (i + 1) - 1.0);
    }
  }
  return -s;
}

/// The spherical K-type (0, ..., 0, m).
inline std::vector<int> spherical_k_type(int n, int m) {
  std::vector<int> v(n / 2, 0);
  v.back() = m;
  return v;
}

// ---------------------------------------------------------------------------
// norms

/// (rho+nu)_m / (rho-nu)_m, through log-Gamma.
inline double d_coefficient(int n, double nu, int m) {
  const double rho = half_sum_rho(n);
  if (!(std::abs(nu) < rho)) throw Error(Errc::domain_error, "d_coefficient needs |nu| < rho = " + std::to_string(rho));
  if (m < 0) throw Error(Errc::invalid_input, "d_coefficient needs m >= 0");
  if (m == 0) return 1.0;
  return std::exp(special::log_pochhammer(rho + nu, m) - special::log_pochhammer(rho - nu, m));
}

inline double log_d_coefficient(int n, double nu, int m) {
  const double rho = half_sum_rho(n);
  if (!(std::abs(nu) < rho)) throw Error(Errc::domain_error, "d_coefficient needs |nu| < rho");
  return special::log_pochhammer(rho + nu, m) - special::log_pochhammer(rho - nu, m);
}

/// (1 + c_n(0,nu) - 2 c_K(m))^s.
inline double sobolev_weight(int n, double nu, double s, int m) {
  const double base = 1.0 + casimir_scalar(n, nu) - 2.0 * casimir_k_scalar(n, spherical_k_type(n, m));
  if (!(base > 0)) throw Error(Errc::domain_error, "Sobolev base is not positive: " + std::to_string(base));
  return s == 0.0 ? 1.0 : std::pow(base, s);
}

inline double log_sobolev_weight(int n, double nu, double s, int m) {
  const double base = 1.0 + casimir_scalar(n, nu) + 2.0 * m * (m + n - 2.0);
  if (!(base > 0)) throw Error(Errc::domain_error, "Sobolev base is not positive");
  return s * std::log(base);
}

/// Subgroup data for the restriction target: SO(n-1,1) at parameter nu - 1/2.
inline double flat_nu(double nu) { return nu - 0.5; }

// ---------------------------------------------------------------------------
// context

struct RepContext {
  int n = 0;
  double nu = 0.0;
  int m_max = 0;
  double s = 0.0;
  std::shared_ptr<SphereModel> model;

  double rho() const { return half_sum_rho(n); }
  double flat_rho() const { return half_sum_rho(n - 1); }
  double multiplier_exponent() const { return rho() - nu; }

  /// L^2 weight of W_m in the Hilbert (d_m) and Sobolev scales.
  double hilbert_weight(int m) const { return d_coefficient(n, nu, m); }
  double sobolev_scale_weight(int m) const { return d_coefficient(n, nu, m) * sobolev_weight(n, nu, s, m); }

  /// Weight vector over the model basis.
  Vec coefficient_weights(bool sobolev) const {
    Vec w(model->size());
    for (int m = 0; m <= m_max; ++m) {
      const double v = sobolev ? sobolev_scale_weight(m) : hilbert_weight(m);
      w.segment(model->system->offset(m), model->system->dim(m)).setConstant(v);
    }
    return w;
  }

  double hilbert_norm(const Vec& c) const { return std::sqrt(c.cwiseAbs2().dot(coefficient_weights(false))); }
  double sobolev_norm(const Vec& c) const { return std::sqrt(c.cwiseAbs2().dot(coefficient_weights(true))); }
};

inline RepContext make_context(int n, double nu, int m_max, double s = 0.0, int quad_degree = -1) {
  if (n < 2) throw Error(Errc::invalid_dimension, "representation needs n >= 2");
  if (!(std::abs(nu) < half_sum_rho(n)))
    throw Error(Errc::domain_error, "complementary series needs |nu| < rho = " + std::to_string(half_sum_rho(n)));
  if (m_max < 4) throw Error(Errc::invalid_input, "truncation degree must be >= 4");
  if (s < 0) throw Error(Errc::invalid_input, "Sobolev order must be >= 0");
  const int deg = quad_degree > 0 ? quad_degree : 2 * m_max + 4;
  if (deg < 2 * m_max + 4) throw Error(Errc::quadrature_insufficient, "quadrature degree must be >= 2 m_max + 4");
  RepContext c;
  c.n = n;
  c.nu = nu;
  c.m_max = m_max;
  c.s = s;
  c.model = std::make_shared<SphereModel>(n, m_max, deg);
  return c;
}

// ---------------------------------------------------------------------------
// group action

struct ActionResult {
  Vec coeffs;
  double leakage = 0.0;  // relative L^2 mass outside the truncation, on the quadrature
};

namespace detail {
inline int top_degree(const SphereModel& model, const Vec& c) {
  for (int m = model.m_max; m >= 0; --m)
    if (c.segment(model.system->offset(m), model.system->dim(m)).cwiseAbs().maxCoeff() != 0.0) return m;
  return 0;
}
}  // namespace detail

/// Samples of pi(g) f at the quadrature nodes.
inline Vec action_samples(const RepContext& ctx, const Mat& g, const Vec& coeffs) {
  const auto& model = *ctx.model;
  if (g.rows() != ctx.n + 1) throw Error(Errc::dimension_mismatch, "group element has wrong size");
  const int top = detail::top_degree(model, coeffs);
  harmonics::HarmonicSystem sys(ctx.n, top);
  const Vec c = coeffs.head(sys.size());
  const Mat ginv = liealg::group_inverse(g);
  const double a = ctx.multiplier_exponent();
  Vec out(model.quad.size());
  parallel_for(static_cast<std::size_t>(model.quad.size()), [&](std::size_t i) {
    Vec x = model.quad.nodes.row(static_cast<Eigen::Index>(i)).transpose();
    auto b = liealg::boundary_action(ginv, x);
    Vec vals(sys.size());
    sys.eval(b.point.data(), vals.data());
    out(static_cast<Eigen::Index>(i)) = std::exp(-a * b.H) * vals.dot(c);
  });
  return out;
}

inline ActionResult pi_action(const RepContext& ctx, const Mat& g, const Vec& coeffs) {
  if (coeffs.size() != ctx.model->size()) throw Error(Errc::dimension_mismatch, "coefficient vector has wrong size");
  Vec samples = action_samples(ctx, g, coeffs);
  ActionResult r;
  r.coeffs = ctx.model->analysis(samples);
  Vec resid = samples - ctx.model->synthesis(r.coeffs);
  const double total = samples.cwiseAbs2().dot(ctx.model->quad.weights);
  r.leakage = std::sqrt(resid.cwiseAbs2().dot(ctx.model->quad.weights) / std::max(total, 1e-300));
  return r;
}

/// dpi(X) f by central differences along exp(hX) with one Richardson step.
inline Vec lie_derivative(const RepContext& ctx, const Mat& X, const Vec& coeffs, double h = -1.0) {
  if (h <= 0) h = 0.05 / (ctx.m_max + 1.0);
  if (h < 1e-8) throw Error(Errc::numeric_failure, "Lie derivative step underflow");
  if (X.norm() == 0.0) return Vec::Zero(coeffs.size());
  auto central = [&](double step) {
    Vec p = pi_action(ctx, liealg::exp_matrix(step * X), coeffs).coeffs;
    Vec m = pi_action(ctx, liealg::exp_matrix(-step * X), coeffs).coeffs;
    return Vec((p - m) / (2.0 * step));
  };
  Vec d1 = central(h);
  Vec d2 = central(0.5 * h);
  return (4.0 * d2 - d1) / 3.0;
}

/// -sum dpi(Y_k)^2 f + sum dpi(Theta_ij)^2 f.
inline Vec apply_casimir_numeric(const RepContext& ctx, const Vec& coeffs, double h = -1.0) {
  const int top = detail::top_degree(*ctx.model, coeffs);
  if (top + 2 > ctx.m_max) throw Error(Errc::numeric_failure, "Casimir needs two degrees of headroom in the truncation");
  auto gens = liealg::generators(ctx.n);
  Vec out = Vec::Zero(coeffs.size());
  for (auto& y : gens.boosts) out -= lie_derivative(ctx, y, lie_derivative(ctx, y, coeffs, h), h);
  for (auto& t : gens.rotations) out += lie_derivative(ctx, t, lie_derivative(ctx, t, coeffs, h), h);
  return out;
}

/// Embed an element of SO(n-1,1) (acting on x_2..x_n, x_{n+1}) into SO(n,1).
inline Mat embed_subgroup(const Mat& h) {
  const int k = static_cast<int>(h.rows());
  Mat g = Mat::Identity(k + 1, k + 1);
  g.bottomRightCorner(k, k) = h;
  return g;
}

// ---------------------------------------------------------------------------
// restriction blocks

struct BlockFormula {
  double value = 0.0;
  bool parity_violation = false;
};

inline double log_res_block_formula(int n, int m, int l) {
  using special::log_gamma;
  const int al = std::abs(l);
  return std::log(2.0 * m + n - 2.0) + log_gamma(0.5 * n) + log_gamma(0.5 * (n + m + al - 2.0)) +
         log_gamma(0.5 * (m - al + 1.0)) - log_gamma(0.5 * (n - 1.0)) - log_gamma(0.5) -
         log_gamma(0.5 * (m - al + 2.0)) - log_gamma(0.5 * (n + m + al - 1.0));
}

/// Closed-form squared L^2 norm of the (m,l) restriction block, in the normalization of
/// the source formula (unit-mass factor not applied).
inline BlockFormula res_block_norm_formula(int n, int m, int l) {
  if (n < 3) throw Error(Errc::invalid_dimension, "restriction needs n >= 3");
  if (m < 0 || std::abs(l) > m) throw Error(Errc::invalid_input, "restriction block needs |l| <= m");
  if (n > 3 && l < 0) throw Error(Errc::invalid_input, "negative l only occurs for n = 3");
  BlockFormula f;
  if ((m - l) % 2 != 0) {
    f.parity_violation = true;
    return f;
  }
  f.value = std::exp(log_res_block_formula(n, m, l));
  return f;
}

/// Squared operator norm of W_m -> V_l under restriction to x_1 = 0, from exact harmonic
/// bases, equator quadrature and an SVD. Probability measures on both spheres.
inline double res_block_norm_numeric(int n, int m, int l, int quad_degree = -1) {
  if (n < 3) throw Error(Errc::invalid_dimension, "restriction needs n >= 3");
  const int al = std::abs(l);
  if (m < 0 || al > m) throw Error(Errc::invalid_input, "restriction block needs |l| <= m");
  const int deg = quad_degree > 0 ? quad_degree : m + al + 2;
  if (deg < m + al) throw Error(Errc::quadrature_insufficient, "equator quadrature must integrate degree m + l");
  auto src = harmonics::harmonic_basis(n, m);
  auto dst = harmonics::harmonic_basis(n - 1, al);
  auto q = harmonics::sphere_quadrature(n - 1, deg);
  Mat a = Mat::Zero(dst.size(), src.size());
  Vec x(n);
  for (int i = 0; i < q.size(); ++i) {
    x(0) = 0.0;
    x.tail(n - 1) = q.nodes.row(i).transpose();
    Vec ys = src.eval(x);
    Vec zs = dst.eval(Vec(q.nodes.row(i).transpose()));
    a.noalias() += q.weights(i) * zs * ys.transpose();
  }
  // n = 3, l != 0: the degree-|l| block holds both characters +-l; they share the norm.
  Eigen::JacobiSVD<Mat> svd(a);
  return svd.singularValues().size() ? svd.singularValues()(0) * svd.singularValues()(0) : 0.0;
}

/// numeric / formula at m = l = 0; the formula's measure normalization differs from the
/// probability measure by this factor.
inline double res_calibration(int n) { return res_block_norm_numeric(n, 0, 0) / res_block_norm_formula(n, 0, 0).value; }

struct BlockNorms {
  double l2 = 0.0;
  double hilbert = 0.0;
  double sobolev = 0.0;
};

/// Norms of Res_{m,l} in L^2, in (H_{-nu}, H^flat_{1/2-nu}) and in the Sobolev-s scales,
/// computed from the calibrated closed form in log space.
inline BlockNorms block_norms(int n, double nu, double s, int m, int l, double calibration) {
  BlockNorms b;
  if ((m - l) % 2 != 0) return b;
  const double log_l2 = log_res_block_formula(n, m, l) + std::log(calibration);
  const int al = std::abs(l);
  const double log_h = log_l2 + log_d_coefficient(n - 1, flat_nu(nu), al) - log_d_coefficient(n, nu, m);
  const double log_s = log_h + log_sobolev_weight(n - 1, flat_nu(nu), s, al) - log_sobolev_weight(n, nu, s, m);
  b.l2 = std::exp(0.5 * log_l2);
  b.hilbert = std::exp(0.5 * log_h);
  b.sobolev = std::exp(0.5 * log_s);
  return b;
}

struct BlockNormTable {
  int n = 0;
  double nu = 0.0, s = 0.0;
  std::map<std::pair<int, int>, BlockNorms> entries;
};

inline BlockNormTable block_norm_table(int n, double nu, double s, int m_max) {
  BlockNormTable t;
  t.n = n;
  t.nu = nu;
  t.s = s;
  const double cal = res_calibration(n);
  const int lmin = n == 3 ? -1 : 0;
  for (int m = 0; m <= m_max; ++m)
    for (int l = lmin * m; l <= m; ++l) t.entries[{m, l}] = block_norms(n, nu, s, m, l, cal);
  return t;
}

// ---------------------------------------------------------------------------
// branching sums

struct BranchingSum {
  int l = 0;
  double partial_sum = 0.0;
  double tail_bound = 0.0;       // +inf when the local decay exponent is <= 1
  double first_term = 0.0;
  double decay_exponent = 0.0;   // local log-log slope of the terms near the cutoff
  bool below_flat_rho = false;   // nu <= rho_flat: divergence expected
};

/// Sum over m >= |l|, m - l even, m <= cutoff of the squared Sobolev-scale block norms,
/// with an integral-test tail estimate from the local decay exponent.
inline BranchingSum branching_sum(int n, double nu, double s, int l, int m_cutoff, double calibration = -1.0) {
  if (n < 3) throw Error(Errc::invalid_dimension, "branching needs n >= 3");
  if (!(std::abs(nu) < half_sum_rho(n))) throw Error(Errc::domain_error, "branching needs |nu| < rho");
  if (!(std::abs(flat_nu(nu)) < half_sum_rho(n - 1)))
    throw Error(Errc::domain_error, "subgroup parameter nu - 1/2 must satisfy |nu - 1/2| < rho_flat");
  if (calibration <= 0) calibration = res_calibration(n);
  BranchingSum r;
  r.l = l;
  r.below_flat_rho = !(nu > half_sum_rho(n - 1));
  const int al = std::abs(l);
  CompensatedSum sum;
  double last = 0.0, mid = 0.0;
  int m_last = al, m_mid = al;
  const int m_half = al + 2 * ((m_cutoff - al) / 4);
  for (int m = al; m <= m_cutoff; m += 2) {
    const double v = block_norms(n, nu, s, m, l, calibration).sobolev;
    const double t = v * v;
    if (m == al) r.first_term = t;
    if (m <= m_half) {
      mid = t;
      m_mid = m;
    }
    sum.add(t);
    last = t;
    m_last = m;
  }
  r.partial_sum = sum.value();
  if (m_last > m_mid && mid > 0 && last > 0) {
    r.decay_exponent = -std::log(last / mid) / std::log((m_last + 1.0) / (m_mid + 1.0));
    r.tail_bound = r.decay_exponent > 1.0 ? last * (m_last + 1.0) / (2.0 * (r.decay_exponent - 1.0))
                                          : std::numeric_limits<double>::infinity();
  } else {
    r.tail_bound = std::numeric_limits<double>::infinity();
  }
  return r;
}

struct DivergenceVerdict {
  double fitted_exponent = 0.0;  // p with terms ~ m^{-p}
  bool divergent = false;
};

/// Fit p from the growth of partial sums over K, 2K, 4K: (S4-S2)/(S2-S1) = 2^{1-p}.
inline DivergenceVerdict divergence_test(int n, double nu, double s, int l, int k) {
  const double cal = res_calibration(n);
  const double s1 = branching_sum(n, nu, s, l, k, cal).partial_sum;
  const double s2 = branching_sum(n, nu, s, l, 2 * k, cal).partial_sum;
  const double s4 = branching_sum(n, nu, s, l, 4 * k, cal).partial_sum;
  DivergenceVerdict v;
  v.fitted_exponent = 1.0 - std::log2((s4 - s2) / (s2 - s1));
  v.divergent = v.fitted_exponent <= 1.0;
  return v;
}

struct BranchingSweep {
  std::vector<BranchingSum> rows;
  double sup = 0.0, inf = 0.0, ratio = 0.0;
};

inline BranchingSweep branching_sweep(int n, double nu, double s, int l_max, int m_cutoff) {
  if (!(nu > half_sum_rho(n - 1) && nu < half_sum_rho(n)))
    throw Error(Errc::domain_error, "branching needs rho_flat = " + std::to_string(half_sum_rho(n - 1)) +
                                        " < nu < rho = " + std::to_string(half_sum_rho(n)));
  const double cal = res_calibration(n);
  BranchingSweep sw;
  sw.rows.resize(l_max + 1);
  parallel_for(static_cast<std::size_t>(l_max + 1),
               [&](std::size_t l) { sw.rows[l] = branching_sum(n, nu, s, static_cast<int>(l), m_cutoff, cal); });
  sw.sup = 0.0;
  sw.inf = std::numeric_limits<double>::infinity();
  for (auto& r : sw.rows) {
    sw.sup = std::max(sw.sup, r.partial_sum);
    sw.inf = std::min(sw.inf, r.partial_sum);
  }
  sw.ratio = sw.sup / sw.inf;
  return sw;
}

// ---------------------------------------------------------------------------
// restriction operator on the truncated model

/// Matrix of Res in the adapted bases (rows: equator model, cols: ctx model).
inline Mat restriction_matrix(const RepContext& ctx, const SphereModel& equator) {
  const auto& sys = *ctx.model->system;
  Mat e(equator.quad.size(), sys.size());
  Vec x(ctx.n);
  for (int i = 0; i < equator.quad.size(); ++i) {
    x(0) = 0.0;
    x.tail(ctx.n - 1) = equator.quad.nodes.row(i).transpose();
    e.row(i) = sys.eval(x).transpose();
  }
  return equator.basis_at_nodes.transpose() * equator.quad.weights.asDiagonal() * e;
}

inline Vec flat_weights(const RepContext& ctx, const SphereModel& equator) {
  Vec w(equator.size());
  for (int l = 0; l <= equator.m_max; ++l)
    w.segment(equator.system->offset(l), equator.system->dim(l))
        .setConstant(d_coefficient(ctx.n - 1, flat_nu(ctx.nu), l) * sobolev_weight(ctx.n - 1, flat_nu(ctx.nu), ctx.s, l));
  return w;
}

struct OperatorNormReport {
  double sup_block_sum = 0.0;      // sup_l of truncated sums of squared block norms
  double power_estimate = 0.0;     // squared norm of the truncated Res by power iteration
  double rank_one_max_error = 0.0; // block-supported inputs vs block norms
  int random_violations = 0;       // random f with |Res f| > (1+1e-9) |Res| |f|
};

inline OperatorNormReport operator_norm_identity_check(const RepContext& ctx, int random_trials = 100,
                                                       std::uint64_t seed = 1) {
  if (ctx.n < 3) throw Error(Errc::invalid_dimension, "restriction needs n >= 3");
  SphereModel eq(ctx.n - 1, ctx.m_max);
  Mat R = restriction_matrix(ctx, eq);
  Vec wg = ctx.coefficient_weights(true).cwiseSqrt();
  Vec wh = flat_weights(ctx, eq).cwiseSqrt();
  Mat Rw = wh.asDiagonal() * R * wg.cwiseInverse().asDiagonal();
  OperatorNormReport rep;
  // block sums from the same truncated matrix: block (m,l) columns/rows
  const auto& sys = *ctx.model->system;
  const auto& esys = *eq.system;
  std::vector<double> per_l(ctx.m_max + 1, 0.0);
  const double scale = Rw.norm();
  for (int m = 0; m <= ctx.m_max; ++m)
    for (int l = 0; l <= m; ++l) {
      Mat blk = Rw.block(esys.offset(l), sys.offset(m), esys.dim(l), sys.dim(m));
      Eigen::JacobiSVD<Mat> svd(blk);
      const double sv = svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
      per_l[l] += sv * sv;
      // rank one: a right singular vector of the block
      if (sv > 1e-12 * scale) {
        Eigen::JacobiSVD<Mat> full(blk, Eigen::ComputeThinV);
        Vec f = Vec::Zero(sys.size());
        f.segment(sys.offset(m), sys.dim(m)) = full.matrixV().col(0);
        const double ratio = (Rw * f).norm() / f.norm();
        rep.rank_one_max_error = std::max(rep.rank_one_max_error, std::abs(ratio - sv) / sv);
      }
    }
  rep.sup_block_sum = *std::max_element(per_l.begin(), per_l.end());
  // power iteration on Rw^T Rw
  CounterRng rng(seed, 0);
  Vec v(sys.size());
  for (int i = 0; i < v.size(); ++i) v(i) = rng.normal();
  v.normalize();
  double lam = 0.0;
  for (int it = 0; it < 500; ++it) {
    Vec w = Rw.transpose() * (Rw * v);
    const double nl = w.norm();
    if (nl == 0) break;
    const double prev = lam;
    lam = nl;
    v = w / nl;
    if (std::abs(lam - prev) <= 1e-14 * lam) break;
  }
  rep.power_estimate = lam;
  for (int t = 0; t < random_trials; ++t) {
    CounterRng r(seed, static_cast<std::uint64_t>(t) + 1);
    Vec f(sys.size());
    for (int i = 0; i < f.size(); ++i) f(i) = r.normal();
    if ((Rw * f).norm() > (1.0 + 1e-9) * std::sqrt(lam) * f.norm()) ++rep.random_violations;
  }
  return rep;
}

// ---------------------------------------------------------------------------
// invariant distributions of the SO(2,1) model

struct InvariantDistribution {
  double order_s = 0.0;
  Vec coeffs;             // values D(e_c) on the model basis
  double residual = 0.0;  // weighted singular value
  double yn_eigenvalue = 0.0;
};

struct InvariantDistributionReport {
  std::vector<InvariantDistribution> found;
  Vec singular_values;  // ascending
  Mat u_matrix;         // dpi(U) on the model basis
};

/// Near-null vectors of dpi(U)^T weighted by (1+m^2)^{s/2} on the distribution side and
/// (1+m^2)^{-t/2} on the test-function side, with tolerance on the singular value.
/// Spurious edge modes sit near 6e-3 (64/M)^2; the default tolerance is 1e-3 (64/M)^2.
inline double default_invariant_tolerance(int modes) { return 1e-3 * std::pow(64.0 / modes, 2); }

inline InvariantDistributionReport invariant_distributions(const RepContext& ctx, double tolerance = -1.0,
                                                           double s = 2.0, double t = 3.0) {
  if (ctx.n != 2) throw Error(Errc::invalid_dimension, "invariant distributions are computed for n = 2");
  if (!(ctx.nu > 0 && ctx.nu < 0.5)) throw Error(Errc::domain_error, "invariant distributions need 0 < nu < 1/2");
  if (ctx.m_max < 64) throw Error(Errc::invalid_input, "invariant distributions need at least 64 K-types");
  if (tolerance <= 0) tolerance = default_invariant_tolerance(ctx.m_max);
  const auto& sys = *ctx.model->system;
  const int d = sys.size();
  InvariantDistributionReport rep;
  Mat A(d, d), B(d, d);
  const Mat U = liealg::unipotent(2), Y = liealg::geodesic(2);
  const double h = 1e-4;
  std::vector<Vec> cols_u(d), cols_y(d);
  for (int c = 0; c < d; ++c) {
    Vec e = Vec::Zero(d);
    e(c) = 1.0;
    cols_u[c] = lie_derivative(ctx, U, e, h);
    cols_y[c] = lie_derivative(ctx, Y, e, h);
  }
  for (int c = 0; c < d; ++c) {
    A.col(c) = cols_u[c];
    B.col(c) = cols_y[c];
  }
  rep.u_matrix = A;
  Vec wd(d), wt(d);
  for (int m = 0; m <= ctx.m_max; ++m) {
    const double base = 1.0 + double(m) * m;
    wd.segment(sys.offset(m), sys.dim(m)).setConstant(std::pow(base, 0.5 * s));
    wt.segment(sys.offset(m), sys.dim(m)).setConstant(std::pow(base, -0.5 * t));
  }
  // rows: test functions f (weighted), cols: distribution coordinates
  Mat M = wt.asDiagonal() * A.transpose() * wd.asDiagonal();
  Eigen::JacobiSVD<Mat> svd(M, Eigen::ComputeFullV);
  Vec sv = svd.singularValues();
  rep.singular_values = sv.reverse();
  std::vector<Vec> kernel;
  std::vector<double> resid;
  for (int i = d - 1; i >= 0; --i) {
    if (sv(i) > tolerance) break;
    Vec D = wd.asDiagonal() * svd.matrixV().col(i);
    kernel.push_back(D / D.norm());
    resid.push_back(sv(i));
  }
  if (kernel.empty()) return rep;
  // Y_n action on the span: D B = C D over test functions below the truncation edge
  const int k = static_cast<int>(kernel.size());
  const int inner = sys.offset(ctx.m_max);
  Mat E(k, d);
  for (int i = 0; i < k; ++i) E.row(i) = kernel[i].transpose();
  Mat lhs = (E * B * wt.asDiagonal()).leftCols(inner);
  Mat rhs = (E * wt.asDiagonal()).leftCols(inner);
  Mat C = lhs * rhs.completeOrthogonalDecomposition().pseudoInverse();
  Eigen::EigenSolver<Mat> es(C);
  std::vector<std::pair<double, Vec>> eig;
  for (int i = 0; i < k; ++i) {
    Eigen::VectorXcd ev = es.eigenvectors().col(i);
    Vec combo = (ev.real().transpose() * E).transpose();
    if (combo.norm() == 0) combo = (ev.imag().transpose() * E).transpose();
    eig.emplace_back(es.eigenvalues()(i).real(), combo / combo.norm());
  }
  std::sort(eig.begin(), eig.end(), [](auto& a, auto& b) { return a.first < b.first; });
  for (int i = 0; i < k; ++i) {
    InvariantDistribution dist;
    dist.order_s = s;
    dist.coeffs = eig[i].second;
    dist.residual = *std::max_element(resid.begin(), resid.end());
    dist.yn_eigenvalue = eig[i].first;
    rep.found.push_back(dist);
  }
  return rep;
}

}  // namespace lorentz::reps
