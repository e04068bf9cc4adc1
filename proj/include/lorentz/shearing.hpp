#pragma once
// Sublevel-interval solvers, effective gaps, the large-interval proposition, epsilon-blocks
// and group-level shearing experiments for the unipotent flow u^s = exp(sU).
//
// Distances are right-invariant Frobenius: d(a, b) = |a b^{-1} - I|_F. Displacements are
// carried as Lie algebra elements so that Ad(u^s) acts polynomially without cancellation.

#include "lorentz/common.hpp"
#include "lorentz/liealg.hpp"

#include <algorithm>
#include <complex>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <string>

namespace lorentz::shearing {

// ---------------------------------------------------------------------------
// intervals

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double length() const { return hi - lo; }
  bool contains(double t) const { return lo <= t && t <= hi; }
};

struct IntervalFamily {
  std::vector<Interval> intervals;
  bool unbounded = false;  // the last interval extends to +infinity

  bool empty() const { return intervals.empty(); }
  std::size_t size() const { return intervals.size(); }
  double first_end() const {
    return intervals.empty() ? 0.0 : intervals.front().hi;
  }
  bool starts_at_zero() const { return !intervals.empty() && intervals.front().lo == 0.0; }
  double measure() const {
    double m = 0.0;
    for (auto& i : intervals) m += i.length();
    return m;
  }
  bool contains(double t) const {
    for (auto& i : intervals)
      if (i.contains(t)) return true;
    return false;
  }
  bool well_formed() const {
    for (std::size_t k = 0; k < intervals.size(); ++k) {
      if (!(intervals[k].lo <= intervals[k].hi) || intervals[k].lo < 0) return false;
      if (k > 0 && !(intervals[k - 1].hi < intervals[k].lo)) return false;
    }
    return true;
  }
};

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

inline IntervalFamily whole_half_line() {
  IntervalFamily f;
  f.intervals.push_back({0.0, kInfinity});
  f.unbounded = true;
  return f;
}

/// Pairwise intersections of two families, ordered; touching pieces are joined.
inline IntervalFamily intersect(const IntervalFamily& a, const IntervalFamily& b) {
  IntervalFamily out;
  for (auto& x : a.intervals)
    for (auto& y : b.intervals) {
      const double lo = std::max(x.lo, y.lo), hi = std::min(x.hi, y.hi);
      if (lo <= hi) out.intervals.push_back({lo, hi});
    }
  std::sort(out.intervals.begin(), out.intervals.end(), [](auto& p, auto& q) { return p.lo < q.lo; });
  std::vector<Interval> merged;
  for (auto& i : out.intervals) {
    if (!merged.empty() && i.lo <= merged.back().hi)
      merged.back().hi = std::max(merged.back().hi, i.hi);
    else
      merged.push_back(i);
  }
  out.intervals = merged;
  out.unbounded = !out.intervals.empty() && std::isinf(out.intervals.back().hi);
  return out;
}

/// d(I, J) >= min(|I|, |J|)^{1+rho}, inclusive at equality.
inline bool effective_gap(const Interval& i, const Interval& j, double rho) {
  const Interval& first = i.lo <= j.lo ? i : j;
  const Interval& second = i.lo <= j.lo ? j : i;
  if (!(first.hi < second.lo) && !(first.hi == second.lo && (first.length() == 0 || second.length() == 0)))
    throw Error(Errc::invalid_input, "effective_gap needs disjoint intervals");
  const double d = second.lo - first.hi;
  return d >= std::pow(std::min(first.length(), second.length()), 1.0 + rho);
}

// ---------------------------------------------------------------------------
// parameters

/// Recursion xi_{j+1} = xi_j / (1 + rho) from l_{j+1} <= 3 l_j^{1+rho}, xi_1 = 1.
inline double xi_exponent(double rho, int k) { return std::pow(1.0 + rho, 1.0 - k); }

/// Largest gap exponent with (1+2 rho)/xi(2 rho) < 1 + eta and 1 + 2 rho < 2 xi(2 rho)
/// for quadratic sublevel families, shrunk by 10%.
inline double admissible_gap_exponent(double eta) {
  const double a = 0.5 * (std::sqrt(1.0 + eta) - 1.0);
  const double b = 0.5 * (std::sqrt(2.0) - 1.0);
  return 0.9 * std::min(a, b);
}

struct ShearingParams {
  double eta = 0.5;           // Hoelder exponent
  double gap_exponent = 0.1;  // rho of the effective gap
  double theta = 0.0;         // large-interval constant; filled by with_theta()
  double eps = 1e-3;          // closeness scale
  double slack_C = 4.0;       // constant standing in for the implied constants

  void validate() const {
    if (!(eta > 0 && eta < 1)) throw Error(Errc::invalid_input, "eta must lie in (0,1)");
    if (!(gap_exponent > 0 && gap_exponent < 1)) throw Error(Errc::invalid_input, "gap exponent must lie in (0,1)");
    if (!(eps > 0 && eps < 1)) throw Error(Errc::invalid_input, "eps must lie in (0,1)");
    if (!(slack_C > 0)) throw Error(Errc::invalid_input, "slack constant must be positive");
    if (!(theta >= 0 && theta < 1)) throw Error(Errc::invalid_input, "theta must lie in (0,1)");
  }
};

// ---------------------------------------------------------------------------
// large-interval constant

/// Constant of the ratio bound in the large-interval proof: l/(l-1) <= 2, lambda between
/// consecutive powers of 4/3 and the generation offset give (8/3)(4/3)^{3 rho}.
inline double large_interval_proof_constant(double rho) { return (8.0 / 3.0) * std::pow(4.0 / 3.0, 3.0 * rho); }

struct ThetaValue {
  double theta = 0.0;       // certified lower value: truncated product times exp(-tail)
  double truncated = 0.0;   // product of the first `terms` factors
  double log_tail_bound = 0.0;
  int terms = 0;
};

/// prod_{m>=0} (1 + C (3/4)^{m rho})^{-1}; the log of the omitted tail is at most
/// C q^M / (1 - q) with q = (3/4)^rho. tail_terms <= 0 picks M with tail <= 1e-15.
inline ThetaValue large_interval_theta(double rho, double proof_C, int tail_terms = 0) {
  if (!(rho > 0)) throw Error(Errc::invalid_input, "large_interval_theta needs rho > 0");
  if (!(proof_C > 0)) throw Error(Errc::invalid_input, "large_interval_theta needs proof_C > 0");
  const double q = std::pow(0.75, rho);
  int M = tail_terms;
  if (M <= 0) {
    M = 1;
    while (proof_C * std::pow(q, M) / (1.0 - q) > 1e-15) M *= 2;
  }
  CompensatedSum log_sum;
  double qm = 1.0;
  for (int m = 0; m < M; ++m) {
    log_sum.add(std::log1p(proof_C * qm));
    qm *= q;
  }
  ThetaValue t;
  t.terms = M;
  t.log_tail_bound = proof_C * qm / (1.0 - q);
  t.truncated = std::exp(-log_sum.value());
  t.theta = std::exp(-log_sum.value() - t.log_tail_bound);
  return t;
}

inline ShearingParams with_theta(ShearingParams p) {
  p.theta = large_interval_theta(p.gap_exponent, large_interval_proof_constant(p.gap_exponent)).theta;
  return p;
}

// ---------------------------------------------------------------------------
// polynomial helpers

inline double poly_eval(const std::vector<double>& c, double t) {
  double r = 0.0;
  for (std::size_t i = c.size(); i-- > 0;) r = r * t + c[i];
  return r;
}

inline std::vector<double> poly_trim(std::vector<double> c) {
  while (!c.empty() && c.back() == 0.0) c.pop_back();
  return c;
}

/// Real roots in [0, inf) from the companion matrix, polished by Newton.
inline std::vector<double> nonnegative_real_roots(std::vector<double> c) {
  c = poly_trim(c);
  std::vector<double> out;
  if (c.size() <= 1) return out;
  const int k = static_cast<int>(c.size()) - 1;
  std::vector<double> dc(k);
  for (int i = 1; i <= k; ++i) dc[i - 1] = i * c[i];
  Eigen::VectorXcd roots;
  if (k == 1) {
    roots.resize(1);
    roots(0) = -c[0] / c[1];
  } else {
    Mat comp = Mat::Zero(k, k);
    for (int i = 1; i < k; ++i) comp(i, i - 1) = 1.0;
    for (int i = 0; i < k; ++i) comp(i, k - 1) = -c[i] / c[k];
    roots = Eigen::EigenSolver<Mat>(comp).eigenvalues();
  }
  for (int i = 0; i < roots.size(); ++i) {
    const std::complex<double> z = roots(i);
    if (std::abs(z.imag()) > 1e-7 * (1.0 + std::abs(z))) continue;
    double x = z.real();
    for (int it = 0; it < 8; ++it) {
      const double d = poly_eval(dc, x);
      if (d == 0.0) break;
      const double nx = x - poly_eval(c, x) / d;
      if (!std::isfinite(nx)) break;
      x = nx;
    }
    if (x >= 0) out.push_back(x);
  }
  std::sort(out.begin(), out.end());
  return out;
}

namespace detail {

/// Sublevel set {t >= 0 : f(t) <= 0} from sign changes on the sorted grid, with
/// endpoints refined by bisection.
inline IntervalFamily sublevel_from_grid(const std::function<double(double)>& f, std::vector<double> grid,
                                         bool unbounded_tail) {
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  auto refine = [&](double a, double b) {
    // f(a) and f(b) on opposite sides of 0
    const bool a_in = f(a) <= 0;
    for (int it = 0; it < 200; ++it) {
      const double m = 0.5 * (a + b);
      if (m <= a || m >= b) break;
      if ((f(m) <= 0) == a_in)
        a = m;
      else
        b = m;
      if (b - a <= 1e-14 * std::max(1.0, std::abs(a))) break;
    }
    return a_in ? a : b;  // last point inside the set
  };
  IntervalFamily fam;
  bool inside = false;
  double start = 0.0;
  double prev = grid.front();
  bool prev_in = f(prev) <= 0;
  if (prev_in) {
    inside = true;
    start = prev;
  }
  for (std::size_t i = 1; i < grid.size(); ++i) {
    const double t = grid[i];
    const bool in = f(t) <= 0;
    if (in != prev_in) {
      const double e = refine(prev, t);
      if (in) {
        inside = true;
        start = e;
      } else {
        fam.intervals.push_back({start, e});
        inside = false;
      }
    }
    prev = t;
    prev_in = in;
  }
  if (inside) {
    fam.intervals.push_back({start, unbounded_tail ? kInfinity : grid.back()});
    fam.unbounded = unbounded_tail;
  }
  return fam;
}

}  // namespace detail

/// {t >= 0 : |p(t)| <= C max(eps, t^{1-eta})} for p = sum_i coeffs[i] t^i.
/// grid_per_decade controls the bracketing scan; the polynomial's roots, critical points
/// and eps-level crossings are always included.
inline IntervalFamily power_sublevel_intervals(const std::vector<double>& coeffs, double eps, double eta,
                                               double slack_C, int grid_per_decade = 40) {
  if (!(eps > 0)) throw Error(Errc::invalid_input, "eps must be positive");
  if (!(eta > 0 && eta <= 1)) throw Error(Errc::invalid_input, "eta must lie in (0,1]");
  if (!(slack_C > 0)) throw Error(Errc::invalid_input, "slack constant must be positive");
  auto c = poly_trim(coeffs);
  if (c.empty()) return whole_half_line();
  const double ex = 1.0 - eta;
  auto bound = [&](double t) { return slack_C * std::max(eps, ex == 0.0 ? 1.0 : std::pow(t, ex)); };
  auto f = [&](double t) { return std::abs(poly_eval(c, t)) - bound(t); };
  const int k = static_cast<int>(c.size()) - 1;
  if (k == 0) {
    const double v0 = std::abs(c[0]);
    IntervalFamily fam;
    fam.unbounded = true;
    if (v0 <= slack_C * eps)
      fam.intervals.push_back({0.0, kInfinity});
    else if (ex > 0)
      fam.intervals.push_back({std::pow(v0 / slack_C, 1.0 / ex), kInfinity});
    else
      fam.unbounded = false;
    return fam;
  }
  const double vk = std::abs(c[k]);
  double lower_sum = 0.0;
  for (int i = 0; i < k; ++i) lower_sum += std::abs(c[i]);
  double T = std::max({1.0, 2.0 * lower_sum / vk, std::pow(2.0 * slack_C / vk, 1.0 / (k - 1 + eta)),
                       std::pow(2.0 * slack_C * eps / vk, 1.0 / k)});
  T *= 1.01;
  std::vector<double> grid{0.0, T};
  const int decades = 17;
  const int count = decades * grid_per_decade;
  for (int i = 0; i <= count; ++i) grid.push_back(T * std::pow(10.0, -decades + double(i) / grid_per_decade));
  if (ex > 0) grid.push_back(std::pow(eps, 1.0 / ex));
  std::vector<std::vector<double>> polys{c};
  {
    std::vector<double> d(k);
    for (int i = 1; i <= k; ++i) d[i - 1] = i * c[i];
    polys.push_back(d);
    auto up = c, dn = c;
    up[0] -= slack_C * eps;
    dn[0] += slack_C * eps;
    polys.push_back(up);
    polys.push_back(dn);
  }
  for (auto& p : polys)
    for (double r : nonnegative_real_roots(p))
      if (r <= T) {
        grid.push_back(r);
        grid.push_back(r * (1 + 1e-9));
        if (r > 0) grid.push_back(r * (1 - 1e-9));
      }
  return detail::sublevel_from_grid(f, grid, false);
}

// ---------------------------------------------------------------------------
// coefficient certificate

/// Row sums of |M^{-1}| for M_{j,i} = (j/k)^{i-1+eta}, i, j = 1..k, times 2 C. Then
/// |v_i| l1^{i-1+eta} <= result[i-1] whenever [0, l1] lies in the sublevel set and
/// l1 / k >= eps^{1/(1-eta)}.
inline Vec vandermonde_constants(int k, double eta, double slack_C) {
  if (k < 1) throw Error(Errc::invalid_input, "degree must be >= 1");
  Mat m(k, k);
  for (int j = 1; j <= k; ++j)
    for (int i = 1; i <= k; ++i) m(j - 1, i - 1) = std::pow(double(j) / k, i - 1 + eta);
  Mat inv = m.inverse();
  return 2.0 * slack_C * inv.cwiseAbs().rowwise().sum();
}

// ---------------------------------------------------------------------------
// sl2 + V-perp factorization

/// The sl2 triple maps to 2x2 matrices as U -> E21, Y_n -> diag(1/2,-1/2), U_opp -> E12.
struct Factorization {
  Mat sl2_part;   // alpha in span{U, Y_n, U_opp}
  Mat vperp_part; // beta in V-perp
  double a = 1, b = 0, c = 0, d = 1;  // exp(alpha) as a 2x2 matrix
  Vec weight_coords;                  // beta in the weight basis, string by string
  std::vector<int> string_weights;    // highest weight of each string
  double residual = 0.0;
};

namespace detail {
inline Mat bch3(const Mat& x, const Mat& y) {
  Mat xy = liealg::bracket(x, y);
  return x + y + 0.5 * xy + (liealg::bracket(x, xy) - liealg::bracket(y, xy)) / 12.0;
}

struct Splitter {
  liealg::WeightDecomposition wd;
  Mat basis;  // columns: coordinates of U, Y_n, U_opp, then V-perp basis
  Eigen::ColPivHouseholderQR<Mat> qr;
  explicit Splitter(int n) : wd(liealg::sl2_weight_decompose(n)) {
    const int d = liealg::algebra_dim(n);
    basis.resize(d, d);
    basis.col(0) = liealg::coordinates(wd.U);
    basis.col(1) = liealg::coordinates(wd.Yn);
    basis.col(2) = liealg::coordinates(wd.U_opp);
    basis.rightCols(d - 3) = wd.vperp_basis;
    qr.compute(basis);
  }
  Vec split(const Mat& z) const { return qr.solve(liealg::coordinates(z)); }
};

inline const Splitter& splitter(int n) {
  static thread_local std::map<int, std::shared_ptr<Splitter>> cache;
  auto& s = cache[n];
  if (!s) s = std::make_shared<Splitter>(n);
  return *s;
}
}  // namespace detail

/// exp(z) = exp(alpha) exp(beta) with alpha in sl2 and beta in V-perp, for small z.
inline Factorization factor_displacement(const Mat& z) {
  const int n = static_cast<int>(z.rows()) - 1;
  if (z.norm() > 0.5) throw Error(Errc::numeric_failure, "factorization needs a displacement near the identity");
  const auto& sp = detail::splitter(n);
  const int d = liealg::algebra_dim(n);
  auto sl2_of = [&](const Vec& c) {
    return Mat(c(0) * sp.wd.U + c(1) * sp.wd.Yn + c(2) * sp.wd.U_opp);
  };
  auto vp_of = [&](const Vec& c) { return liealg::from_coordinates(n, sp.wd.vperp_basis * c.tail(d - 3)); };
  Vec c0 = sp.split(z);
  Mat alpha = sl2_of(c0), beta = vp_of(c0);
  double res = 0.0;
  for (int it = 0; it < 30; ++it) {
    // log(exp(-alpha) exp(z) exp(-beta)) to third order
    Mat r = detail::bch3(detail::bch3(-alpha, z), -beta);
    if (z.norm() > 1e-3) r = liealg::log_principal(liealg::exp_matrix(-alpha) * liealg::exp_matrix(z) * liealg::exp_matrix(-beta));
    Vec cr = sp.split(r);
    alpha += sl2_of(cr);
    beta += vp_of(cr);
    res = r.norm();
    if (res <= 1e-17 * std::max(z.norm(), 1e-300) || res == 0.0) break;
  }
  Factorization f;
  f.sl2_part = alpha;
  f.vperp_part = beta;
  f.residual = res;
  Vec ca = sp.split(alpha);
  Eigen::Matrix2d m;
  m << 0.5 * ca(1), ca(2), ca(0), -0.5 * ca(1);
  Eigen::Matrix2d h = m.exp();
  f.a = h(0, 0);
  f.b = h(0, 1);
  f.c = h(1, 0);
  f.d = h(1, 1);
  f.weight_coords = sp.wd.strings.empty() ? Vec() : sp.wd.weight_coordinates(beta);
  for (auto& s : sp.wd.strings) f.string_weights.push_back(s.highest_weight);
  return f;
}

// ---------------------------------------------------------------------------
// closeness families

/// {s >= 0 : |-b s^2 + (a-d) s| <= C max(eps, s^{1-eta})}.
inline IntervalFamily so21_closeness_intervals(double a, double b, double c, double d, const ShearingParams& p) {
  if (std::max({std::abs(a - 1), std::abs(d - 1), std::abs(b), std::abs(c)}) >= 0.5)
    throw Error(Errc::domain_error, "SO(2,1) part is far from the identity");
  return power_sublevel_intervals({0.0, a - d, -b}, p.eps, p.eta, p.slack_C);
}

/// {s >= 0 : |Ad(u^s) v| <= C eps}, v given by weight coordinates of each string.
/// Component n of a string is sum_{i<=n} b_i binom(n,i) s^{n-i}.
inline IntervalFamily vperp_closeness_intervals(const std::vector<std::vector<double>>& strings, double eps,
                                                double slack_C) {
  std::vector<double> sq(1, 0.0);
  auto add_square = [&](const std::vector<double>& q) {
    if (sq.size() < 2 * q.size()) sq.resize(2 * q.size(), 0.0);
    for (std::size_t i = 0; i < q.size(); ++i)
      for (std::size_t j = 0; j < q.size(); ++j) sq[i + j] += q[i] * q[j];
  };
  for (auto& b : strings) {
    const int vs = static_cast<int>(b.size()) - 1;
    for (int n = 0; n <= vs; ++n) {
      std::vector<double> q(n + 1, 0.0);  // coefficients in s
      for (int i = 0; i <= n; ++i) {
        double binom = 1.0;
        for (int r = 0; r < i; ++r) binom = binom * (n - r) / (r + 1);
        q[n - i] += b[i] * binom;
      }
      add_square(q);
    }
  }
  sq = poly_trim(sq);
  const double thr = slack_C * eps;
  if (sq.size() <= 1) {
    if (sq.empty() || sq[0] <= thr * thr) return whole_half_line();
    return IntervalFamily{};
  }
  std::vector<double> pc = sq;
  pc[0] -= thr * thr;
  auto f = [&](double s) { return poly_eval(pc, s); };
  auto roots = nonnegative_real_roots(pc);
  std::vector<double> grid{0.0};
  double top = 1.0;
  for (double r : roots) {
    grid.push_back(r);
    grid.push_back(r * (1 + 1e-9) + 1e-300);
    if (r > 0) grid.push_back(r * (1 - 1e-9));
    top = std::max(top, r);
  }
  const bool grows = pc.back() > 0;
  grid.push_back(2.0 * top + 1.0);
  for (int i = 0; i <= 400; ++i) grid.push_back(top * 2.0 * std::pow(10.0, -16.0 + 16.0 * i / 400.0));
  auto fam = detail::sublevel_from_grid(f, grid, !grows);
  return fam;
}

inline IntervalFamily vperp_closeness_intervals(const std::vector<double>& b, double eps, double slack_C) {
  return vperp_closeness_intervals(std::vector<std::vector<double>>{b}, eps, slack_C);
}

struct GClosenessFamily {
  IntervalFamily family;
  IntervalFamily so21;
  IntervalFamily vperp;
  Factorization factors;
};

inline std::vector<std::vector<double>> split_strings(const Factorization& f) {
  std::vector<std::vector<double>> out;
  int c = 0;
  for (int w : f.string_weights) {
    std::vector<double> b(w + 1);
    for (int i = 0; i <= w; ++i) b[i] = f.weight_coords(c++);
    out.push_back(b);
  }
  return out;
}

/// Intersections of the SO(2,1) and V-perp families of g = exp(z) = h exp(v).
inline GClosenessFamily g_closeness_intervals(const Mat& z, const ShearingParams& p) {
  GClosenessFamily g;
  g.factors = factor_displacement(z);
  const auto& f = g.factors;
  g.so21 = so21_closeness_intervals(f.a, f.b, f.c, f.d, p);
  g.vperp = vperp_closeness_intervals(split_strings(f), p.eps, p.slack_C);
  g.family = intersect(g.so21, g.vperp);
  return g;
}

/// Uniform bound on the number of intervals: at most 2 from the quadratic SO(2,1) part
/// and 3 from the quartic V-perp norm, so at most 2 + 3 - 1 after intersecting.
inline int closeness_count_bound() { return 4; }

// ---------------------------------------------------------------------------
// trajectories

/// exp(y) - I without cancellation for small y.
inline Mat exp_minus_identity(const Mat& y) {
  const double nrm = y.norm();
  if (nrm > 0.1) return liealg::exp_matrix(y) - Mat::Identity(y.rows(), y.cols());
  Mat term = y, sum = y;
  for (int k = 2; k < 30; ++k) {
    term = term * y / double(k);
    sum += term;
    if (term.norm() <= 1e-18 * nrm) break;
  }
  return sum;
}

/// u^{t} exp(z) u^{-s} - I, as u^{t-s} exp(Ad(u^s) z) - I.
inline Mat displacement_minus_identity(const Mat& z, double s, double t) {
  const int n = static_cast<int>(z.rows()) - 1;
  Mat e = exp_minus_identity(liealg::ad_u_flow(z, s));
  if (t == s) return e;
  Mat du = (t - s) * liealg::unipotent(n) + 0.5 * (t - s) * (t - s) * liealg::unipotent(n) * liealg::unipotent(n);
  return du * (Mat::Identity(n + 1, n + 1) + e) + e;
}

inline double trajectory_distance(const Mat& z, double s, double t) {
  return displacement_minus_identity(z, s, t).norm();
}

/// log of the displacement at (s, t) as an algebra element.
inline Mat displacement_log(const Mat& z, double s, double t) {
  const int n = static_cast<int>(z.rows()) - 1;
  Mat az = liealg::ad_u_flow(z, s);
  if (t == s) return az;
  return detail::bch3((t - s) * liealg::unipotent(n), az);
}

// ---------------------------------------------------------------------------
// epsilon blocks

struct EpsilonBlock {
  double s_start = 0.0, s_end = 0.0;
  double t_start = 0.0, t_end = 0.0;
  std::size_t first = 0, last = 0;  // sample indices
  Mat displacement;                 // log(u^{t_start} g_y (u^{s_start} g_x)^{-1})
  IntervalFamily family;            // closeness family of the displacement, relative times
  double length() const { return s_end - s_start; }
};

struct HolderCheck {
  bool ok = true;
  std::size_t first = 0, second = 0;
};

/// |(t' - t) - (s' - s)| <= |s' - s|^{1-eta} for sample pairs with max(s'-s, t'-t) >= m.
/// All pairs up to 4096 samples, dyadic strides beyond.
inline HolderCheck holder_check(const std::vector<double>& s, const std::vector<double>& t, double eta, double m) {
  HolderCheck h;
  const std::size_t N = s.size();
  auto test = [&](std::size_t i, std::size_t j) {
    const double ds = s[j] - s[i], dt = t[j] - t[i];
    if (std::max(ds, dt) < m) return true;
    return std::abs(dt - ds) <= std::pow(ds, 1.0 - eta) * (1 + 1e-12);
  };
  if (N <= 4096) {
    for (std::size_t i = 0; i < N; ++i)
      for (std::size_t j = i + 1; j < N; ++j)
        if (!test(i, j)) return {false, i, j};
  } else {
    for (std::size_t stride = 1; stride < N; stride *= 2)
      for (std::size_t i = 0; i + stride < N; ++i)
        if (!test(i, i + stride)) return {false, i, i + stride};
  }
  return h;
}

/// beta_0: maximal runs of consecutive close samples, each capped by the first interval
/// of the closeness family of the displacement at the run start. Hoelder pairs are only
/// enforced beyond separation holder_m.
inline std::vector<EpsilonBlock> build_blocks(const Mat& z, const std::vector<double>& s, const std::vector<double>& t,
                                              const ShearingParams& p, double holder_m = 1.0) {
  if (s.size() != t.size() || s.empty()) throw Error(Errc::invalid_input, "sample and time arrays must match");
  for (std::size_t i = 1; i < s.size(); ++i)
    if (!(s[i] > s[i - 1]) || !(t[i] >= t[i - 1])) throw Error(Errc::invalid_input, "times must increase");
  if (trajectory_distance(z, s[0], t[0]) >= p.eps)
    throw Error(Errc::invalid_input, "initial points are not eps-close");
  auto hc = holder_check(s, t, p.eta, holder_m);
  if (!hc.ok)
    throw Error(Errc::invalid_input, "Hoelder condition fails between samples " + std::to_string(hc.first) + " and " +
                                         std::to_string(hc.second));
  const std::size_t N = s.size();
  std::vector<char> close(N);
  for (std::size_t i = 0; i < N; ++i) close[i] = trajectory_distance(z, s[i], t[i]) < p.eps;
  std::vector<EpsilonBlock> out;
  std::size_t i = 0;
  while (i < N) {
    if (!close[i]) {
      ++i;
      continue;
    }
    EpsilonBlock b;
    b.first = i;
    b.s_start = s[i];
    b.t_start = t[i];
    b.displacement = displacement_log(z, s[i], t[i]);
    b.family = b.displacement.norm() == 0.0 ? whole_half_line() : g_closeness_intervals(b.displacement, p).family;
    const double cap = b.family.starts_at_zero() ? s[i] + b.family.first_end() : s[i];
    std::size_t j = i;
    while (j + 1 < N && close[j + 1] && s[j + 1] <= cap) ++j;
    b.last = j;
    b.s_end = s[j];
    b.t_end = t[j];
    out.push_back(b);
    i = j + 1;
  }
  return out;
}

struct MergeStep {
  std::size_t block = 0;      // index of the growing block in the output
  int interval = 0;           // closeness interval consulted (2, 3, ...)
  bool merged = false;        // false: effective gap, stop
  std::size_t absorbed_to = 0;
};

/// beta_rho: starting from each block, absorb later blocks ending in the next interval of
/// its closeness family unless that interval is separated from the previous one by an
/// effective gap with exponent 2 rho. Group level, so every pair is non-shifting.
inline std::vector<EpsilonBlock> merge_blocks(const std::vector<EpsilonBlock>& blocks, const ShearingParams& p,
                                              std::vector<MergeStep>* transcript = nullptr) {
  std::vector<EpsilonBlock> out;
  std::size_t i = 0;
  while (i < blocks.size()) {
    EpsilonBlock cur = blocks[i];
    std::size_t last = i;
    const auto& fam = blocks[i].family.intervals;
    for (std::size_t k = 1; k < fam.size(); ++k) {
      std::size_t jmax = last;
      for (std::size_t j = last + 1; j < blocks.size(); ++j) {
        const double rel = blocks[j].s_end - cur.s_start;
        if (fam[k].contains(rel)) jmax = j;
      }
      if (jmax == last) break;
      const double gap = fam[k].lo - fam[k - 1].hi;
      const bool effective = gap > std::pow(fam[k - 1].hi, 1.0 + 2.0 * p.gap_exponent);
      if (transcript) transcript->push_back({out.size(), static_cast<int>(k + 1), !effective, jmax});
      if (effective) break;
      last = jmax;
      cur.s_end = blocks[jmax].s_end;
      cur.t_end = blocks[jmax].t_end;
      cur.last = blocks[jmax].last;
    }
    out.push_back(cur);
    i = last + 1;
  }
  return out;
}

// ---------------------------------------------------------------------------
// large-interval search

struct Partition {
  std::vector<Interval> good, bad;
};

struct SearchResult {
  std::optional<Interval> large;  // good interval longer than 3/4 lambda
  bool gaps_ok = true;            // hypothesis (1)
  bool good_short = true;         // hypothesis (2)
  bool bad_long = true;           // hypothesis (3)
  double bad_measure = 0.0;
  double theta_lambda = 0.0;
  bool counterexample = false;    // (1)-(3) hold and bad measure < theta lambda
  std::string violation;
};

inline void validate_partition(const Partition& part, double lambda) {
  std::vector<Interval> all = part.good;
  all.insert(all.end(), part.bad.begin(), part.bad.end());
  std::sort(all.begin(), all.end(), [](auto& a, auto& b) { return a.lo < b.lo; });
  if (all.empty() || std::abs(all.front().lo) > 1e-9 * lambda || std::abs(all.back().hi - lambda) > 1e-9 * lambda)
    throw Error(Errc::invalid_input, "partition must cover [0, lambda]");
  for (std::size_t k = 0; k < all.size(); ++k) {
    if (!(all[k].hi >= all[k].lo)) throw Error(Errc::invalid_input, "malformed interval");
    if (k > 0 && std::abs(all[k].lo - all[k - 1].hi) > 1e-9 * lambda)
      throw Error(Errc::invalid_input, "partition intervals must tile [0, lambda]");
  }
}

inline SearchResult large_interval_search(const Partition& part, double lambda, double rho, double theta) {
  if (!(lambda > 1)) throw Error(Errc::invalid_input, "lambda must exceed 1");
  validate_partition(part, lambda);
  SearchResult r;
  r.theta_lambda = theta * lambda;
  for (auto& b : part.bad) {
    r.bad_measure += b.length();
    if (b.length() < 1.0) r.bad_long = false;
  }
  auto good = part.good;
  std::sort(good.begin(), good.end(), [](auto& a, auto& b) { return a.lo < b.lo; });
  for (std::size_t i = 0; i < good.size(); ++i) {
    if (good[i].length() > 0.75 * lambda) {
      r.good_short = false;
      if (!r.large || good[i].length() > r.large->length()) r.large = good[i];
    }
    for (std::size_t j = i + 1; j < good.size(); ++j)
      if (good[j].lo - good[i].hi < std::pow(std::min(good[i].length(), good[j].length()), 1.0 + rho))
        r.gaps_ok = false;
  }
  if (!r.gaps_ok) r.violation = "good intervals without effective gap";
  else if (!r.bad_long) r.violation = "bad interval shorter than 1";
  else if (!r.good_short) r.violation = "good interval longer than 3/4 lambda";
  if (r.bad_measure < r.theta_lambda && r.gaps_ok && r.bad_long && r.good_short) r.counterexample = true;
  return r;
}

/// Random partition of [0, lambda] satisfying (1) and (3); hypothesis (2) is left to chance.
/// With probability p_whole the whole interval is a single good interval.
inline Partition random_partition(double lambda, double rho, CounterRng& rng, double p_whole = 0.1) {
  Partition part;
  if (rng.uniform() < p_whole) {
    part.good.push_back({0.0, lambda});
    return part;
  }
  double pos = 0.0;
  bool start_good = rng.uniform() < 0.5;
  if (!start_good) {
    const double b = lambda < 2.0 ? lambda : std::min(lambda - 1.0, 1.0 + rng.uniform() * 0.1 * lambda);
    part.bad.push_back({0.0, b});
    pos = b;
  }
  while (pos < lambda) {
    double len = std::min(lambda - pos, std::pow(10.0, rng.uniform(-1.0, std::log10(0.8 * lambda))));
    if (lambda - (pos + len) < 1.0) len = lambda - pos;
    const bool last = len == lambda - pos;
    part.good.push_back({pos, last ? lambda : pos + len});
    pos = last ? lambda : pos + len;
    if (last) break;
    double gap = 1.0;
    for (auto& g : part.good) {
      // the next good interval has unknown length; require the gap against g's length
      gap = std::max(gap, std::pow(g.length(), 1.0 + rho) - (pos - g.hi));
    }
    gap = gap * (1.0 + 1e-12) + 1e-9 + rng.uniform() * rng.uniform() * 0.2 * lambda;
    if (pos + gap >= lambda || lambda - (pos + gap) < 1e-6 * lambda) {
      part.bad.push_back({pos, lambda});
      pos = lambda;
      break;
    }
    part.bad.push_back({pos, pos + gap});
    pos += gap;
  }
  return part;
}

/// Worst-case arrangement from the proof: generation n inserts good intervals of length
/// (3/4)^{n+1} lambda into every bad segment, separated by exactly the minimal gaps.
inline Partition cantor_partition(double lambda, double rho) {
  std::vector<std::pair<Interval, bool>> pieces{{{0.0, lambda}, false}};
  for (int gen = 0;; ++gen) {
    const double L = std::pow(0.75, gen + 1) * lambda;
    if (L < 1.0) break;
    const double g = std::max(1.0, std::pow(L, 1.0 + rho)) * (1.0 + 1e-12) + 1e-9;  // rounding margin
    std::vector<std::pair<Interval, bool>> next;
    for (auto& [iv, is_good] : pieces) {
      if (is_good || iv.length() < 2 * g + L) {
        next.push_back({iv, is_good});
        continue;
      }
      const int k = static_cast<int>(std::floor((iv.length() - g) / (L + g)));
      double x = iv.lo;
      for (int q = 0; q < k; ++q) {
        next.push_back({{x, x + g}, false});
        next.push_back({{x + g, x + g + L}, true});
        x += g + L;
      }
      next.push_back({{x, iv.hi}, false});
    }
    pieces = next;
  }
  Partition part;
  for (auto& [iv, is_good] : pieces) (is_good ? part.good : part.bad).push_back(iv);
  return part;
}

// ---------------------------------------------------------------------------
// shearing experiment

enum class Direction { b, a_minus_d, c, v0, v1, v2 };

inline Direction parse_direction(const std::string& s) {
  if (s == "b") return Direction::b;
  if (s == "a-d" || s == "a_minus_d") return Direction::a_minus_d;
  if (s == "c" || s == "flow") return Direction::c;
  if (s == "v0") return Direction::v0;
  if (s == "v1") return Direction::v1;
  if (s == "v2") return Direction::v2;
  throw Error(Errc::invalid_input, "unknown displacement direction '" + s + "' (b, a-d, c, v0, v1, v2)");
}

inline std::string direction_name(Direction d) {
  switch (d) {
    case Direction::b: return "b";
    case Direction::a_minus_d: return "a-d";
    case Direction::c: return "c";
    case Direction::v0: return "v0";
    case Direction::v1: return "v1";
    case Direction::v2: return "v2";
  }
  return "?";
}

/// Unit algebra element of the direction: b -> U_opp, a-d -> Y_n, c -> U, v_i -> i-th
/// vector of the first weight-2 string, normalized in Frobenius norm.
inline Mat direction_element(int n, Direction d) {
  const auto& wd = detail::splitter(n).wd;
  Mat x;
  switch (d) {
    case Direction::b: x = wd.U_opp; break;
    case Direction::a_minus_d: x = wd.Yn; break;
    case Direction::c: x = wd.U; break;
    default: {
      const int i = d == Direction::v0 ? 0 : (d == Direction::v1 ? 1 : 2);
      for (auto& s : wd.strings)
        if (s.highest_weight == 2) {
          x = s.vectors[i];
          break;
        }
      if (x.size() == 0) throw Error(Errc::invalid_dimension, "no weight-2 string in V-perp");
    }
  }
  return x / x.norm();
}

struct ShearingRow {
  double lambda = 0.0;
  double delta = 0.0;      // displacement magnitude admitting a 3/4 lambda block
  bool capped = false;     // delta hit the given magnitude
  double s_lambda = 0.0;
  double block_length = 0.0;
  std::vector<double> entries;  // magnitudes, aligned with ShearingReport::entry_names
};

struct EntryFit {
  std::string name;
  double fitted = 0.0;
  double predicted = 0.0;
  bool fitted_ok = false;  // enough nonzero points
  bool pass = true;
};

struct ShearingReport {
  int n = 0;
  Direction direction = Direction::b;
  double magnitude = 0.0;
  ShearingParams params;
  std::vector<std::string> entry_names;
  std::vector<ShearingRow> rows;
  std::vector<EntryFit> fits;
  bool pass = true;
};

/// For each lambda, the largest delta <= magnitude for which exp(delta D) admits an
/// eps-block of length >= 3/4 lambda inside [0, lambda] (trivial time map), then the
/// factored displacement entries at the block start regressed against lambda.
/// eps <= 0 in params calibrates eps so that the given magnitude is critical at the
/// smallest lambda.
inline ShearingReport shearing_experiment(int n, Direction dir, double magnitude, const std::vector<double>& lambdas,
                                          ShearingParams params, int samples = 1024) {
  liealg::require_dimension(n, 3);
  if (!(magnitude > 0 && magnitude < 1e-2)) throw Error(Errc::invalid_input, "magnitude must lie in (0, 1e-2)");
  if (lambdas.size() < 2) throw Error(Errc::invalid_input, "need at least two lambda values");
  for (double l : lambdas)
    if (!(l > 1)) throw Error(Errc::invalid_input, "lambda values must exceed 1");
  const Mat D = direction_element(n, dir);
  const double lmin = *std::min_element(lambdas.begin(), lambdas.end());
  auto grid = [&](double lambda) {
    std::vector<double> s(samples);
    for (int i = 0; i < samples; ++i) s[i] = lambda * i / (samples - 1.0);
    return s;
  };
  if (params.eps <= 0) {
    double worst = 0.0;
    for (double s : grid(lmin))
      if (s <= 0.75 * lmin + 1e-12) worst = std::max(worst, trajectory_distance(magnitude * D, s, s));
    if (worst > 0) worst = std::max(worst, trajectory_distance(magnitude * D, lmin, lmin) * 0.0);
    params.eps = worst > 0 ? worst * (1.0 + 1e-6) : magnitude;
    if (params.eps >= 0.5) throw Error(Errc::invalid_input, "magnitude too large for the smallest lambda");
  }
  if (params.theta == 0.0) params = with_theta(params);
  params.validate();

  ShearingReport rep;
  rep.n = n;
  rep.direction = dir;
  rep.magnitude = magnitude;
  rep.params = params;
  const auto& sp = detail::splitter(n);
  rep.entry_names = {"b", "a-d", "a-1", "d-1", "c"};
  std::vector<double> predicted = {-1.0 - 2 * params.gap_exponent, -2 * params.gap_exponent,
                                   -2 * params.gap_exponent, -2 * params.gap_exponent, 0.0};
  for (std::size_t q = 0; q < sp.wd.strings.size(); ++q) {
    const int w = sp.wd.strings[q].highest_weight;
    for (int i = 0; i <= w; ++i) {
      rep.entry_names.push_back("s" + std::to_string(q) + "_b" + std::to_string(i));
      predicted.push_back(i < w ? -(1.0 + 2 * params.gap_exponent) * (w - i) / 2.0 : 0.0);
    }
  }
  rep.rows.resize(lambdas.size());
  parallel_for(lambdas.size(), [&](std::size_t li) {
    const double lambda = lambdas[li];
    const auto s = grid(lambda);
    auto has_block = [&](double delta, EpsilonBlock* found) {
      const Mat z = delta * D;
      if (trajectory_distance(z, 0.0, 0.0) >= params.eps) return false;
      auto blocks = merge_blocks(build_blocks(z, s, s, params), params);
      for (auto& b : blocks)
        if (b.length() >= 0.75 * lambda) {
          if (found) *found = b;
          return true;
        }
      return false;
    };
    ShearingRow row;
    row.lambda = lambda;
    EpsilonBlock blk;
    if (has_block(magnitude, &blk)) {
      row.delta = magnitude;
      row.capped = true;
    } else {
      double lo = std::log(magnitude) - 60.0, hi = std::log(magnitude);
      if (!has_block(std::exp(lo), nullptr)) throw Error(Errc::numeric_failure, "no large block even for tiny displacements");
      for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (has_block(std::exp(mid), nullptr))
          lo = mid;
        else
          hi = mid;
      }
      row.delta = std::exp(lo);
      has_block(row.delta, &blk);
    }
    row.s_lambda = blk.s_start;
    row.block_length = blk.length();
    const Mat z = displacement_log(row.delta * D, blk.s_start, blk.t_start);
    auto f = factor_displacement(z);
    row.entries = {std::abs(f.b), std::abs(f.a - f.d), std::abs(f.a - 1), std::abs(f.d - 1), std::abs(f.c)};
    for (int i = 0; i < f.weight_coords.size(); ++i) row.entries.push_back(std::abs(f.weight_coords(i)));
    rep.rows[li] = row;
  });
  for (std::size_t e = 0; e < rep.entry_names.size(); ++e) {
    EntryFit fit;
    fit.name = rep.entry_names[e];
    fit.predicted = predicted[e];
    std::vector<double> x, y;
    double peak = 0.0;
    for (auto& r : rep.rows) peak = std::max(peak, r.entries[e]);
    for (auto& r : rep.rows)
      if (r.entries[e] > 1e-9 * r.delta && r.entries[e] > 0) {
        x.push_back(std::log(r.lambda));
        y.push_back(std::log(r.entries[e]));
      }
    if (x.size() >= 2) {
      fit.fitted = linear_fit(x, y).slope;
      fit.fitted_ok = true;
      fit.pass = fit.fitted <= fit.predicted + 0.1;
    }
    rep.pass = rep.pass && fit.pass;
    rep.fits.push_back(fit);
  }
  return rep;
}

}  // namespace lorentz::shearing
