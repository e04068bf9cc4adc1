#pragma once
// Time-change algebra over measured flows: cocycle xi(x, t) = int_0^t tau(phi_s x) ds, its
// inverse z, the reparametrized flow, transfer-function conjugacies, correlation decay fits,
// ergodic averages and a Gottschalk-Hedlund style boundedness test.

#include "lorentz/common.hpp"
#include "lorentz/expression.hpp"
#include "lorentz/harmonics.hpp"
#include "lorentz/liealg.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/minima.hpp>

#include <limits>
#include <memory>
#include <string>

namespace lorentz::timechange {

using Observable = expr::Expression;
using ScalarField = std::function<double(const Vec&)>;

// ---------------------------------------------------------------------------
// flows

class FlowSystem {
 public:
  virtual ~FlowSystem() = default;
  virtual std::string name() const = 0;
  virtual int dim() const = 0;
  virtual Vec evolve(const Vec& x, double t) const = 0;
  /// Generator of the flow at x (d/dt evolve(x, t) at t = 0).
  virtual Vec velocity(const Vec& x) const = 0;
  virtual double distance(const Vec& a, const Vec& b) const { return (a - b).norm(); }
  virtual bool has_measure() const { return true; }
  virtual Vec sample(CounterRng& rng) const = 0;
  /// Integral against the invariant probability measure at the given resolution.
  virtual double integrate(const ScalarField& f, int resolution) const = 0;
  /// Default resolution for integrals of smooth observables.
  virtual int default_resolution() const { return 64; }
};

namespace detail {
inline double wrap01(double v) {
  double r = v - std::floor(v);
  return r >= 1.0 ? 0.0 : r;
}
inline double torus_gap(double a, double b) {
  double d = std::abs(a - b);
  d -= std::floor(d);
  return std::min(d, 1.0 - d);
}
}  // namespace detail

/// Linear flow x -> x + t alpha on the d-torus [0,1)^d with Lebesgue measure.
class TorusFlow : public FlowSystem {
 public:
  explicit TorusFlow(Vec alpha) : alpha_(std::move(alpha)) {
    if (alpha_.size() < 1) throw Error(Errc::invalid_input, "torus flow needs a direction");
  }
  std::string name() const override { return "torus"; }
  int dim() const override { return static_cast<int>(alpha_.size()); }
  const Vec& direction() const { return alpha_; }
  Vec evolve(const Vec& x, double t) const override {
    Vec y(x.size());
    for (int i = 0; i < x.size(); ++i) y(i) = detail::wrap01(x(i) + t * alpha_(i));
    return y;
  }
  Vec velocity(const Vec&) const override { return alpha_; }
  double distance(const Vec& a, const Vec& b) const override {
    double s = 0;
    for (int i = 0; i < a.size(); ++i) s += std::pow(detail::torus_gap(a(i), b(i)), 2);
    return std::sqrt(s);
  }
  Vec sample(CounterRng& rng) const override {
    Vec x(dim());
    for (int i = 0; i < dim(); ++i) x(i) = rng.uniform();
    return x;
  }
  /// Midpoint rule with `resolution` nodes per axis; exact for trigonometric polynomials
  /// of degree below the resolution.
  double integrate(const ScalarField& f, int resolution) const override {
    const int d = dim();
    std::size_t total = 1;
    for (int i = 0; i < d; ++i) total *= static_cast<std::size_t>(resolution);
    CompensatedSum s;
    Vec x(d);
    for (std::size_t k = 0; k < total; ++k) {
      std::size_t r = k;
      for (int i = 0; i < d; ++i) {
        x(i) = (static_cast<double>(r % resolution) + 0.5) / resolution;
        r /= resolution;
      }
      s.add(f(x));
    }
    return s.value() / static_cast<double>(total);
  }

 private:
  Vec alpha_;
};

/// Shear flow (x, y) -> (x + t y, y) on the 2-torus; correlations of cos(2 pi x) w(y)
/// decay like the Fourier transform of w^2.
class ShearFlow : public FlowSystem {
 public:
  explicit ShearFlow(int x_nodes = 16) : x_nodes_(x_nodes) {}
  std::string name() const override { return "shear"; }
  int dim() const override { return 2; }
  Vec evolve(const Vec& x, double t) const override {
    Vec y(2);
    y << detail::wrap01(x(0) + t * x(1)), x(1);
    return y;
  }
  Vec velocity(const Vec& x) const override {
    Vec v(2);
    v << x(1), 0.0;
    return v;
  }
  double distance(const Vec& a, const Vec& b) const override {
    return std::hypot(detail::torus_gap(a(0), b(0)), detail::torus_gap(a(1), b(1)));
  }
  Vec sample(CounterRng& rng) const override {
    Vec x(2);
    x << rng.uniform(), rng.uniform();
    return x;
  }
  /// Midpoint in x (x_nodes points), Gauss-Legendre in y (`resolution` points).
  double integrate(const ScalarField& f, int resolution) const override {
    auto [t, w] = harmonics::gauss_gegenbauer(0.5, resolution);
    const double wsum = w.sum();
    CompensatedSum s;
    Vec p(2);
    for (int j = 0; j < t.size(); ++j) {
      p(1) = 0.5 * (t(j) + 1.0);
      CompensatedSum row;
      for (int i = 0; i < x_nodes_; ++i) {
        p(0) = (i + 0.5) / x_nodes_;
        row.add(f(p));
      }
      s.add(w(j) / wsum * row.value() / x_nodes_);
    }
    return s.value();
  }
  int default_resolution() const override { return 400; }

 private:
  int x_nodes_;
};

/// Left multiplication by u^t on SO(n,1); states are matrices flattened column-major.
/// No invariant probability measure is available.
class GroupFlow : public FlowSystem {
 public:
  explicit GroupFlow(int n) : n_(n) { liealg::require_dimension(n, 2); }
  std::string name() const override { return "group"; }
  int dim() const override { return (n_ + 1) * (n_ + 1); }
  int n() const { return n_; }
  Vec evolve(const Vec& x, double t) const override {
    Mat g = Eigen::Map<const Mat>(x.data(), n_ + 1, n_ + 1);
    Mat y = liealg::u_flow(n_, t) * g;
    return Eigen::Map<Vec>(y.data(), y.size());
  }
  Vec velocity(const Vec& x) const override {
    Mat g = Eigen::Map<const Mat>(x.data(), n_ + 1, n_ + 1);
    Mat y = liealg::unipotent(n_) * g;
    return Eigen::Map<Vec>(y.data(), y.size());
  }
  bool has_measure() const override { return false; }
  Vec sample(CounterRng& rng) const override {
    Mat g = liealg::exp_matrix(liealg::random_algebra_element(n_, rng, 1.0));
    return Eigen::Map<Vec>(g.data(), g.size());
  }
  double integrate(const ScalarField&, int) const override {
    throw Error(Errc::invalid_input, "group trajectories carry no invariant probability measure");
  }

 private:
  int n_;
};

// ---------------------------------------------------------------------------
// time changes

struct TimeChange {
  Observable tau;
  double scale = 1.0;  // tau is evaluated as scale * expression
  double inf = 0.0, sup = 0.0;
  double raw_mean = 1.0;
  bool normalized = true;
  double alpha_decay_D = 0.0, alpha_decay_sigma = 0.0;  // filled by correlation fits when known

  double operator()(const Vec& x) const { return scale * tau(x); }
  double derivative(const Vec& x, const Vec& v) const { return scale * tau.directional_derivative(x, v); }
};

namespace detail {
inline std::pair<double, double> sampled_bounds(const std::function<double(const Vec&)>& f, const FlowSystem& flow,
                                                int count = 4096) {
  CounterRng rng(0x7a0, 0);
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (int i = 0; i < count; ++i) {
    const double v = f(flow.sample(rng));
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return {lo, hi};
}
}  // namespace detail

/// tau rescaled to mean 1 under the flow's invariant measure; bounds from 4096 samples,
/// padded by 10% as a safety margin for brackets.
inline TimeChange make_time_change(const Observable& tau, const FlowSystem& flow, bool normalize = true) {
  TimeChange tc;
  tc.tau = tau;
  tc.normalized = normalize;
  if (flow.has_measure()) {
    tc.raw_mean = flow.integrate([&](const Vec& x) { return tau(x); }, flow.default_resolution());
    if (!(tc.raw_mean > 0)) throw Error(Errc::domain_error, "time change must have positive mean");
    if (normalize && std::abs(tc.raw_mean - 1.0) > 1e-13) tc.scale = 1.0 / tc.raw_mean;
  } else if (normalize) {
    throw Error(Errc::invalid_input, "mean-1 normalization needs an invariant measure");
  }
  auto [lo, hi] = detail::sampled_bounds([&](const Vec& x) { return tc(x); }, flow);
  if (!(lo > 0)) throw Error(Errc::domain_error, "time change must be positive (sampled minimum " + std::to_string(lo) + ")");
  tc.inf = lo / 1.1;
  tc.sup = hi * 1.1;
  return tc;
}

// ---------------------------------------------------------------------------
// cocycle and inverse

namespace detail {
/// int_a^b g(s) ds in pieces of length <= 1/2 with adaptive 31-point Gauss-Kronrod; pieces
/// shorter than 1e-2 use the fixed rule, which is exact there to rounding.
inline double chunked_integral(const std::function<double(double)>& g, double a, double b) {
  if (a == b) return 0.0;
  const double sign = b > a ? 1.0 : -1.0;
  if (b < a) std::swap(a, b);
  const int pieces = std::max(1, static_cast<int>(std::ceil(2.0 * (b - a))));
  const double h = (b - a) / pieces;
  CompensatedSum s;
  for (int k = 0; k < pieces; ++k) {
    const double lo = a + k * h, hi = (k + 1 == pieces) ? b : a + (k + 1) * h;
    double err = 0.0;
    s.add(boost::math::quadrature::gauss_kronrod<double, 31>::integrate(g, lo, hi, hi - lo < 1e-2 ? 0 : 10, 1e-11, &err));
  }
  return sign * s.value();
}
}  // namespace detail

/// Density along the orbit as a function of flow time.
using OrbitDensity = std::function<double(const Vec&)>;

struct Reparametrization {
  OrbitDensity tau;
  double inf = 0.0, sup = 0.0;
};

inline Reparametrization reparametrization(const TimeChange& tc) { return {[tc](const Vec& x) { return tc(x); }, tc.inf, tc.sup}; }

inline double cocycle_xi(const Reparametrization& r, const FlowSystem& flow, const Vec& x, double t) {
  if (!std::isfinite(t)) throw Error(Errc::invalid_input, "cocycle time must be finite");
  return detail::chunked_integral([&](double s) { return r.tau(flow.evolve(x, s)); }, 0.0, t);
}

/// z with xi(x, z) = t by safeguarded Newton iteration (derivative tau), integrating only
/// the increment from the last evaluated point.
inline double inverse_z(const Reparametrization& r, const FlowSystem& flow, const Vec& x, double t) {
  if (!std::isfinite(t)) throw Error(Errc::invalid_input, "time must be finite");
  if (t == 0.0) return 0.0;
  if (!(r.inf > 0)) throw Error(Errc::domain_error, "time change must be bounded below");
  double lo = t / r.sup, hi = t / r.inf;
  if (lo > hi) std::swap(lo, hi);
  lo -= 0.5 * std::abs(lo) + 1.0;
  hi += 0.5 * std::abs(hi) + 1.0;
  auto density = [&](double s) { return r.tau(flow.evolve(x, s)); };
  double zc = 0.0, xc = 0.0;  // cached point on the cocycle
  auto f = [&](double z) {
    xc += detail::chunked_integral(density, zc, z);
    zc = z;
    return std::make_pair(xc - t, density(z));
  };
  double z = std::clamp(t, lo, hi);
  for (int it = 0; it < 100; ++it) {
    const auto [F, dF] = f(z);
    if (std::abs(F) <= 1e-12 * std::max(1.0, std::abs(t))) return z;
    (F < 0 ? lo : hi) = z;
    // mean slope so far while far away, local slope near the root
    const double slope = std::abs(F) > 0.1 * dF || z == 0.0 ? xc / z : dF;
    double next = z - F / slope;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    z = next;
  }
  throw Error(Errc::numeric_failure, "inverse time iteration did not converge");
}

inline double cocycle_xi(const TimeChange& tc, const FlowSystem& flow, const Vec& x, double t) {
  return cocycle_xi(reparametrization(tc), flow, x, t);
}
inline double inverse_z(const TimeChange& tc, const FlowSystem& flow, const Vec& x, double t) {
  return inverse_z(reparametrization(tc), flow, x, t);
}

/// phi^tau_t(x) = evolve(x, z(x, t)).
inline Vec time_changed_evolve(const Reparametrization& r, const FlowSystem& flow, const Vec& x, double t) {
  return flow.evolve(x, inverse_z(r, flow, x, t));
}
inline Vec time_changed_evolve(const TimeChange& tc, const FlowSystem& flow, const Vec& x, double t) {
  return time_changed_evolve(reparametrization(tc), flow, x, t);
}

/// Distance from y to the orbit segment {evolve(x, s) : s in [lo, hi]}, minimized by
/// Brent's method after a coarse scan.
inline double orbit_projection_distance(const FlowSystem& flow, const Vec& x, const Vec& y, double lo, double hi) {
  auto d = [&](double s) { return flow.distance(flow.evolve(x, s), y); };
  const int scan = 400;
  double best = lo, best_d = d(lo);
  for (int i = 1; i <= scan; ++i) {
    const double s = lo + (hi - lo) * i / scan;
    const double v = d(s);
    if (v < best_d) {
      best_d = v;
      best = s;
    }
  }
  const double h = (hi - lo) / scan;
  auto r = boost::math::tools::brent_find_minima(d, std::max(lo, best - h), std::min(hi, best + h), 52);
  return std::min(best_d, r.second);
}

// ---------------------------------------------------------------------------
// conjugacies

/// Synthetic cohomologous partner tau_2 = tau_1 - U f.
inline Reparametrization cohomologous_partner(const TimeChange& tc1, const Observable& f, const FlowSystem& flow) {
  Reparametrization r;
  r.tau = [tc1, f, &flow](const Vec& x) { return tc1(x) - f.directional_derivative(x, flow.velocity(x)); };
  auto [lo, hi] = detail::sampled_bounds(r.tau, flow);
  if (!(lo > 0)) throw Error(Errc::domain_error, "invalid synthetic pair: tau_1 - U f is not positive");
  r.inf = lo / 1.1;
  r.sup = hi * 1.1;
  return r;
}

struct ConjugacyDefect {
  double spatial = 0.0;  // distance between psi(phi^1_t x) and phi^2_t(psi x)
  double time = 0.0;     // signed difference of the two flow times reaching them from x
};

/// psi_f(x) = phi^{tau_2}_{f(x)}(x); compares psi(phi^{tau_1}_t x) with phi^{tau_2}_t(psi x).
inline ConjugacyDefect transfer_conjugacy(const Reparametrization& r1, const Reparametrization& r2, const ScalarField& f,
                                          const FlowSystem& flow, const Vec& x, double t) {
  const double z1 = inverse_z(r1, flow, x, t);
  const Vec y = flow.evolve(x, z1);
  const double lhs_time = z1 + inverse_z(r2, flow, y, f(y));
  const double rhs_time = inverse_z(r2, flow, x, f(x) + t);
  ConjugacyDefect d;
  d.spatial = flow.distance(flow.evolve(x, lhs_time), flow.evolve(x, rhs_time));
  d.time = lhs_time - rhs_time;
  return d;
}

struct DriftFit {
  double slope = 0.0;
  double max_abs_time_defect = 0.0;
  double max_spatial_defect = 0.0;
};

/// Conjugacy defect along a time grid with a linear fit of the time defect.
inline DriftFit conjugacy_drift(const Reparametrization& r1, const Reparametrization& r2, const ScalarField& f,
                                const FlowSystem& flow, const Vec& x, const std::vector<double>& times) {
  DriftFit out;
  std::vector<double> tt, dd;
  for (double t : times) {
    auto d = transfer_conjugacy(r1, r2, f, flow, x, t);
    out.max_abs_time_defect = std::max(out.max_abs_time_defect, std::abs(d.time));
    out.max_spatial_defect = std::max(out.max_spatial_defect, d.spatial);
    tt.push_back(t);
    dd.push_back(d.time);
  }
  if (tt.size() >= 2) out.slope = linear_fit(tt, dd).slope;
  return out;
}

// ---------------------------------------------------------------------------
// averages and correlations

/// (1/T) int_0^T f(phi_t x) dt.
inline double ergodic_average(const ScalarField& f, const FlowSystem& flow, const Vec& x, double T) {
  if (!(T > 0)) throw Error(Errc::invalid_input, "averaging time must be positive");
  return detail::chunked_integral([&](double s) { return f(flow.evolve(x, s)); }, 0.0, T) / T;
}

/// (1/T) int_0^T f(phi^tau_t x) dt, computed as (1/T) int_0^{z(x,T)} (f tau)(phi_s x) ds.
inline double time_changed_average(const Reparametrization& r, const ScalarField& f, const FlowSystem& flow,
                                   const Vec& x, double T) {
  const double z = inverse_z(r, flow, x, T);
  return detail::chunked_integral([&](double s) {
           const Vec p = flow.evolve(x, s);
           return f(p) * r.tau(p);
         }, 0.0, z) / T;
}

struct CorrelationFit {
  std::vector<double> times, defects;  // |<a, a o phi_t> - (int a)^2|
  double D = 0.0, sigma = 0.0, r2 = 0.0;
  bool constant = false;  // zero variance: sigma undefined
  bool decays = false;    // accepted as polynomial decay
};

/// Log-log fit of the correlation defect. Accepted when the slope is below -0.25 with
/// r^2 >= 0.9.
inline CorrelationFit correlation_decay_fit(const ScalarField& alpha, const FlowSystem& flow, const std::vector<double>& times,
                                            int resolution) {
  if (times.size() < 3) throw Error(Errc::invalid_input, "need at least three correlation times");
  CorrelationFit fit;
  fit.times = times;
  const double mean = flow.integrate(alpha, resolution);
  const double second = flow.integrate([&](const Vec& x) { return alpha(x) * alpha(x); }, resolution);
  const double variance = second - mean * mean;
  if (std::abs(variance) <= 1e-14 * std::max(1.0, second)) {
    fit.constant = true;
    fit.defects.assign(times.size(), 0.0);
    return fit;
  }
  fit.defects.resize(times.size());
  parallel_for(times.size(), [&](std::size_t i) {
    const double t = times[i];
    fit.defects[i] = std::abs(flow.integrate([&](const Vec& x) { return alpha(x) * alpha(flow.evolve(x, t)); }, resolution) -
                              mean * mean);
  });
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < times.size(); ++i)
    if (times[i] > 0 && fit.defects[i] > 1e-300) {
      lx.push_back(std::log(times[i]));
      ly.push_back(std::log(fit.defects[i]));
    }
  if (lx.size() < 3) throw Error(Errc::numeric_failure, "insufficient decay range");
  auto lf = linear_fit(lx, ly);
  fit.sigma = -lf.slope;
  fit.D = std::exp(lf.intercept);
  fit.r2 = lf.r2;
  fit.decays = fit.sigma > 0.25 && fit.r2 >= 0.9;
  return fit;
}

enum class GhVerdict { coboundary_consistent, linear_growth, inconclusive };

inline std::string verdict_name(GhVerdict v) {
  switch (v) {
    case GhVerdict::coboundary_consistent: return "coboundary-consistent";
    case GhVerdict::linear_growth: return "linear-growth";
    case GhVerdict::inconclusive: return "inconclusive";
  }
  return "?";
}

struct GhReport {
  std::vector<double> T, l2;  // L2 norm over samples of int_0^T g(phi_t x) dt
  double mean = 0.0;
  double sup = 0.0;
  double growth_slope = 0.0;
  GhVerdict verdict = GhVerdict::inconclusive;
};

/// Mean-zero g with bounded integrals (upper-half maximum within 1.5 times the lower-half
/// maximum) is coboundary-consistent; g with nonzero mean and log-log slope >= 0.8 grows
/// linearly; everything else is inconclusive.
inline GhReport gh_equibounded_test(const ScalarField& g, const FlowSystem& flow, int samples, std::uint64_t seed,
                                    const std::vector<double>& T_grid) {
  if (T_grid.size() < 4) throw Error(Errc::invalid_input, "need at least four horizons");
  GhReport rep;
  rep.T = T_grid;
  std::sort(rep.T.begin(), rep.T.end());
  rep.mean = flow.integrate(g, flow.default_resolution());
  const double gnorm = std::sqrt(flow.integrate([&](const Vec& x) { return g(x) * g(x); }, flow.default_resolution()));
  std::vector<Vec> xs(samples);
  CounterRng rng(seed, 0);
  for (auto& x : xs) x = flow.sample(rng);
  std::vector<std::vector<double>> vals(samples, std::vector<double>(rep.T.size()));
  parallel_for(static_cast<std::size_t>(samples), [&](std::size_t k) {
    double acc = 0.0, prev = 0.0;
    for (std::size_t j = 0; j < rep.T.size(); ++j) {
      acc += detail::chunked_integral([&](double s) { return g(flow.evolve(xs[k], s)); }, prev, rep.T[j]);
      prev = rep.T[j];
      vals[k][j] = acc;
    }
  });
  rep.l2.resize(rep.T.size());
  for (std::size_t j = 0; j < rep.T.size(); ++j) {
    CompensatedSum s;
    for (int k = 0; k < samples; ++k) s.add(vals[k][j] * vals[k][j]);
    rep.l2[j] = std::sqrt(s.value() / samples);
    rep.sup = std::max(rep.sup, rep.l2[j]);
  }
  std::vector<double> lx, ly;
  for (std::size_t j = 0; j < rep.T.size(); ++j)
    if (rep.l2[j] > 0) {
      lx.push_back(std::log(rep.T[j]));
      ly.push_back(std::log(rep.l2[j]));
    }
  rep.growth_slope = lx.size() >= 2 ? linear_fit(lx, ly).slope : 0.0;
  const std::size_t half = rep.T.size() / 2;
  double lower = 0.0, upper = 0.0;
  for (std::size_t j = 0; j < rep.T.size(); ++j) (j < half ? lower : upper) = std::max(j < half ? lower : upper, rep.l2[j]);
  const bool mean_zero = std::abs(rep.mean) <= 1e-8 * std::max(gnorm, 1e-300);
  if (!mean_zero)
    rep.verdict = rep.growth_slope >= 0.8 ? GhVerdict::linear_growth : GhVerdict::inconclusive;
  else if (upper <= 1.5 * lower)
    rep.verdict = GhVerdict::coboundary_consistent;
  else
    rep.verdict = GhVerdict::inconclusive;
  return rep;
}

}  // namespace lorentz::timechange
