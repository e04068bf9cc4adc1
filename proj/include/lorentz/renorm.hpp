#pragma once
// Geodesic renormalization of ergodic-average coefficients: the linear recurrence
// c_{l+1} = A c_l + r_l with A = exp(-(1 +- 2 nu) sigma / 2) and remainders bounded by
// C (e^{l sigma} T)^{-1}, its explicit majorant, adversarial cascades, exponent recovery
// and the shape of normalized coefficient ensembles.

#include "lorentz/common.hpp"

#include <limits>
#include <string>

namespace lorentz::renorm {

// ---------------------------------------------------------------------------
// linear recurrences

struct RecurrenceSolution {
  std::vector<Vec> iterative;
  std::vector<Vec> closed_form;
  double max_difference = 0.0;
};

/// x_{l+1} = A x_l + R_l, iterated and via x_l = A^l x_0 + sum_{j<l} A^{l-j-1} R_j with
/// powers from repeated squaring.
inline RecurrenceSolution solve_linear_recurrence(const Mat& A, const Vec& x0, const std::vector<Vec>& R) {
  if (A.rows() != A.cols() || A.rows() != x0.size()) throw Error(Errc::dimension_mismatch, "recurrence shapes differ");
  for (auto& r : R)
    if (r.size() != x0.size()) throw Error(Errc::dimension_mismatch, "remainder shape differs");
  const std::size_t L = R.size();
  RecurrenceSolution s;
  s.iterative.push_back(x0);
  for (std::size_t l = 0; l < L; ++l) s.iterative.push_back(A * s.iterative.back() + R[l]);
  auto power = [&](std::size_t k) {
    Mat result = Mat::Identity(A.rows(), A.cols()), base = A;
    while (k) {
      if (k & 1) result = result * base;
      base = base * base;
      k >>= 1;
    }
    return result;
  };
  for (std::size_t l = 0; l <= L; ++l) {
    Vec x = power(l) * x0;
    for (std::size_t j = 0; j < l; ++j) x += power(l - j - 1) * R[j];
    s.closed_form.push_back(x);
    const double scale = std::max(1.0, x.cwiseAbs().maxCoeff());
    s.max_difference = std::max(s.max_difference, (x - s.iterative[l]).cwiseAbs().maxCoeff() / scale);
  }
  return s;
}

// ---------------------------------------------------------------------------
// parameters and majorants

enum class Branch { plus, minus };

inline double branch_sign(Branch b) { return b == Branch::plus ? 1.0 : -1.0; }

/// (1 +- 2 nu) / 2.
inline double decay_rate(double nu, Branch b) { return 0.5 * (1.0 + 2.0 * branch_sign(b) * nu); }

inline void require_nu(double nu) {
  if (!(nu > 0 && nu < 0.5)) throw Error(Errc::domain_error, "nu must lie in (0, 1/2)");
}

inline void require_step(double sigma) {
  if (!(sigma >= 1 && sigma <= 2)) throw Error(Errc::invalid_input, "geodesic step must lie in [1, 2]");
}

struct Majorant {
  double exact = 0.0;     // A^l (c0 + (C/T) A^{-1} (1 - q^l) / (1 - q))
  double uniform = 0.0;   // same with (1 - q^l) replaced by 1
  double aggregated_C = 0.0;  // C A^{-1} / (1 - q), the constant multiplying T^{-1}
};

/// Bound on |c_l| for one branch. q = e^{-sigma} / A = e^{(-1 +- 2 nu) sigma / 2} must be
/// below 1, which for the plus branch is nu < 1/2.
inline Majorant coefficient_upper_bound(double nu, double sigma, double T, double c0_bound, double remainder_C, int l,
                                        Branch branch) {
  require_nu(nu);
  require_step(sigma);
  if (!(T > 0) || c0_bound < 0 || remainder_C < 0 || l < 0) throw Error(Errc::invalid_input, "invalid majorant arguments");
  const double rate = decay_rate(nu, branch);
  const double A = std::exp(-rate * sigma);
  const double q = std::exp((-1.0 + 2.0 * branch_sign(branch) * nu) * sigma / 2.0);
  if (!(q < 1)) throw Error(Errc::domain_error, "divergent remainder sum (needs nu < 1/2)");
  Majorant m;
  m.aggregated_C = remainder_C / A / (1.0 - q);
  const double Al = std::exp(-rate * sigma * l);
  m.exact = Al * (c0_bound + m.aggregated_C / T * (-std::expm1(l * std::log(q))));
  m.uniform = Al * (c0_bound + m.aggregated_C / T);
  return m;
}

// ---------------------------------------------------------------------------
// cascades

enum class Strategy { zero, alternating, at_bound, opposing, random };

inline Strategy parse_strategy(const std::string& s) {
  if (s == "zero") return Strategy::zero;
  if (s == "alternating") return Strategy::alternating;
  if (s == "at-bound" || s == "at_bound") return Strategy::at_bound;
  if (s == "opposing") return Strategy::opposing;
  if (s == "random") return Strategy::random;
  throw Error(Errc::invalid_input, "unknown strategy '" + s + "' (zero, alternating, at-bound, opposing, random)");
}

inline std::string strategy_name(Strategy s) {
  switch (s) {
    case Strategy::zero: return "zero";
    case Strategy::alternating: return "alternating";
    case Strategy::at_bound: return "at-bound";
    case Strategy::opposing: return "opposing";
    case Strategy::random: return "random";
  }
  return "?";
}

enum class Convention { contraction, expansion };

struct RecurrenceState {
  double c_plus = 0.0, c_minus = 0.0;
  double remainder_bound = 0.0;  // C (e^{l sigma} T)^{-1}
  int l = 0;
  double nu = 0.0, sigma = 0.0, T = 0.0;
};

struct CascadeParams {
  double nu = 0.25;
  double sigma = 1.5;
  double T = 10.0;
  double c0_plus = 1.0, c0_minus = 1.0;
  double remainder_C = 1.0;
  int steps = 40;
  Strategy strategy = Strategy::zero;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;

  void validate() const {
    require_nu(nu);
    require_step(sigma);
    if (!(T > 0)) throw Error(Errc::invalid_input, "T must be positive");
    if (remainder_C < 0) throw Error(Errc::invalid_input, "remainder constant must be >= 0");
    if (steps < 0) throw Error(Errc::invalid_input, "steps must be >= 0");
  }
};

struct Cascade {
  std::vector<RecurrenceState> contraction;  // primary: matches e^{-(1 +- 2 nu) t / 2}
  std::vector<RecurrenceState> expansion;    // variant with multiplier e^{+(1 +- 2 nu) sigma / 2}
};

namespace detail {
inline double remainder_value(Strategy s, double bound, int l, double c, CounterRng& rng) {
  switch (s) {
    case Strategy::zero: return 0.0;
    case Strategy::alternating: return (l % 2 == 0 ? 1.0 : -1.0) * bound;
    case Strategy::at_bound: return (c >= 0 ? 1.0 : -1.0) * bound;
    case Strategy::opposing: return (c >= 0 ? -1.0 : 1.0) * bound;
    case Strategy::random: return rng.uniform(-1.0, 1.0) * bound;
  }
  return 0.0;
}
}  // namespace detail

/// Both conventions driven by the same remainder strategy; the random strategy draws the
/// same remainder sequence for both.
inline Cascade simulate_cascade(const CascadeParams& p) {
  p.validate();
  Cascade out;
  for (Convention conv : {Convention::contraction, Convention::expansion}) {
    CounterRng rng(p.seed, p.stream);
    const double sgn = conv == Convention::contraction ? -1.0 : 1.0;
    const double mp = std::exp(sgn * decay_rate(p.nu, Branch::plus) * p.sigma);
    const double mm = std::exp(sgn * decay_rate(p.nu, Branch::minus) * p.sigma);
    RecurrenceState s{p.c0_plus, p.c0_minus, p.remainder_C / p.T, 0, p.nu, p.sigma, p.T};
    auto& traj = conv == Convention::contraction ? out.contraction : out.expansion;
    traj.push_back(s);
    for (int l = 0; l < p.steps; ++l) {
      const double b = p.remainder_C * std::exp(-l * p.sigma) / p.T;
      const double rp = detail::remainder_value(p.strategy, b, l, s.c_plus, rng);
      const double rm = detail::remainder_value(p.strategy, b, l, s.c_minus, rng);
      s.c_plus = mp * s.c_plus + rp;
      s.c_minus = mm * s.c_minus + rm;
      s.l = l + 1;
      s.remainder_bound = p.remainder_C * std::exp(-(l + 1) * p.sigma) / p.T;
      traj.push_back(s);
    }
  }
  return out;
}

struct DominationReport {
  std::size_t cascades = 0;
  std::size_t violations = 0;
  double worst_ratio = 0.0;  // max |c_l| / majorant
};

/// Random cascades with |c0| <= c0_bound against the exact majorant of both branches.
inline DominationReport majorant_domination(double nu, double sigma, double T, double c0_bound, double remainder_C,
                                            int steps, std::size_t count, std::uint64_t seed) {
  std::vector<Vec> bounds(2, Vec(steps + 1));
  for (int l = 0; l <= steps; ++l) {
    bounds[0](l) = coefficient_upper_bound(nu, sigma, T, c0_bound, remainder_C, l, Branch::plus).exact;
    bounds[1](l) = coefficient_upper_bound(nu, sigma, T, c0_bound, remainder_C, l, Branch::minus).exact;
  }
  std::vector<std::size_t> viol(count, 0);
  std::vector<double> worst(count, 0.0);
  const Strategy strategies[] = {Strategy::random, Strategy::alternating, Strategy::at_bound, Strategy::opposing};
  parallel_for(count, [&](std::size_t k) {
    CounterRng rng(seed, 2 * k);
    CascadeParams p;
    p.nu = nu;
    p.sigma = sigma;
    p.T = T;
    p.remainder_C = remainder_C;
    p.steps = steps;
    p.c0_plus = rng.uniform(-1, 1) * c0_bound;
    p.c0_minus = rng.uniform(-1, 1) * c0_bound;
    p.strategy = strategies[k % 4];
    p.seed = seed;
    p.stream = 2 * k + 1;
    auto c = simulate_cascade(p).contraction;
    for (int l = 0; l <= steps; ++l) {
      const double rp = std::abs(c[l].c_plus) / bounds[0](l), rm = std::abs(c[l].c_minus) / bounds[1](l);
      worst[k] = std::max({worst[k], rp, rm});
      if (rp > 1 + 1e-12 || rm > 1 + 1e-12) ++viol[k];
    }
  });
  DominationReport r;
  r.cascades = count;
  for (std::size_t k = 0; k < count; ++k) {
    r.violations += viol[k];
    r.worst_ratio = std::max(r.worst_ratio, worst[k]);
  }
  return r;
}

struct PersistenceReport {
  double threshold_constant = 0.0;  // constant used in T c0 > 2 C
  bool above_threshold = false;
  double min_ratio = 0.0;           // min over l, branches of |c_l| / (c0 A^l)
  bool persists = false;            // min_ratio >= 1/2
};

/// Opposing at-bound remainders against half of the pure-decay curve. aggregated = true
/// uses the constant of the summed remainder bound, false the per-step constant.
inline PersistenceReport lower_bound_persistence(double nu, double sigma, double T, double c0, double remainder_C,
                                                 int steps, bool aggregated = true) {
  CascadeParams p;
  p.nu = nu;
  p.sigma = sigma;
  p.T = T;
  p.c0_plus = p.c0_minus = c0;
  p.remainder_C = remainder_C;
  p.steps = steps;
  p.strategy = Strategy::opposing;
  auto c = simulate_cascade(p).contraction;
  PersistenceReport r;
  double agg = 0.0;
  for (Branch b : {Branch::plus, Branch::minus})
    agg = std::max(agg, coefficient_upper_bound(nu, sigma, T, c0, remainder_C, 0, b).aggregated_C);
  r.threshold_constant = aggregated ? agg : remainder_C;
  r.above_threshold = T * c0 > 2 * r.threshold_constant;
  r.min_ratio = std::numeric_limits<double>::infinity();
  for (int l = 0; l <= steps; ++l) {
    r.min_ratio = std::min(r.min_ratio, c[l].c_plus / (c0 * std::exp(-decay_rate(nu, Branch::plus) * sigma * l)));
    r.min_ratio = std::min(r.min_ratio, c[l].c_minus / (c0 * std::exp(-decay_rate(nu, Branch::minus) * sigma * l)));
  }
  r.persists = r.min_ratio >= 0.5;
  return r;
}

// ---------------------------------------------------------------------------
// continuous-time exponents

struct DecayProfile {
  double exponent_plus = 0.0, exponent_minus = 0.0;  // (1 +- 2 nu) / 2
  double fitted_plus = 0.0, fitted_minus = 0.0;
  double constant_plus = 0.0, constant_minus = 0.0;
  double decades = 0.0;
  double expansion_fitted_plus = 0.0, expansion_fitted_minus = 0.0;  // variant convention
};

/// Log-log regression of |c_+-| against lambda = e^{l sigma} T along one cascade.
inline DecayProfile continuous_time_exponents(const CascadeParams& p) {
  p.validate();
  const double decades = p.steps * p.sigma / std::log(10.0);
  if (decades < 3) throw Error(Errc::invalid_input, "grid must span at least 3 decades");
  auto c = simulate_cascade(p);
  DecayProfile d;
  d.exponent_plus = decay_rate(p.nu, Branch::plus);
  d.exponent_minus = decay_rate(p.nu, Branch::minus);
  d.decades = decades;
  auto fit = [&](const std::vector<RecurrenceState>& tr, bool plus) {
    std::vector<double> x, y;
    for (auto& s : tr) {
      const double v = std::abs(plus ? s.c_plus : s.c_minus);
      if (v > 0) {
        x.push_back(std::log(std::exp(s.l * p.sigma) * p.T));
        y.push_back(std::log(v));
      }
    }
    if (x.size() < 2) throw Error(Errc::numeric_failure, "cascade vanished");
    return linear_fit(x, y);
  };
  auto fp = fit(c.contraction, true), fm = fit(c.contraction, false);
  d.fitted_plus = -fp.slope;
  d.fitted_minus = -fm.slope;
  d.constant_plus = std::exp(fp.intercept);
  d.constant_minus = std::exp(fm.intercept);
  d.expansion_fitted_plus = -fit(c.expansion, true).slope;
  d.expansion_fitted_minus = -fit(c.expansion, false).slope;
  return d;
}

// ---------------------------------------------------------------------------
// normalized ensembles

struct ShapeReport {
  double l2 = 0.0;              // root mean square of the ensemble
  double sup_ratio = 0.0;       // max |c| / l2
  double mass_above_half = 0.0; // fraction with |c| > l2 / 2
  double gamma_floor = 0.0;     // 3 / (4 C^2) for the supplied bound C
  double paley_zygmund = 0.0;   // (9/16) / E[(c/l2)^4]
  bool bounded = false;         // sup_ratio <= C
  bool mass_ok = false;         // mass_above_half >= gamma_floor
};

/// Support report for c / |c|_{L2}. If |c| <= C |c|_{L2} pointwise, the set where
/// |c| > |c|_{L2} / 2 has mass at least 3 / (4 C^2).
inline ShapeReport averaged_distribution_shape(const std::vector<double>& samples, double C) {
  if (samples.empty()) throw Error(Errc::invalid_input, "empty ensemble");
  if (!(C >= 1)) throw Error(Errc::invalid_input, "bound constant must be >= 1");
  CompensatedSum s2;
  for (double v : samples) s2.add(v * v);
  ShapeReport r;
  r.l2 = std::sqrt(s2.value() / samples.size());
  if (!(r.l2 > 0)) throw Error(Errc::numeric_failure, "degenerate ensemble (all zero)");
  CompensatedSum s4;
  std::size_t above = 0;
  for (double v : samples) {
    const double u = v / r.l2;
    r.sup_ratio = std::max(r.sup_ratio, std::abs(u));
    s4.add(u * u * u * u);
    if (std::abs(u) > 0.5) ++above;
  }
  r.mass_above_half = double(above) / samples.size();
  r.gamma_floor = 0.75 / (C * C);
  r.paley_zygmund = 0.5625 / (s4.value() / samples.size());
  r.bounded = r.sup_ratio <= C;
  r.mass_ok = r.mass_above_half >= r.gamma_floor;
  return r;
}

/// Final plus coefficients of random cascades with c0 drawn from [c0_lo, c0_hi] (random
/// sign) and random remainders: the bound-structured ensemble.
inline std::vector<double> cascade_ensemble(const CascadeParams& base, double c0_lo, double c0_hi, std::size_t count,
                                            std::uint64_t seed) {
  std::vector<double> out(count);
  parallel_for(count, [&](std::size_t k) {
    CounterRng rng(seed, 2 * k);
    CascadeParams p = base;
    p.c0_plus = (rng.uniform() < 0.5 ? -1 : 1) * rng.uniform(c0_lo, c0_hi);
    p.c0_minus = p.c0_plus;
    p.strategy = Strategy::random;
    p.seed = seed;
    p.stream = 2 * k + 1;
    out[k] = simulate_cascade(p).contraction.back().c_plus;
  });
  return out;
}

}  // namespace lorentz::renorm
