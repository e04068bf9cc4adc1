#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace lorentz {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

enum class Errc {
  invalid_dimension,
  dimension_mismatch,
  branch_cut,
  numeric_failure,
  domain_error,
  parity_violation,
  pole,
  invalid_input,
  quadrature_insufficient,
  hypothesis_violation,
};

inline const char* errc_name(Errc c) {
  switch (c) {
    case Errc::invalid_dimension: return "invalid-dimension";
    case Errc::dimension_mismatch: return "dimension-mismatch";
    case Errc::branch_cut: return "branch-cut";
    case Errc::numeric_failure: return "numeric-failure";
    case Errc::domain_error: return "domain-error";
    case Errc::parity_violation: return "parity-violation";
    case Errc::pole: return "pole";
    case Errc::invalid_input: return "invalid-input";
    case Errc::quadrature_insufficient: return "quadrature-insufficient";
    case Errc::hypothesis_violation: return "hypothesis-violation";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}
  Errc code() const { return code_; }

 private:
  Errc code_;
};

/// Neumaier compensated accumulator.
class CompensatedSum {
 public:
  void add(double x) {
    double t = s_ + x;
    if (std::abs(s_) >= std::abs(x))
      c_ += (s_ - t) + x;
    else
      c_ += (x - t) + s_;
    s_ = t;
  }
  double value() const { return s_ + c_; }

 private:
  double s_ = 0.0;
  double c_ = 0.0;
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Counter-based generator: the i-th draw of stream s depends only on (seed, s, i),
/// so per-task streams give identical results under any schedule.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream)
      : key_(splitmix64(seed ^ splitmix64(stream + 0x632BE59BD9B4E019ULL))) {}

  std::uint64_t next() { return splitmix64(key_ + 0x9E3779B97F4A7C15ULL * (++counter_)); }
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double a, double b) { return a + (b - a) * uniform(); }
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }
  /// log-uniform magnitude in [10^lo, 10^hi]
  double log_uniform(double lo, double hi) { return std::pow(10.0, uniform(lo, hi)); }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

namespace detail {
inline int& thread_setting() {
  static int threads = 1;
  return threads;
}
}  // namespace detail

inline void set_threads(int t) { detail::thread_setting() = std::max(1, t); }
inline int threads() { return detail::thread_setting(); }

/// Static-partition parallel loop; callers write results into index-addressed slots.
template <class F>
void parallel_for(std::size_t count, F&& body) {
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(threads()), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < count; i += workers) body(i);
    });
  }
  for (auto& t : pool) t.join();
}

/// Least-squares slope and intercept of y against x.
struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

inline LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n) throw Error(Errc::invalid_input, "linear_fit needs >= 2 paired points");
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r2 = syy > 0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return f;
}

inline std::vector<double> logspace(double lo, double hi, int count) {
  std::vector<double> out(count);
  for (int i = 0; i < count; ++i) {
    double u = count == 1 ? 0.0 : static_cast<double>(i) / (count - 1);
    out[i] = std::pow(10.0, std::log10(lo) + u * (std::log10(hi) - std::log10(lo)));
  }
  return out;
}

}  // namespace lorentz
