#include <gtest/gtest.h>

#include "lorentz/timechange.hpp"

#include <cmath>

using namespace lorentz;
using namespace lorentz::timechange;

namespace {

Vec vec2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

TorusFlow irrational_torus() { return TorusFlow(vec2(1.0, std::sqrt(2.0))); }

Observable parse2(const std::string& s) { return Observable::parse(s, 2); }

}  // namespace

TEST(Expressions, ParsingAndDerivatives) {
  Vec x = vec2(0.3, 0.7);
  EXPECT_DOUBLE_EQ(parse2("-2^2")(x), -4.0);
  EXPECT_DOUBLE_EQ(parse2("2^3^2")(x), 512.0);
  EXPECT_DOUBLE_EQ(parse2("2*x - y/7 + 1e-3")(x), 0.6 - 0.1 + 1e-3);
  EXPECT_NEAR(Observable::parse("a*cos(2*pi*x1)", 2, {{"a", 0.5}})(x), 0.5 * std::cos(0.6 * M_PI), 1e-15);
  auto f = parse2("sin(2*pi*x1)*exp(x2) + sqrt(1 + x1*x2)");
  Vec v = vec2(0.4, -1.3);
  const double h = 1e-6;
  const double fd = (f(x + h * v) - f(x - h * v)) / (2 * h);
  EXPECT_NEAR(f.directional_derivative(x, v), fd, 1e-8);
  EXPECT_THROW(parse2("1 +"), Error);
  EXPECT_THROW(parse2("foo(x)"), Error);
  EXPECT_THROW(parse2("x3"), Error);
  EXPECT_THROW(parse2("q"), Error);
}

TEST(Flows, FlowProperty) {
  CounterRng rng(1, 0);
  TorusFlow torus = irrational_torus();
  ShearFlow shear;
  GroupFlow group(3);
  for (const FlowSystem* flow : std::vector<const FlowSystem*>{&torus, &shear, &group}) {
    for (int k = 0; k < 20; ++k) {
      Vec x = flow->sample(rng);
      const double s = rng.uniform(-5, 5), t = rng.uniform(-5, 5);
      const double scale = flow->has_measure() ? 1.0 : (1.0 + x.norm()) * (1 + std::abs(s) + std::abs(t));
      EXPECT_LE(flow->distance(flow->evolve(flow->evolve(x, s), t), flow->evolve(x, s + t)), 1e-10 * scale);
      EXPECT_LE(flow->distance(flow->evolve(x, 0.0), x), 1e-15 * scale);
    }
  }
  EXPECT_THROW(group.integrate([](const Vec&) { return 1.0; }, 4), Error);
}

TEST(Cocycle, ConstantAndIdentity) {
  TorusFlow flow = irrational_torus();
  auto one = make_time_change(Observable::constant(1.0, 2), flow);
  Vec x = vec2(0.2, 0.9);
  EXPECT_NEAR(cocycle_xi(one, flow, x, 7.5), 7.5, 1e-12);
  EXPECT_EQ(cocycle_xi(one, flow, x, 0.0), 0.0);
  auto tc = make_time_change(parse2("1 + 0.5*cos(2*pi*x1)*sin(2*pi*x2) + 0.2*sin(2*pi*x1)"), flow);
  CounterRng rng(2, 0);
  for (int k = 0; k < 20; ++k) {
    Vec p = flow.sample(rng);
    const double t = rng.uniform(-20, 20), s = rng.uniform(-20, 20);
    const double lhs = cocycle_xi(tc, flow, p, t + s);
    const double rhs = cocycle_xi(tc, flow, p, t) + cocycle_xi(tc, flow, flow.evolve(p, t), s);
    EXPECT_NEAR(lhs, rhs, 1e-8);
    // bi-Lipschitz with the sampled bounds
    const double a = std::min(t, s), b = std::max(t, s);
    const double dxi = cocycle_xi(tc, flow, p, b) - cocycle_xi(tc, flow, p, a);
    EXPECT_GE(dxi, tc.inf * (b - a) - 1e-12);
    EXPECT_LE(dxi, tc.sup * (b - a) + 1e-12);
  }
  EXPECT_THROW(cocycle_xi(tc, flow, x, std::nan("")), Error);
}

TEST(Cocycle, InverseRoundTrip) {
  TorusFlow flow = irrational_torus();
  // tau = 2 is rescaled to mean 1
  auto two = make_time_change(Observable::constant(2.0, 2), flow);
  Vec x = vec2(0.1, 0.4);
  EXPECT_NEAR(inverse_z(two, flow, x, 9.0), 9.0, 1e-12);
  auto raw_two = make_time_change(Observable::constant(2.0, 2), flow, false);
  EXPECT_NEAR(inverse_z(raw_two, flow, x, 9.0), 4.5, 1e-12);
  auto tc = make_time_change(parse2("1 + 0.6*cos(2*pi*(x1 + 3*x2))"), flow);
  CounterRng rng(3, 0);
  for (int k = 0; k < 20; ++k) {
    Vec p = flow.sample(rng);
    const double t = rng.uniform(-50, 50);
    EXPECT_NEAR(cocycle_xi(tc, flow, p, inverse_z(tc, flow, p, t)), t, 1e-9);
    EXPECT_NEAR(inverse_z(tc, flow, p, cocycle_xi(tc, flow, p, t)), t, 1e-8);
  }
  EXPECT_THROW(make_time_change(parse2("cos(2*pi*x1)"), flow), Error);
  EXPECT_THROW(make_time_change(parse2("0.5 + cos(2*pi*x1)"), flow), Error);
}

TEST(TimeChangedFlow, FlowPropertyAndOrbits) {
  TorusFlow flow = irrational_torus();
  auto one = make_time_change(Observable::constant(1.0, 2), flow);
  auto tc = make_time_change(parse2("1 + 0.4*sin(2*pi*x1)"), flow);
  auto r = reparametrization(tc);
  CounterRng rng(4, 0);
  for (int k = 0; k < 10; ++k) {
    Vec x = flow.sample(rng);
    const double s = rng.uniform(0, 10), t = rng.uniform(0, 10);
    EXPECT_LE(flow.distance(time_changed_evolve(one, flow, x, t), flow.evolve(x, t)), 1e-12);
    const Vec a = time_changed_evolve(r, flow, time_changed_evolve(r, flow, x, s), t);
    const Vec b = time_changed_evolve(r, flow, x, s + t);
    EXPECT_LE(flow.distance(a, b), 1e-7);
  }
  // group trajectory: time-changed points stay on the u^t orbit
  GroupFlow group(3);
  Reparametrization rg{[](const Vec& x) { return 1.0 + 0.5 * std::tanh(x(0)); }, 0.5, 1.5};
  Vec g = group.sample(rng);
  for (double t : {0.5, 2.0, 5.0}) {
    Vec y = time_changed_evolve(rg, group, g, t);
    EXPECT_LE(orbit_projection_distance(group, g, y, 0.0, 2 * t / 0.5), 1e-8 * (1 + y.norm()));
  }
}

TEST(TimeChangedFlow, MeasureInvariance) {
  TorusFlow flow = irrational_torus();
  auto tc = make_time_change(parse2("1 + 0.4*cos(2*pi*x1)"), flow);
  auto f = parse2("cos(2*pi*x1)");
  // int f tau dmu = 0.2
  const double exact = flow.integrate([&](const Vec& x) { return f(x) * tc(x); }, 32);
  EXPECT_NEAR(exact, 0.2, 1e-14);
  CounterRng rng(5, 0);
  for (int k = 0; k < 3; ++k) {
    Vec x = flow.sample(rng);
    EXPECT_NEAR(time_changed_average(reparametrization(tc), [&](const Vec& p) { return f(p); }, flow, x, 2000.0), exact,
                5e-3);
  }
}

TEST(Conjugacy, CohomologousAndMismatched) {
  TorusFlow flow = irrational_torus();
  auto tc1 = make_time_change(parse2("1 + 0.3*sin(2*pi*(x1 + x2))"), flow);
  auto f = parse2("0.05*cos(2*pi*x1)*sin(2*pi*x2)");
  auto r1 = reparametrization(tc1);
  auto r2 = cohomologous_partner(tc1, f, flow);
  ScalarField fs = [&](const Vec& x) { return f(x); };
  std::vector<double> times;
  for (int i = 0; i <= 20; ++i) times.push_back(5.0 * i);
  Vec x = vec2(0.37, 0.11);
  auto drift = conjugacy_drift(r1, r2, fs, flow, x, times);
  EXPECT_LE(drift.max_spatial_defect, 1e-6);
  EXPECT_LE(drift.max_abs_time_defect, 1e-6);
  // f = 0: identical time changes, psi = id
  auto zero = parse2("0*x1");
  auto same = cohomologous_partner(tc1, zero, flow);
  auto d0 = transfer_conjugacy(r1, same, [](const Vec&) { return 0.0; }, flow, x, 40.0);
  EXPECT_LE(d0.spatial, 1e-12);
  // mean gap 0.05: linear drift with slope 0.05/1.05
  auto tc3 = make_time_change(parse2("1.05 + 0.3*sin(2*pi*(x1 + x2))"), flow, false);
  auto d3 = conjugacy_drift(r1, reparametrization(tc3), [](const Vec&) { return 0.0; }, flow, x, times);
  EXPECT_NEAR(d3.slope, 0.05, 0.005);
  // tau_1 - U f must stay positive
  EXPECT_THROW(cohomologous_partner(tc1, parse2("cos(2*pi*x1)"), flow), Error);
}

TEST(Correlations, ShearToyRateAndRejections) {
  ShearFlow shear;
  auto alpha = parse2("cos(2*pi*x1)*sqrt(6*x2*(1 - x2))");
  std::vector<double> times;
  for (int t = 4; t <= 64; t += 4) times.push_back(t);
  auto fit = correlation_decay_fit([&](const Vec& x) { return alpha(x); }, shear, times, 400);
  EXPECT_TRUE(fit.decays);
  EXPECT_NEAR(fit.sigma, 2.0, 0.2);
  // closed form at integer times: 6 / (4 pi^2 t^2) / 2 ... = 3/(2 pi^2 t^2)
  EXPECT_NEAR(fit.defects[0], 3.0 / (2 * M_PI * M_PI * 16.0), 1e-8);
  auto c = correlation_decay_fit([](const Vec&) { return 3.0; }, shear, times, 64);
  EXPECT_TRUE(c.constant);
  TorusFlow rotation = irrational_torus();
  std::vector<double> rt;
  for (int i = 0; i < 24; ++i) rt.push_back(1.0 + 7.3 * i);
  auto r = correlation_decay_fit([](const Vec& x) { return std::cos(2 * M_PI * x(0)) + std::cos(2 * M_PI * x(1)); }, rotation,
                                 rt, 16);
  EXPECT_FALSE(r.decays);
}

TEST(ErgodicAverages, ConstantsCoboundariesLinearity) {
  TorusFlow flow = irrational_torus();
  Vec x = vec2(0.3, 0.6);
  EXPECT_NEAR(ergodic_average([](const Vec&) { return 2.5; }, flow, x, 37.0), 2.5, 1e-13);
  auto h = parse2("sin(2*pi*(x1 + 2*x2))");
  ScalarField uh = [&](const Vec& p) { return h.directional_derivative(p, flow.velocity(p)); };
  for (double T : {10.0, 100.0, 1000.0}) EXPECT_LE(std::abs(ergodic_average(uh, flow, x, T)) * T, 2.0 + 1e-9);
  ScalarField a = [](const Vec& p) { return std::cos(2 * M_PI * p(0)); };
  ScalarField b = [](const Vec& p) { return p(1) * p(1); };
  const double lin = ergodic_average([&](const Vec& p) { return 2 * a(p) - 3 * b(p); }, flow, x, 50.0);
  EXPECT_NEAR(lin, 2 * ergodic_average(a, flow, x, 50.0) - 3 * ergodic_average(b, flow, x, 50.0), 1e-12);
  EXPECT_THROW(ergodic_average(a, flow, x, 0.0), Error);
}

TEST(GottschalkHedlund, Verdicts) {
  TorusFlow flow = irrational_torus();
  std::vector<double> T{10, 20, 40, 80, 160, 320};
  auto h = parse2("sin(2*pi*(x1 + 2*x2))");
  ScalarField uh = [&](const Vec& p) { return h.directional_derivative(p, flow.velocity(p)); };
  auto cob = gh_equibounded_test(uh, flow, 16, 9, T);
  EXPECT_EQ(cob.verdict, GhVerdict::coboundary_consistent);
  const double hnorm = std::sqrt(0.5);
  EXPECT_LE(cob.sup, 2 * hnorm * 1.5);  // 2|h| plus sampling error over 16 points
  auto lin = gh_equibounded_test([](const Vec& p) { return 0.3 + std::cos(2 * M_PI * p(0)); }, flow, 16, 9, T);
  EXPECT_EQ(lin.verdict, GhVerdict::linear_growth);
  // small divisor: (-11, 100) . (1, 0.110001) = 1e-4
  TorusFlow liouville(vec2(1.0, 0.110001));
  auto sd = gh_equibounded_test([](const Vec& p) { return std::cos(2 * M_PI * (100 * p(1) - 11 * p(0))); }, liouville, 16, 9,
                                T);
  EXPECT_EQ(sd.verdict, GhVerdict::inconclusive);
}
