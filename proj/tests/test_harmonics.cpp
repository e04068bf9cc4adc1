#include "lorentz/harmonics.hpp"

#include <gtest/gtest.h>

using namespace lorentz;
using namespace lorentz::harmonics;
using lorentz::special::gauss_2f1_terminating;
using lorentz::special::phi_poly;

namespace {

Vec random_unit(int n, CounterRng& rng) {
  Vec x(n);
  for (int i = 0; i < n; ++i) x(i) = rng.normal();
  return x / x.norm();
}

// Flat Laplacian of the degree-0 extension x -> F(x/|x|) at a unit point, which equals
// the sphere Laplacian of F there.
template <class F>
double sphere_laplacian_fd(F&& f, const Vec& x, double h = 1e-3) {
  const int n = static_cast<int>(x.size());
  auto ext = [&](const Vec& y) { return f(Vec(y / y.norm())); };
  double lap = 0.0;
  const double f0 = ext(x);
  for (int i = 0; i < n; ++i) {
    Vec p = x, m = x, p2 = x, m2 = x;
    p(i) += h;
    m(i) -= h;
    p2(i) += 2 * h;
    m2(i) -= 2 * h;
    lap += (-ext(p2) + 16 * ext(p) - 30 * f0 + 16 * ext(m) - ext(m2)) / (12 * h * h);
  }
  return lap;
}

}  // namespace

TEST(Special, GammaAndPochhammer) {
  EXPECT_NEAR(std::exp(special::log_gamma(0.5)), std::sqrt(M_PI), 1e-13 * std::sqrt(M_PI));
  EXPECT_EQ(special::pochhammer(2.7, 0), 1.0);
  EXPECT_EQ(special::pochhammer(3.0, 4), 360.0);
  EXPECT_THROW(special::log_gamma(0.0), Error);
  EXPECT_THROW(special::log_gamma(-2.0), Error);
  // long products through log-Gamma agree with the direct product
  double direct = 1.0;
  for (int j = 0; j < 100; ++j) direct *= 1.25 + j;
  EXPECT_NEAR(special::pochhammer(1.25, 100) / direct, 1.0, 1e-12);
  EXPECT_NEAR(special::pochhammer(-0.5, 70) / ([] {
                double p = 1;
                for (int j = 0; j < 70; ++j) p *= -0.5 + j;
                return p;
              }()),
              1.0, 1e-12);
}

TEST(Special, Hypergeometric) {
  EXPECT_EQ(gauss_2f1_terminating(-3, 0.7, 1.2, 0.0), 1.0);
  EXPECT_NEAR(gauss_2f1_terminating(-1, 0.7, 1.3, 0.4), 1 - 0.7 * 0.4 / 1.3, 1e-15);
  const double xi = 0.6, t2 = std::tan(xi) * std::tan(xi);
  EXPECT_NEAR(gauss_2f1_terminating(-1, -0.5, 1, -t2), 1 - t2 / 2, 1e-14);
  EXPECT_THROW(gauss_2f1_terminating(-3, 1, -1, 0.5), Error);
  EXPECT_THROW(gauss_2f1_terminating(0.5, 1.5, 1, 0.5), Error);
}

TEST(Special, ZonalPolynomial) {
  for (int n = 2; n <= 7; ++n)
    for (int m = 0; m <= 12; ++m) EXPECT_NEAR(phi_poly(n, m, 1.0), 1.0, 1e-13);
  for (double x : {-1.0, -0.3, 0.0, 0.4, 0.9}) {
    EXPECT_NEAR(phi_poly(5, 1, x), x, 1e-15);
    EXPECT_NEAR(phi_poly(3, 2, x), (3 * x * x - 1) / 2, 1e-14);
  }
  // cos^m xi F(...; -tan^2 xi) away from x = 0
  for (double x : {0.2, 0.5, 0.8}) {
    double xi = std::acos(x), t2 = std::tan(xi) * std::tan(xi);
    for (int m = 0; m <= 6; ++m) {
      double f = std::pow(x, m) * gauss_2f1_terminating(-m / 2.0, -(m - 1) / 2.0, 1.0, -t2);
      EXPECT_NEAR(phi_poly(3, m, x), f, 1e-12);
    }
  }
  EXPECT_THROW(phi_poly(3, 2, 1.5), Error);
  // polynomial of degree m: interpolation at m+2 Chebyshev nodes reproduces the samples
  for (int m = 1; m <= 10; ++m) {
    const int k = m + 2;
    Vec nodes(k), vals(k);
    for (int i = 0; i < k; ++i) {
      nodes(i) = std::cos(M_PI * (i + 0.5) / k);
      vals(i) = phi_poly(4, m, nodes(i));
    }
    Mat V(k, m + 1);
    for (int i = 0; i < k; ++i)
      for (int j = 0; j <= m; ++j) V(i, j) = std::pow(nodes(i), j);
    Vec coef = V.colPivHouseholderQr().solve(vals);
    EXPECT_LE((V * coef - vals).cwiseAbs().maxCoeff(), 1e-10) << m;
  }
}

TEST(Harmonics, Dimensions) {
  EXPECT_EQ(harmonic_basis(2, 0).size(), 1);
  for (int m = 1; m <= 6; ++m) EXPECT_EQ(harmonic_basis(2, m).size(), 2);
  // brute force: Laplacian on the 6 degree-2 monomials of R^3 is a 1x6 map of rank 1
  Mat lap = Mat::Zero(1, 6);
  auto mons = monomials(3, 2);
  for (int c = 0; c < 6; ++c)
    for (int i = 0; i < 3; ++i)
      if (mons[c][i] == 2) lap(0, c) = 2;
  Eigen::FullPivLU<Mat> lu(lap);
  EXPECT_EQ(6 - lu.rank(), 5);
  EXPECT_EQ(harmonic_basis(3, 2).size(), 5);
  for (int n = 2; n <= 6; ++n)
    for (int m = 0; m <= 5; ++m) EXPECT_EQ(harmonic_basis(n, m).size(), harmonic_dim(n, m));
}

TEST(Harmonics, QuadratureBasics) {
  for (int n = 2; n <= 6; ++n) {
    auto q = sphere_quadrature(n, 9);
    EXPECT_NEAR(q.weights.sum(), 1.0, 1e-14);
    EXPECT_GT(q.weights.minCoeff(), 0.0);
    for (int i = 0; i < n; ++i)
      EXPECT_NEAR(integrate(q, [&](const Vec& x) { return x(i) * x(i); }), 1.0 / n, 1e-13);
    EXPECT_NEAR(integrate(q, [](const Vec& x) { return x(0) * x(0) * x(1) * x(1); }),
                1.0 / (n * (n + 2.0)) * (n >= 2), 1e-13);
  }
  EXPECT_THROW(sphere_quadrature(3, 0), Error);
}

TEST(Harmonics, ExactBasisOrthonormal) {
  for (int n = 2; n <= 5; ++n) {
    auto q = sphere_quadrature(n, 12);
    std::vector<PolynomialBasis> bases;
    for (int m = 0; m <= 3; ++m) bases.push_back(harmonic_basis(n, m));
    Mat vals(q.size(), 0);
    for (auto& b : bases) {
      Mat v(q.size(), b.size());
      for (int i = 0; i < q.size(); ++i) v.row(i) = b.eval(q.nodes.row(i).transpose()).transpose();
      Mat tmp(q.size(), vals.cols() + v.cols());
      tmp << vals, v;
      vals = tmp;
    }
    Mat gram = vals.transpose() * q.weights.asDiagonal() * vals;
    EXPECT_LE((gram - Mat::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff(), 1e-10) << n;
  }
}

TEST(Harmonics, SphereLaplacianEigenvalues) {
  CounterRng rng(21, 0);
  for (int n : {3, 4}) {
    HarmonicSystem sys(n, 5);
    for (int m = 0; m <= 4; ++m) {
      auto pb = harmonic_basis(n, m);
      Vec x = random_unit(n, rng);
      for (int c = 0; c < pb.size(); ++c) {
        auto f = [&](const Vec& y) { return pb.eval(y)(c); };
        EXPECT_NEAR(sphere_laplacian_fd(f, x), -m * (m + n - 2.0) * f(x), 1e-5) << n << " " << m;
      }
      for (int c = 0; c < sys.dim(m); ++c) {
        auto f = [&](const Vec& y) { return sys.eval(y)(sys.offset(m) + c); };
        EXPECT_NEAR(sphere_laplacian_fd(f, x), -m * (m + n - 2.0) * f(x), 1e-5) << n << " " << m;
      }
    }
  }
}

TEST(Harmonics, AdaptedSystemSpansExactBasis) {
  for (int n : {2, 3, 4, 5}) {
    const int mmax = 6;
    SphereModel model(n, mmax);
    Mat gram = model.basis_at_nodes.transpose() * model.quad.weights.asDiagonal() * model.basis_at_nodes;
    EXPECT_LE((gram - Mat::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff(), 1e-11) << n;
    for (int m = 0; m <= mmax; ++m) {
      auto pb = harmonic_basis(n, m);
      Mat ev(model.quad.size(), pb.size());
      for (int i = 0; i < model.quad.size(); ++i) ev.row(i) = pb.eval(model.quad.nodes.row(i).transpose()).transpose();
      Mat proj = model.basis_at_nodes.middleCols(model.system->offset(m), model.system->dim(m)).transpose() *
                 model.quad.weights.asDiagonal() * ev;
      Eigen::JacobiSVD<Mat> svd(proj);
      EXPECT_NEAR(svd.singularValues().minCoeff(), 1.0, 1e-10);
      EXPECT_NEAR(svd.singularValues().maxCoeff(), 1.0, 1e-10);
    }
  }
}

TEST(Harmonics, ParsevalAndSynthesis) {
  CounterRng rng(22, 0);
  for (int n : {2, 3, 4}) {
    SphereModel model(n, 8);
    Vec c(model.size());
    for (int i = 0; i < c.size(); ++i) c(i) = rng.normal();
    auto f = from_coeffs(model, c);
    EXPECT_NEAR(f.samples.cwiseAbs2().dot(model.quad.weights), c.squaredNorm(), 1e-9 * c.squaredNorm());
    EXPECT_LE((model.analysis(f.samples) - c).norm(), 1e-9 * c.norm());
    EXPECT_LE((model.synthesis(model.analysis(f.samples)) - f.samples).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(Harmonics, Restriction) {
  SphereModel model(3, 8), eq(2, 8);
  Vec one = Vec::Zero(model.size());
  one(0) = 1.0;
  auto r = restrict(model, one, eq);
  EXPECT_NEAR(r.coeffs(0), 1.0, 1e-12);
  EXPECT_LE(r.coeffs.tail(r.coeffs.size() - 1).norm(), 1e-12);
  auto x1f = from_function(model, [](const Vec& x) { return x(0) * (x(1) * x(1) - 0.3 * x(2) + 1.0); });
  EXPECT_LE(restrict(model, x1f.coeffs, eq).coeffs.norm(), 1e-12);
  // parity: W_m restricts into degrees l with m - l even
  for (int m = 0; m <= 6; ++m)
    for (int c = 0; c < model.system->dim(m); ++c) {
      Vec e = Vec::Zero(model.size());
      e(model.system->offset(m) + c) = 1.0;
      auto rr = restrict(model, e, eq);
      for (int l = 0; l <= 8; ++l)
        if ((m - l) % 2 != 0 || l > m)
          EXPECT_LE(rr.coeffs.segment(eq.system->offset(l), eq.system->dim(l)).norm(), 1e-12);
    }
  EXPECT_THROW(restrict(eq, Vec::Zero(eq.size()), eq), Error);
}

TEST(Harmonics, EmbedVtilde) {
  for (int n : {3, 4}) {
    SphereModel model(n, 8), eq(n - 1, 8);
    for (int m = 0; m <= 6; ++m)
      for (int l = m % 2; l <= m; l += 2) {
        std::vector<double> ratios;
        for (int j = 0; j < eq.system->dim(l); ++j) {
          Vec h = Vec::Zero(eq.system->dim(l));
          h(j) = 1.0;
          auto f = embed_vtilde(model, eq, h, l, m);
          EXPECT_LE(projection_error(model, f, m), 1e-8) << n << " " << m << " " << l;
          auto back = restrict(model, f.coeffs, eq);
          Vec hb = back.coeffs.segment(eq.system->offset(l), eq.system->dim(l));
          EXPECT_LE((back.coeffs.norm() - hb.norm()), 1e-10);
          ratios.push_back(hb(j));
          EXPECT_LE((hb - hb(j) * h).norm(), 1e-10);
          if (l == m) EXPECT_NEAR(hb(j), 1.0, 1e-10);
        }
        auto [lo, hi] = std::minmax_element(ratios.begin(), ratios.end());
        EXPECT_LE((*hi - *lo) / std::abs(*hi), 1e-8);
      }
  }
  // l = 0, m = 2, n = 3: the image is the x1-zonal degree-2 harmonic (3x1^2-1)/2
  SphereModel model(3, 4), eq(2, 4);
  Vec h(1);
  h(0) = 1.0;
  auto f = embed_vtilde(model, eq, h, 0, 2);
  auto z = from_function(model, [](const Vec& x) { return 1.5 * x(0) * x(0) - 0.5; });
  EXPECT_LE((f.coeffs - z.coeffs).norm(), 1e-12);
  EXPECT_THROW(embed_vtilde(model, eq, h, 1, 2), Error);
}

TEST(Harmonics, EmbedVtildeLiteralIndexFailsMembership) {
  // reading the zonal index as n + (m - l) instead of n + 2l leaves W_m once they differ
  SphereModel model(3, 8), eq(2, 8);
  Vec h = Vec::Zero(2);
  h(0) = 1.0;
  auto lit = embed_vtilde(model, eq, h, 2, 4, 3 + 4 - 2);
  auto ok = embed_vtilde(model, eq, h, 2, 4);
  EXPECT_GT(projection_error(model, lit, 4), 1e-3);
  EXPECT_LE(projection_error(model, ok, 4), 1e-10);
}
