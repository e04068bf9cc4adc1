#include "lorentz/liealg.hpp"

#include <gtest/gtest.h>

using namespace lorentz;
using namespace lorentz::liealg;

namespace {

// Hand-entered n = 3 matrices (rows/cols x1, x2, x3, x4 with x4 timelike).
Mat hand_U3() {
  Mat u(4, 4);
  u << 0, 0, 0, 0,  //
      0, 0, 1, 1,   //
      0, -1, 0, 0,  //
      0, 1, 0, 0;
  return u;
}
Mat hand_Uopp3() {
  Mat u(4, 4);
  u << 0, 0, 0, 0,  //
      0, 0, -1, 1,  //
      0, 1, 0, 0,   //
      0, 1, 0, 0;
  return u;
}
Mat hand_Y3() {
  Mat y = Mat::Zero(4, 4);
  y(2, 3) = y(3, 2) = 1;
  return y;
}

}  // namespace

TEST(Liealg, GeneratorsMatchHandEnteredMatrices) {
  auto g = generators(3);
  EXPECT_EQ((g.U - hand_U3()).norm(), 0.0);
  EXPECT_EQ((g.U_opp - hand_Uopp3()).norm(), 0.0);
  EXPECT_EQ((geodesic(3) - hand_Y3()).norm(), 0.0);
  EXPECT_EQ(static_cast<int>(g.basis().size()), algebra_dim(3));
}

TEST(Liealg, GeneratorsSatisfyMembership) {
  for (int n = 2; n <= 6; ++n) {
    auto g = generators(n);
    for (auto& b : g.basis()) {
      EXPECT_EQ(algebra_defect(b), 0.0);
      EXPECT_EQ(b.trace(), 0.0);
    }
    EXPECT_EQ(algebra_defect(g.U), 0.0);
    EXPECT_EQ(algebra_defect(g.U_opp), 0.0);
  }
}

TEST(Liealg, InvalidDimension) {
  try {
    generators(1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::invalid_dimension);
  }
}

TEST(Liealg, GeodesicBracketU) {
  for (int n = 2; n <= 6; ++n) {
    Mat r = bracket(geodesic(n), unipotent(n)) + unipotent(n);
    EXPECT_EQ(r.norm(), 0.0) << n;
  }
}

TEST(Liealg, TripleScalarFromHandProduct) {
  // direct multiplication of hand matrices: [U, U~] = U U~ - U~ U
  Mat br = hand_U3() * hand_Uopp3() - hand_Uopp3() * hand_U3();
  // br must be proportional to Y_3; read the proportionality off entry (2,3)
  const double c = br(2, 3);
  EXPECT_EQ((br - c * hand_Y3()).norm(), 0.0);
  EXPECT_EQ(c, -2.0);  // frozen from the hand product above
  EXPECT_EQ(triple_scalar(3), c);
  // remaining triple relations with this c
  EXPECT_EQ((bracket(hand_Y3(), hand_Uopp3()) - hand_Uopp3()).norm(), 0.0);
  for (int n = 2; n <= 6; ++n) EXPECT_EQ(triple_scalar(n), -2.0);
}

TEST(Liealg, BracketBasics) {
  CounterRng rng(7, 0);
  for (int trial = 0; trial < 100; ++trial) {
    Mat a = random_algebra_element(4, rng), b = random_algebra_element(4, rng);
    EXPECT_LE((bracket(a, b) + bracket(b, a)).norm(), 1e-14);
    EXPECT_EQ(bracket(a, a).norm(), 0.0);
    EXPECT_LE(algebra_defect(bracket(a, b)), 1e-12);
  }
  EXPECT_THROW(bracket(Mat::Zero(3, 3), Mat::Zero(4, 4)), Error);
}

TEST(Liealg, JacobiIdentity) {
  CounterRng rng(8, 0);
  for (int trial = 0; trial < 50; ++trial) {
    Mat a = random_algebra_element(5, rng), b = random_algebra_element(5, rng), c = random_algebra_element(5, rng);
    Mat j = bracket(bracket(a, b), c) + bracket(bracket(b, c), a) + bracket(bracket(c, a), b);
    EXPECT_LE(j.norm(), 1e-10);
  }
}

TEST(Liealg, KillingFormAgainstTraceOracle) {
  // Independent oracle: on so(N-1,1) with N = n+1, B(X,Y) = (N-2) tr(XY).
  CounterRng rng(9, 0);
  for (int n = 2; n <= 5; ++n) {
    for (int trial = 0; trial < 10; ++trial) {
      Mat a = random_algebra_element(n, rng), b = random_algebra_element(n, rng);
      const double oracle = (n - 1) * (a * b).trace();
      EXPECT_NEAR(killing_form(a, b), oracle, 1e-9 * std::max(1.0, std::abs(oracle)));
    }
  }
  // Y_3 and U are orthogonal: tr(Y_3 U) = 0
  EXPECT_NEAR(killing_form(geodesic(3), unipotent(3)), 2.0 * (hand_Y3() * hand_U3()).trace(), 1e-12);
  EXPECT_NEAR(killing_form(geodesic(3), unipotent(3)), 0.0, 1e-12);
}

TEST(Liealg, KillingSymmetryAndInvariance) {
  CounterRng rng(10, 0);
  for (int trial = 0; trial < 30; ++trial) {
    Mat x = random_algebra_element(4, rng), a = random_algebra_element(4, rng), b = random_algebra_element(4, rng);
    EXPECT_NEAR(killing_form(a, b), killing_form(b, a), 1e-10);
    EXPECT_LE(std::abs(killing_form(bracket(x, a), b) + killing_form(a, bracket(x, b))), 1e-9);
  }
}

TEST(Liealg, ExpLog) {
  EXPECT_EQ((exp_matrix(Mat::Zero(4, 4)) - Mat::Identity(4, 4)).norm(), 0.0);
  Mat v = 0.05 * unipotent(3);
  EXPECT_LE((log_principal(exp_matrix(v)) - v).norm(), 1e-10);
  CounterRng rng(11, 0);
  Mat g = random_group_element(3, rng, 0.5);
  Mat c = g * v * group_inverse(g);
  EXPECT_LE((log_principal(exp_matrix(c)) - c).norm(), 1e-9);
  for (int trial = 0; trial < 1000; ++trial) {
    Mat w = random_algebra_element(4, rng);
    w *= rng.uniform(0.0, 0.1) / w.norm();
    if (w.norm() == 0) continue;
    EXPECT_LE((log_principal(exp_matrix(w)) - w).norm() / w.norm(), 1e-9);
  }
}

TEST(Liealg, LogBranchCut) {
  // rotation by pi has eigenvalue -1
  Mat g = exp_matrix(M_PI * rotation(3, 1, 2));
  try {
    log_principal(g);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::branch_cut);
  }
}

TEST(Liealg, RootSpaces) {
  auto r = root_space_decompose(unipotent(4));
  EXPECT_LE((r.minus - unipotent(4)).norm(), 1e-15);
  EXPECT_LE(r.plus.norm() + r.m.norm() + r.a.norm(), 1e-15);
  auto y = root_space_decompose(geodesic(4));
  EXPECT_LE((y.a - geodesic(4)).norm(), 1e-15);
  CounterRng rng(12, 0);
  for (int n = 2; n <= 6; ++n) {
    Mat x = random_algebra_element(n, rng);
    auto c = root_space_decompose(x);
    EXPECT_LE((c.minus + c.m + c.a + c.plus - x).norm(), 1e-12);
    Mat yn = geodesic(n);
    EXPECT_LE((bracket(yn, c.minus) + c.minus).norm(), 1e-12);
    EXPECT_LE((bracket(yn, c.plus) - c.plus).norm(), 1e-12);
    EXPECT_LE(bracket(yn, c.m).norm(), 1e-12);
    EXPECT_LE(bracket(yn, c.a).norm(), 1e-12);
  }
}

TEST(Liealg, WeightDecomposition) {
  auto w3 = sl2_weight_decompose(3);
  ASSERT_EQ(w3.strings.size(), 1u);
  EXPECT_EQ(w3.strings[0].highest_weight, 2);
  EXPECT_EQ(w3.strings[0].vectors.size(), 3u);
  auto w4 = sl2_weight_decompose(4);
  EXPECT_EQ(w4.vperp_basis.cols(), 7);
  // brute-force weight counts for n = 4: two strings of weight 2 and one of weight 0
  int dim = 0, twos = 0, zeros = 0;
  for (auto& s : w4.strings) {
    dim += static_cast<int>(s.vectors.size());
    if (s.highest_weight == 2) ++twos;
    if (s.highest_weight == 0) ++zeros;
  }
  EXPECT_EQ(dim, 7);
  EXPECT_EQ(twos, 2);
  EXPECT_EQ(zeros, 1);
  for (int n = 3; n <= 6; ++n) {
    auto w = sl2_weight_decompose(n);
    Mat U = unipotent(n), Y = geodesic(n);
    for (auto& s : w.strings) {
      const int hw = s.highest_weight;
      for (int i = 0; i <= hw; ++i) {
        const Mat& v = s.vectors[i];
        EXPECT_LE((bracket(Y, v) - 0.5 * (hw - 2 * i) * v).norm(), 1e-10);
        Mat up = bracket(U, v);
        if (i < hw)
          EXPECT_LE((up - (i + 1.0) * s.vectors[i + 1]).norm(), 1e-10);
        else
          EXPECT_LE(up.norm(), 1e-10);
        // Killing-orthogonal to the triple
        EXPECT_LE(std::abs(killing_form(v, U)) + std::abs(killing_form(v, Y)) + std::abs(killing_form(v, w.U_opp)),
                  1e-9);
      }
    }
  }
}

TEST(Liealg, AdjointFlowPolynomial) {
  auto w = sl2_weight_decompose(4);
  const double s = 1.7;
  for (auto& str : w.strings) {
    const int hw = str.highest_weight;
    std::vector<double> b(hw + 1);
    Mat v = Mat::Zero(5, 5);
    for (int i = 0; i <= hw; ++i) {
      b[i] = 0.3 + i;
      v += b[i] * str.vectors[i];
    }
    Mat expected = Mat::Zero(5, 5);
    for (int m = 0; m <= hw; ++m)
      for (int i = 0; i <= m; ++i) {
        double binom = (m == i || i == 0) ? 1.0 : static_cast<double>(m);
        expected += b[i] * binom * std::pow(s, m - i) * str.vectors[m];
      }
    Mat us = u_flow(4, s);
    Mat got = us * v * group_inverse(us);
    EXPECT_LE((got - expected).norm(), 1e-10);
    EXPECT_LE((ad_u_flow(v, s) - expected).norm(), 1e-10);
  }
}

TEST(Liealg, Centralizer) {
  EXPECT_EQ(centralizer_dim_bruteforce(3), 2);
  EXPECT_EQ(centralizer_dim_bruteforce(4), 4);
  for (int n = 2; n <= 6; ++n) {
    auto c = centralizer_basis(n);
    EXPECT_EQ(static_cast<int>(c.size()), centralizer_dim_bruteforce(n)) << n;
    Mat cols(algebra_dim(n), c.size());
    for (std::size_t i = 0; i < c.size(); ++i) {
      EXPECT_LE(bracket(c[i], unipotent(n)).norm(), 1e-12);
      cols.col(i) = coordinates(c[i]);
    }
    Eigen::FullPivLU<Mat> lu(cols);
    EXPECT_EQ(lu.rank(), static_cast<int>(c.size()));
  }
}

TEST(Liealg, Iwasawa) {
  auto id = iwasawa(Mat::Identity(4, 4));
  EXPECT_LE((id.k - Mat::Identity(4, 4)).norm(), 1e-14);
  EXPECT_NEAR(id.t, 0.0, 1e-14);
  EXPECT_LE((id.nu - Mat::Identity(4, 4)).norm(), 1e-14);
  auto a = iwasawa(exp_matrix(1.3 * geodesic(3)));
  EXPECT_NEAR(a.t, 1.3, 1e-12);
  EXPECT_LE((a.k - Mat::Identity(4, 4)).norm(), 1e-12);
  EXPECT_LE((a.nu - Mat::Identity(4, 4)).norm(), 1e-12);
  CounterRng rng(13, 0);
  for (int n = 2; n <= 6; ++n)
    for (int trial = 0; trial < 50; ++trial) {
      Mat g = random_group_element(n, rng, trial < 25 ? 0.7 : 3.0);
      auto r = iwasawa(g);
      EXPECT_LE(iwasawa_reconstruction_error(g, r), 1e-10) << "n=" << n << " |g|=" << g.norm();
      EXPECT_LE(group_defect(r.k), 1e-14 * r.condition);
      EXPECT_NEAR(r.k.determinant(), 1.0, 1e-14 * r.condition);
      EXPECT_LE((exp_matrix(r.w) - r.nu).norm(), 1e-12 * std::max(1.0, r.nu.norm()));
      EXPECT_LE(r.k.row(n).head(n).norm() + std::abs(r.k(n, n) - 1.0), 1e-12);
      auto rc = root_space_decompose(r.w);
      EXPECT_LE((rc.plus - r.w).norm(), 1e-9 * std::max(1.0, r.w.norm()));
    }
}

TEST(Liealg, IwasawaLargeElements) {
  // large group elements as met in shearing runs, |g| up to 1e6
  CounterRng rng(14, 0);
  for (int trial = 0; trial < 30; ++trial) {
    const double t = rng.uniform(0.0, 12.0);
    Mat g = random_group_element(3, rng, 0.5) * exp_matrix(t * geodesic(3)) * random_group_element(3, rng, 0.5);
    if (g.norm() > 1e6) continue;
    auto r = iwasawa(g);
    EXPECT_LE(iwasawa_reconstruction_error(g, r), 1e-10) << g.norm();
  }
}
