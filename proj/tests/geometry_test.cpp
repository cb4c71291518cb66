#include <gtest/gtest.h>

#include <cmath>

#include "statmap/geometry_ops.hpp"
#include "statmap/zoo.hpp"
#include "support/oracles.hpp"

using namespace statmap;

namespace {

Vec pt(double a, double b) {
  Vec p(2);
  p << a, b;
  return p;
}

}  // namespace

TEST(LeviCivita, EuclideanVanishes) {
  ChartManifold m = make_euclidean(3);
  Tensor3 g = levi_civita(m, Vec::Zero(3));
  EXPECT_LT(g.max_abs(), 1e-14);
}

TEST(LeviCivita, FisherNormalClosedForm) {
  // Hand computation from g = diag(1/s^2, 2/s^2) at (mu, sigma) = (0, 1):
  // Gamma^sigma_mumu = 1/2, Gamma^mu_musigma = -1, Gamma^sigma_sigmasigma = -1.
  ChartManifold m = make_normal_family(0.0);
  Tensor3 g = levi_civita(m, pt(0.0, 1.0));
  EXPECT_NEAR(g(1, 0, 0), 0.5, 1e-12);
  EXPECT_NEAR(g(0, 0, 1), -1.0, 1e-12);
  EXPECT_NEAR(g(0, 1, 0), -1.0, 1e-12);
  EXPECT_NEAR(g(1, 1, 1), -1.0, 1e-12);
  EXPECT_NEAR(g(0, 0, 0), 0.0, 1e-12);
  EXPECT_NEAR(g(1, 0, 1), 0.0, 1e-12);
}

TEST(LeviCivita, FiniteDifferenceFallbackAgrees) {
  // Same metric with the analytic derivatives stripped: the centered-stencil
  // path must reproduce the closed form.
  ChartManifold analytic = make_normal_family(0.0);
  ChartManifold fd = analytic;
  fd.metric.d1 = nullptr;
  fd.metric.d2 = nullptr;
  for (const Vec& p : analytic.quasirandom_sample(20)) {
    Tensor3 a = levi_civita(analytic, p);
    Tensor3 b = levi_civita(fd, p);
    EXPECT_LT((a - b).max_abs(), 1e-6);
  }
}

TEST(LeviCivita, SphereEquator) {
  ChartManifold m = make_sphere(1.0);
  Tensor3 g = levi_civita(m, pt(0.5 * M_PI, 0.3));
  EXPECT_NEAR(g(0, 1, 1), 0.0, 1e-12);  // -sin(t)cos(t) at the equator
  EXPECT_NEAR(g(1, 0, 1), 0.0, 1e-12);  // cot(t) at the equator
  Tensor3 g2 = levi_civita(m, pt(1.0, 0.3));
  EXPECT_NEAR(g2(0, 1, 1), -std::sin(1.0) * std::cos(1.0), 1e-12);
  EXPECT_NEAR(g2(1, 0, 1), std::cos(1.0) / std::sin(1.0), 1e-12);
}

TEST(LeviCivita, StencilRejectedNearBoundary) {
  ChartManifold fd = make_normal_family(0.0);
  fd.metric.d1 = nullptr;
  fd.metric.d2 = nullptr;
  EXPECT_THROW(levi_civita(fd, pt(0.0, 1e-12)), DomainViolation);
}

TEST(FisherMetric, MatchesScoreCovarianceQuadrature) {
  ChartManifold m = make_normal_family(0.0);
  for (double sigma : {0.6, 1.0, 1.7}) {
    Mat oracle = oracles::fisher_info_normal_quadrature(0.3, sigma);
    Mat g = m.metric_value(pt(0.3, sigma));
    EXPECT_LT((oracle - g).cwiseAbs().maxCoeff(), 1e-9) << "sigma=" << sigma;
  }
}

TEST(DifferenceTensor, VanishesForLeviCivitaConnections) {
  for (ChartManifold m : {make_normal_family(0.0), make_sphere(1.0), make_euclidean(2)}) {
    for (const Vec& p : m.quasirandom_sample(10))
      EXPECT_LT(difference_tensor(m, p).max_abs(), 1e-12) << m.name;
  }
}

TEST(DifferenceTensor, MatchesCubicFormContraction) {
  // K^(alpha)k_ij = -alpha/2 g^{kl} T_ijl.
  for (double alpha : {1.0, 0.7, -0.4}) {
    ChartManifold m = make_normal_family(alpha);
    for (const Vec& p : m.quasirandom_sample(10)) {
      Tensor3 K = difference_tensor(m, p);
      Tensor3 T = m.cubic_tensor(p);
      Mat gi = m.metric_inverse(p);
      for (int k = 0; k < 2; ++k)
        for (int i = 0; i < 2; ++i)
          for (int j = 0; j < 2; ++j) {
            double expect = 0.0;
            for (int l = 0; l < 2; ++l) expect += -0.5 * alpha * gi(k, l) * T(i, j, l);
            EXPECT_NEAR(K(k, i, j), expect, 1e-11);
          }
    }
  }
}

TEST(DifferenceTensor, AlphaDuality) {
  ChartManifold mp = make_normal_family(0.8);
  ChartManifold mm = make_normal_family(-0.8);
  for (const Vec& p : mp.quasirandom_sample(10)) {
    Tensor3 kp = difference_tensor(mp, p);
    Tensor3 km = difference_tensor(mm, p);
    EXPECT_LT((kp + km).max_abs(), 1e-11);
  }
}

TEST(DualConnection, LeviCivitaSelfDual) {
  ChartManifold m = make_normal_family(0.0);
  for (const Vec& p : m.quasirandom_sample(10)) {
    Tensor3 dual = dual_connection(m, p);
    EXPECT_LT((dual - m.christoffel(p)).max_abs(), 1e-11);
  }
}

TEST(DualConnection, AlphaGoesToMinusAlpha) {
  ChartManifold mp = make_normal_family(1.0);
  ChartManifold mm = make_normal_family(-1.0);
  for (const Vec& p : mp.quasirandom_sample(20)) {
    Tensor3 dual = dual_connection(mp, p);
    EXPECT_LT((dual - mm.christoffel(p)).max_abs(), 1e-10);
  }
  ChartManifold sp = make_simplex(0.5, 2);
  ChartManifold sm = make_simplex(-0.5, 2);
  for (const Vec& p : sp.quasirandom_sample(20)) {
    Tensor3 dual = dual_connection(sp, p);
    EXPECT_LT((dual - sm.christoffel(p)).max_abs(), 1e-10);
  }
}

TEST(DualConnection, DualityPairingResidual) {
  // d_i g_jk = Gamma^l_ij g_lk + g_jl Gamma*^l_ik at 100 random points.
  for (ChartManifold m : {make_normal_family(1.0), make_simplex(0.3, 2)}) {
    auto rng = make_rng(7);
    for (int s = 0; s < 100; ++s) {
      Vec p = m.sample_point(rng);
      Tensor3 dg = metric_d1(m, p);
      Tensor3 gamma = m.christoffel(p);
      Tensor3 dual = dual_connection(m, p);
      Mat g = m.metric_value(p);
      for (int i = 0; i < m.dim; ++i)
        for (int j = 0; j < m.dim; ++j)
          for (int k = 0; k < m.dim; ++k) {
            double rhs = 0.0;
            for (int l = 0; l < m.dim; ++l)
              rhs += gamma(l, i, j) * g(l, k) + g(j, l) * dual(l, i, k);
            EXPECT_NEAR(dg(i, j, k), rhs, 1e-8) << m.name;
          }
    }
  }
}

TEST(DualConnection, InvolutionReturnsOriginal) {
  ChartManifold m = make_normal_family(0.65);
  ChartManifold dual_m = m;
  auto base = std::make_shared<ChartManifold>(m);
  dual_m.connection.christoffel = [base](const Vec& p) { return dual_connection(*base, p); };
  dual_m.connection.d1 = nullptr;
  for (const Vec& p : m.quasirandom_sample(15)) {
    Tensor3 twice = dual_connection(dual_m, p);
    EXPECT_LT((twice - m.christoffel(p)).max_abs(), 1e-10);
  }
}

TEST(Curvature, EuclideanZero) {
  ChartManifold m = make_euclidean(2);
  EXPECT_LT(curvature(m, pt(0.4, -1.0)).max_abs(), 1e-12);
}

TEST(Curvature, NormalFamilyDuallyFlat) {
  // e- and m-connections of an exponential family are flat.
  for (double alpha : {1.0, -1.0}) {
    ChartManifold m = make_normal_family(alpha);
    auto rng = make_rng(11);
    for (int s = 0; s < 100; ++s) {
      Vec p = m.sample_point(rng);
      EXPECT_LT(curvature(m, p).max_abs(), 1e-8) << "alpha=" << alpha;
    }
  }
}

TEST(Curvature, NormalFamilyFisherSectional) {
  // Fisher metric of N(mu, sigma^2) has constant sectional curvature -1/2.
  ChartManifold m = make_normal_family(0.0);
  auto rng = make_rng(3);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int s = 0; s < 40; ++s) {
    Vec p = m.sample_point(rng);
    Vec U(2), V(2);
    for (int a = 0; a < 2; ++a) {
      U[a] = gauss(rng);
      V[a] = gauss(rng);
    }
    EXPECT_NEAR(sectional_curvature(m, p, U, V), -0.5, 1e-6);
  }
}

TEST(Curvature, SimplexFisherSectional) {
  // The Fisher 2-simplex is isometric to an octant of the radius-2 sphere:
  // sectional curvature +1/4.
  ChartManifold m = make_simplex(0.0, 2);
  auto rng = make_rng(5);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int s = 0; s < 40; ++s) {
    Vec p = m.sample_point(rng);
    Vec U(2), V(2);
    for (int a = 0; a < 2; ++a) {
      U[a] = gauss(rng);
      V[a] = gauss(rng);
    }
    EXPECT_NEAR(sectional_curvature(m, p, U, V), 0.25, 1e-6);
  }
}

TEST(Curvature, SphereUnitSectional) {
  ChartManifold m = make_sphere(1.0);
  auto rng = make_rng(9);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int s = 0; s < 20; ++s) {
    Vec p = m.sample_point(rng);
    Vec U(2), V(2);
    for (int a = 0; a < 2; ++a) {
      U[a] = gauss(rng);
      V[a] = gauss(rng);
    }
    EXPECT_NEAR(sectional_curvature(m, p, U, V), 1.0, 1e-6);
  }
}

TEST(Curvature, AntisymmetryInFirstSlots) {
  for (ChartManifold m :
       {make_normal_family(0.6), make_simplex(0.4, 2), make_sphere(2.0)}) {
    for (const Vec& p : m.quasirandom_sample(10)) {
      Tensor4 R = curvature(m, p);
      for (int l = 0; l < m.dim; ++l)
        for (int i = 0; i < m.dim; ++i)
          for (int j = 0; j < m.dim; ++j)
            for (int k = 0; k < m.dim; ++k)
              EXPECT_NEAR(R(l, i, j, k), -R(l, j, i, k), 1e-9) << m.name;
    }
  }
}

TEST(Curvature, PairSymmetryInMetricCase) {
  // h(R(X,Y)Z,W) = h(R(Z,W)X,Y) for the Levi-Civita connection.
  ChartManifold m = make_normal_family(0.0);
  for (const Vec& p : m.quasirandom_sample(10)) {
    Tensor4 R = curvature(m, p);
    Mat h = m.metric_value(p);
    Tensor4 Rl(2);
    for (int l = 0; l < 2; ++l)
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
          for (int k = 0; k < 2; ++k) {
            double s = 0.0;
            for (int mm = 0; mm < 2; ++mm) s += h(l, mm) * R(mm, i, j, k);
            Rl(l, i, j, k) = s;  // R_{l; i j k} = h(R(e_i,e_j)e_k, e_l)
          }
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        for (int k = 0; k < 2; ++k)
          for (int l = 0; l < 2; ++l)
            EXPECT_NEAR(Rl(l, i, j, k), Rl(j, k, l, i), 1e-8);
  }
}

TEST(Curvature, AlphaMirrorNormEquality) {
  // Dual connections have equal invariant curvature norms pointwise.
  for (double alpha : {0.5, 0.9}) {
    ChartManifold mp = make_normal_family(alpha);
    ChartManifold mm = make_normal_family(-alpha);
    for (const Vec& p : mp.quasirandom_sample(10)) {
      double np = curvature_invariant_norm(mp, p);
      double nm = curvature_invariant_norm(mm, p);
      EXPECT_NEAR(np, nm, 1e-8 * std::max(1.0, np));
    }
  }
}

TEST(Curvature, SourceSwitchExposesBothReadings) {
  // With curvature_source = levi_civita the (flat) e-connection manifold
  // reports the Fisher metric curvature instead.
  ManifoldSpec spec;
  spec.type = "normal_family";
  spec.alpha = 1.0;
  ChartManifold conn = make_manifold(spec);
  spec.curvature_source = "levi_civita";
  ChartManifold lc = make_manifold(spec);
  ChartManifold fisher = make_normal_family(0.0);
  Vec p = pt(0.2, 1.3);
  EXPECT_LT(curvature(conn, p).max_abs(), 1e-10);
  EXPECT_GT(curvature(lc, p).max_abs(), 0.1);
  EXPECT_LT((curvature(lc, p) - curvature(fisher, p)).max_abs(), 1e-10);
}

TEST(Codazzi, HoldsAcrossTheZoo) {
  std::vector<ChartManifold> zoo = {
      make_euclidean(2),
      make_flat_torus({2.0 * M_PI}),
      make_flat_torus({2.0 * M_PI, 2.0 * M_PI}, 0.1),
      make_flat_torus({2.0 * M_PI}, 0.0, "constant", 0.3),
      make_flat_torus({2.0 * M_PI}, 0.0, "cubic_potential", 0.2),
      make_sphere(1.0),
      make_normal_family(0.0),
      make_normal_family(1.0),
      make_normal_family(-0.7),
      make_simplex(0.5, 2),
  };
  for (const ChartManifold& m : zoo) {
    for (const Vec& p : m.quasirandom_sample(100))
      EXPECT_LT(codazzi_residual(m, p), 1e-8) << m.name;
  }
}

TEST(Certificate, NegativelyCurvedNormalFamily) {
  ChartManifold m = make_normal_family(0.0);
  NonpositivityVerdict v = nonpositivity_certificate(m, 2000, 42);
  EXPECT_TRUE(v.nonpositive);
  EXPECT_LE(v.max_normalized, 1e-10);
  EXPECT_GT(v.max_normalized, -0.5);  // normalized values live in [-1/2, 0)
  EXPECT_TRUE(v.positive_witnesses.empty());
}

TEST(Certificate, SphereReportsPositiveWitnesses) {
  ChartManifold m = make_sphere(1.0);
  NonpositivityVerdict v = nonpositivity_certificate(m, 500, 42);
  EXPECT_FALSE(v.nonpositive);
  EXPECT_GT(v.max_normalized, 0.1);
  EXPECT_FALSE(v.positive_witnesses.empty());
}

TEST(Certificate, FlatSpaceIsBorderline) {
  ChartManifold m = make_euclidean(3);
  NonpositivityVerdict v = nonpositivity_certificate(m, 300, 42);
  EXPECT_TRUE(v.nonpositive);
  EXPECT_NEAR(v.max_normalized, 0.0, 1e-12);
}

TEST(MakeManifold, DescriptorsAndErrors) {
  ManifoldSpec spec;
  spec.type = "euclidean";
  spec.dim = 2;
  ChartManifold e = make_manifold(spec);
  EXPECT_EQ(e.dim, 2);
  EXPECT_LT((e.metric_value(Vec::Zero(2)) - Mat::Identity(2, 2)).norm(), 1e-14);

  spec.type = "warped_product";
  EXPECT_THROW(make_manifold(spec), ConfigError);

  ManifoldSpec bad_sphere;
  bad_sphere.type = "sphere";
  bad_sphere.radius = -1.0;
  EXPECT_THROW(make_manifold(bad_sphere), ConfigError);

  ManifoldSpec bad_torus;
  bad_torus.type = "flat_torus";
  bad_torus.lengths = {0.0};
  EXPECT_THROW(make_manifold(bad_torus), ConfigError);
}

TEST(MakeManifold, NormalFamilyIsFisherWithLeviCivita) {
  ManifoldSpec spec;
  spec.type = "normal_family";
  spec.alpha = 0.0;
  ChartManifold m = make_manifold(spec);
  Vec p = pt(0.0, 2.0);
  Mat g = m.metric_value(p);
  EXPECT_NEAR(g(0, 0), 0.25, 1e-14);
  EXPECT_NEAR(g(1, 1), 0.5, 1e-14);
  EXPECT_NEAR(g(0, 1), 0.0, 1e-14);
  EXPECT_LT(difference_tensor(m, p).max_abs(), 1e-13);
}

TEST(Metric, DegenerateMetricAborts) {
  ChartManifold m = make_euclidean(2);
  m.metric.value = [](const Vec& p) {
    Mat g(2, 2);
    g << 1.0, 0.0, 0.0, -0.5 + 0.0 * p[0];
    return g;
  };
  m.metric.inverse = nullptr;
  m.metric.d1 = nullptr;
  m.metric.d2 = nullptr;
  EXPECT_THROW(m.metric_value(Vec::Zero(2)), StructuralError);
}

TEST(Metric, AsymmetricMetricAborts) {
  ChartManifold m = make_euclidean(2);
  m.metric.value = [](const Vec&) {
    Mat g(2, 2);
    g << 1.0, 0.1, 0.0, 1.0;
    return g;
  };
  EXPECT_THROW(m.metric_value(Vec::Zero(2)), StructuralError);
}
