#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "statmap/grid.hpp"
#include "statmap/zoo.hpp"

using namespace statmap;

namespace {

GridPtr torus1(int n, double L = 2.0 * M_PI, double amp = 0.0) {
  auto m = std::make_shared<ChartManifold>(make_flat_torus({L}, amp));
  return build_grid(m, n);
}

GridPtr torus2(int n, double L = 2.0 * M_PI, double amp = 0.0) {
  auto m = std::make_shared<ChartManifold>(make_flat_torus({L, L}, amp));
  return build_grid(m, n);
}

Vec sample_1d(const DomainGrid& g, const std::function<double(double)>& f) {
  Vec v(g.num_nodes());
  for (int i = 0; i < g.num_nodes(); ++i) v[i] = f(g.node_coords(i, 0));
  return v;
}

}  // namespace

TEST(BuildGrid, FlatTorusWeights) {
  GridPtr g = torus1(64);
  ASSERT_EQ(g->num_nodes(), 64);
  for (int i = 0; i < 64; ++i) EXPECT_NEAR(g->weights[i], 2.0 * M_PI / 64.0, 1e-15);
  EXPECT_GT(g->weights.minCoeff(), 0.0);
}

TEST(BuildGrid, TwoTorusTotalWeight) {
  GridPtr g = torus2(32);
  EXPECT_NEAR(g->total_weight(), std::pow(2.0 * M_PI, 2), 1e-12);
}

TEST(BuildGrid, ConformalWeightMatchesRichardsonReference) {
  // Total mass of exp(2f) delta against a Richardson-extrapolated fine-grid
  // reference; the periodic trapezoid rule leaves this far inside the O(h^2)
  // budget.
  double w256 = torus1(256, 2.0 * M_PI, 0.1)->total_weight();
  double w512 = torus1(512, 2.0 * M_PI, 0.1)->total_weight();
  double reference = w512 + (w512 - w256) / 3.0;
  double h = 2.0 * M_PI / 64.0;
  EXPECT_LT(std::abs(torus1(64, 2.0 * M_PI, 0.1)->total_weight() - reference), h * h);
}

TEST(BuildGrid, RejectsBadResolutionAndDomain) {
  EXPECT_THROW(torus1(63), ConfigError);
  EXPECT_THROW(torus1(4), ConfigError);
  auto euclid = std::make_shared<ChartManifold>(make_euclidean(1));
  EXPECT_THROW(build_grid(euclid, 64), ConfigError);
}

TEST(Partial, ConstantFieldGivesZero) {
  GridPtr g = torus1(64);
  Vec f = Vec::Constant(64, 3.7);
  EXPECT_LT(partial(*g, f, 0).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Partial, SineDerivativeTaylorBound) {
  // Central differences of sin on n = 128: sup error is h^2/6 sup|f'''|
  // = (2 pi/128)^2 / 6 = 4.0153e-4 to leading order.
  GridPtr g = torus1(128);
  Vec f = sample_1d(*g, [](double x) { return std::sin(x); });
  Vec df = partial(*g, f, 0);
  double err = 0.0;
  for (int i = 0; i < g->num_nodes(); ++i)
    err = std::max(err, std::abs(df[i] - std::cos(g->node_coords(i, 0))));
  double bound = std::pow(2.0 * M_PI / 128.0, 2) / 6.0;
  EXPECT_LE(err, 1.01 * bound);
  EXPECT_GE(err, 0.5 * bound);  // genuinely second order, not spectral
}

TEST(Partial, RefinementReducesErrorAtSecondOrder) {
  auto sup_err = [](int n) {
    GridPtr g = torus1(n);
    Vec f = sample_1d(*g, [](double x) { return std::sin(2.0 * x) + 0.3 * std::cos(x); });
    Vec df = partial(*g, f, 0);
    double err = 0.0;
    for (int i = 0; i < g->num_nodes(); ++i) {
      double x = g->node_coords(i, 0);
      err = std::max(err, std::abs(df[i] - (2.0 * std::cos(2.0 * x) - 0.3 * std::sin(x))));
    }
    return err;
  };
  EXPECT_GE(sup_err(64) / sup_err(128), 3.6);
  EXPECT_GE(sup_err(128) / sup_err(256), 3.6);
}

TEST(Partial, AxisOutOfRange) {
  GridPtr g = torus1(16);
  Vec f = Vec::Zero(16);
  EXPECT_THROW(partial(*g, f, 1), ConfigError);
  EXPECT_THROW(partial(*g, f, -1), ConfigError);
}

TEST(Partial, SawtoothIsFlaggedNotSilentlyDifferentiated) {
  GridPtr g = torus1(64);
  Vec saw(64);
  for (int i = 0; i < 64; ++i) saw[i] = 0.1 * i;  // linear in index, wrap jump
  EXPECT_FALSE(field_is_wrap_smooth(*g, saw));
  Vec smooth = sample_1d(*g, [](double x) { return std::sin(x); });
  EXPECT_TRUE(field_is_wrap_smooth(*g, smooth));
  // The same sawtooth is smooth as a periodic coordinate with the right period.
  EXPECT_TRUE(field_is_wrap_smooth(*g, saw, 6.4));
}

TEST(Integrate, ConstantSineAndSineSquared) {
  GridPtr g = torus1(64);
  EXPECT_NEAR(integrate(*g, Vec::Ones(64)), 2.0 * M_PI, 1e-13);
  Vec s2 = sample_1d(*g, [](double x) { return std::sin(x) * std::sin(x); });
  EXPECT_NEAR(integrate(*g, s2), M_PI, 1e-12);
  Vec s = sample_1d(*g, [](double x) { return std::sin(x); });
  EXPECT_NEAR(integrate(*g, s), 0.0, 1e-13);
}

TEST(GridProperties, MixedPartialsCommute) {
  GridPtr g = torus2(48);
  Vec f(g->num_nodes());
  for (int i = 0; i < g->num_nodes(); ++i) {
    double x = g->node_coords(i, 0), y = g->node_coords(i, 1);
    f[i] = std::sin(x) * std::cos(2.0 * y) + 0.2 * std::cos(x + y);
  }
  Vec a = partial(*g, partial(*g, f, 0), 1);
  Vec b = partial(*g, partial(*g, f, 1), 0);
  EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(GridProperties, DiscreteDivergenceTheorem) {
  GridPtr g = torus1(64);
  auto rng = make_rng(2024);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vec f(64);
  for (int i = 0; i < 64; ++i) f[i] = gauss(rng);
  EXPECT_LT(std::abs(integrate(*g, partial(*g, f, 0))), 1e-10);
  GridPtr g2 = torus2(24);
  Vec f2(g2->num_nodes());
  for (int i = 0; i < g2->num_nodes(); ++i) f2[i] = gauss(rng);
  EXPECT_LT(std::abs(integrate(*g2, partial(*g2, f2, 1))), 1e-10);
}

TEST(MapField, ValidityCheckNamesNode) {
  GridPtr g = torus1(16);
  auto normal = std::make_shared<ChartManifold>(make_normal_family(0.0));
  Mat vals = Mat::Zero(16, 2);
  for (int i = 0; i < 16; ++i) vals(i, 1) = 1.0;
  vals(7, 1) = -0.2;  // sigma must stay positive
  try {
    MapField u(g, normal, vals);
    FAIL() << "expected DomainViolation";
  } catch (const DomainViolation& e) {
    EXPECT_NE(std::string(e.what()).find("node 7"), std::string::npos);
  }
}

TEST(MapField, PeriodicTargetMinimalImage) {
  // Identity map on the torus: chords and central derivatives must be
  // exactly 1 across the wrap.
  auto m = std::make_shared<ChartManifold>(make_flat_torus({2.0 * M_PI}));
  GridPtr g = build_grid(m, 32);
  MapField u(g, m, g->node_coords);
  for (int i = 0; i < 32; ++i) {
    EXPECT_NEAR(u.chord(0, i)[0], 1.0, 1e-13) << i;
    EXPECT_NEAR(u.central_derivative(0, i)[0], 1.0, 1e-13) << i;
  }
}

TEST(MapField, CsvRoundTrip) {
  GridPtr g = torus1(16);
  auto target = std::make_shared<ChartManifold>(make_euclidean(2));
  auto rng = make_rng(5);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Mat vals(16, 2);
  for (int i = 0; i < 16; ++i)
    for (int c = 0; c < 2; ++c) vals(i, c) = gauss(rng);
  MapField u(g, target, vals);
  std::string path = (std::filesystem::temp_directory_path() / "statmap_map.csv").string();
  write_map_csv(u, path);
  MapField v = read_map_csv(g, target, path);
  EXPECT_EQ((u.values - v.values).cwiseAbs().maxCoeff(), 0.0);
  std::remove(path.c_str());
}

TEST(TraceKDivergence, LeviCivitaIsZero) {
  GridPtr g = torus1(32);
  EXPECT_LT(trace_K_divergence(*g).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(TraceKDivergence, ConstantConnectionIsZero) {
  auto m = std::make_shared<ChartManifold>(
      make_flat_torus({2.0 * M_PI}, 0.0, "constant", 0.4));
  GridPtr g = build_grid(m, 32);
  EXPECT_LT(trace_K_divergence(*g).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(TraceKDivergence, PerturbedConnectionMatchesAnalyticDivergence) {
  // On the flat 1-torus with Gamma = eps cos(x), tr_g K = eps cos(x) and
  // div = -eps sin(x); a direct stencil oracle at second order.
  const double eps = 0.25;
  auto field_err = [&](int n) {
    auto m = std::make_shared<ChartManifold>(
        make_flat_torus({2.0 * M_PI}, 0.0, "cubic_potential", eps));
    GridPtr g = build_grid(m, n);
    Vec div = trace_K_divergence(*g);
    double err = 0.0;
    for (int i = 0; i < n; ++i) {
      double x = g->node_coords(i, 0);
      err = std::max(err, std::abs(div[i] + eps * std::sin(x)));
    }
    return err;
  };
  double e64 = field_err(64), e128 = field_err(128);
  double bound64 = eps * std::pow(2.0 * M_PI / 64.0, 2) / 6.0;
  EXPECT_LE(e64, 1.05 * bound64);
  EXPECT_GE(e64 / e128, 3.6);
}
