#pragma once

#include <algorithm>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "statmap/core.hpp"

namespace statmap {

// ---------------------------------------------------------------------------
// A single coordinate chart of a statistical manifold. One chart per
// manifold: no atlases, no transitions. Periodic coordinates (torus angles,
// the azimuth of the spherical chart) carry their period so map derivatives
// can take minimal-image differences across the wrap.
// ---------------------------------------------------------------------------

struct CoordSpec {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  double period = 0.0;  // 0 = aperiodic
};

/// Metric tensor field g_ij on a chart. d1(p)(k,i,j) = d_k g_ij and
/// d2(p)(l,k,i,j) = d_l d_k g_ij are optional analytic derivatives; callers
/// fall back to central differences when absent.
struct MetricField {
  std::function<Mat(const Vec&)> value;
  std::function<Tensor3(const Vec&)> d1;
  std::function<Tensor4(const Vec&)> d2;
  std::function<Mat(const Vec&)> inverse;  // optional analytic inverse
};

/// Affine connection field. christoffel(p)(k,i,j) = Gamma^k_ij, symmetric in
/// (i,j) by construction. d1(p)(l,k,i,j) = d_l Gamma^k_ij when analytic.
struct ConnectionField {
  std::function<Tensor3(const Vec&)> christoffel;
  std::function<Tensor4(const Vec&)> d1;
};

enum class CurvatureSource { kConnection, kLeviCivita };

class ChartManifold {
 public:
  int dim = 0;
  std::string name;
  std::vector<CoordSpec> coords;
  MetricField metric;
  ConnectionField connection;
  CurvatureSource curvature_source = CurvatureSource::kConnection;

  // Charts whose validity region is not a box (the open simplex) add a
  // predicate and their own distance-to-boundary estimate.
  std::function<bool(const Vec&)> extra_validity;
  std::function<double(const Vec&)> extra_boundary_distance;

  // Compact box used when sampling random points for certificates and
  // property checks; always well inside the validity region.
  Vec sample_lo, sample_hi;

  // Cubic (Amari-Chentsov style) tensor T_ijk with lowered indices, when the
  // family has one in closed form; used only for cross-checks.
  std::function<Tensor3(const Vec&)> cubic_tensor;

  bool contains(const Vec& p) const {
    if (p.size() != dim) return false;
    for (int a = 0; a < dim; ++a) {
      const CoordSpec& c = coords[a];
      if (c.period > 0.0) continue;  // periodic coordinate: whole line
      if (!(p[a] > c.lo && p[a] < c.hi)) return false;
    }
    if (extra_validity && !extra_validity(p)) return false;
    return true;
  }

  /// Distance from p to the chart boundary along coordinate directions
  /// (infinite for unconstrained charts).
  double boundary_distance(const Vec& p) const {
    double dist = std::numeric_limits<double>::infinity();
    for (int a = 0; a < dim; ++a) {
      const CoordSpec& c = coords[a];
      if (c.period > 0.0) continue;
      if (std::isfinite(c.lo)) dist = std::min(dist, p[a] - c.lo);
      if (std::isfinite(c.hi)) dist = std::min(dist, c.hi - p[a]);
    }
    if (extra_boundary_distance) dist = std::min(dist, extra_boundary_distance(p));
    return dist;
  }

  void validate_point(const Vec& p, const std::string& context) const {
    if (p.size() != dim)
      throw DomainViolation(context + ": point dimension " + std::to_string(p.size()) +
                            " != chart dimension " + std::to_string(dim) + " on " + name);
    if (!contains(p))
      throw DomainViolation(context + ": point outside validity region of " + name);
  }

  /// Step used by centered finite-difference stencils at p: 1e-5 times the
  /// local box extent. Points closer than twice this to the boundary are
  /// rejected rather than differenced one-sidedly.
  double fd_step(const Vec& p) const {
    double extent = std::numeric_limits<double>::infinity();
    for (int a = 0; a < dim; ++a) {
      const CoordSpec& c = coords[a];
      if (c.period > 0.0) {
        extent = std::min(extent, c.period);
      } else if (std::isfinite(c.lo) && std::isfinite(c.hi)) {
        extent = std::min(extent, c.hi - c.lo);
      } else {
        extent = std::min(extent, std::max(1.0, std::abs(p[a])));
      }
    }
    double h = 1e-5 * extent;
    if (boundary_distance(p) < 2.0 * h)
      throw DomainViolation("finite-difference stencil leaves validity region of " + name);
    return h;
  }

  /// Metric value with the structural checks the spec requires: symmetry to
  /// 1e-12 relative and positive definiteness. Degenerate metrics abort.
  Mat metric_value(const Vec& p) const {
    Mat g = metric.value(p);
    double scale = std::max(1.0, g.cwiseAbs().maxCoeff());
    if ((g - g.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
      throw StructuralError("metric not symmetric on " + name);
    Eigen::LLT<Mat> llt(g);
    if (llt.info() != Eigen::Success)
      throw StructuralError("metric not positive definite on " + name);
    return g;
  }

  Mat metric_inverse(const Vec& p) const {
    if (metric.inverse) return metric.inverse(p);
    Mat g = metric_value(p);
    return g.inverse();
  }

  Tensor3 christoffel(const Vec& p) const { return connection.christoffel(p); }

  /// Draw a uniform point from the sampling box (plus rejection against any
  /// extra validity predicate).
  Vec sample_point(std::mt19937_64& rng) const {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int attempt = 0; attempt < 1000; ++attempt) {
      Vec p(dim);
      for (int a = 0; a < dim; ++a) p[a] = sample_lo[a] + u(rng) * (sample_hi[a] - sample_lo[a]);
      if (contains(p)) return p;
    }
    throw NumericError("could not sample a valid point on " + name);
  }

  std::vector<Vec> quasirandom_sample(int count) const {
    std::vector<Vec> unit = quasirandom_points(dim, count);
    std::vector<Vec> out;
    out.reserve(count);
    for (const Vec& q : unit) {
      Vec p(dim);
      for (int a = 0; a < dim; ++a) p[a] = sample_lo[a] + q[a] * (sample_hi[a] - sample_lo[a]);
      if (contains(p)) out.push_back(p);
    }
    return out;
  }
};

using ManifoldPtr = std::shared_ptr<const ChartManifold>;

}  // namespace statmap
