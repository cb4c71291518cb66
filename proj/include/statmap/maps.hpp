#pragma once

#include <cmath>
#include <vector>

#include "statmap/grid.hpp"
#include "statmap/zoo.hpp"

namespace statmap {

// ---------------------------------------------------------------------------
// Canonical map constructors used by scenarios and tests.
// ---------------------------------------------------------------------------

/// A canonical interior point of a zoo chart (used for default constant maps).
inline Vec default_chart_point(const ChartManifold& m) {
  Vec p(m.dim);
  for (int a = 0; a < m.dim; ++a) {
    const CoordSpec& c = m.coords[a];
    if (c.period > 0.0)
      p[a] = 0.5 * c.period;
    else if (std::isfinite(c.lo) && std::isfinite(c.hi))
      p[a] = 0.5 * (c.lo + c.hi);
    else if (std::isfinite(c.lo))
      p[a] = c.lo + 1.0;
    else if (std::isfinite(c.hi))
      p[a] = c.hi - 1.0;
    else
      p[a] = 0.0;
  }
  if (m.extra_validity && !m.extra_validity(p)) {
    // Open simplex: the barycenter.
    p.setConstant(1.0 / (m.dim + 1));
  }
  return p;
}

inline MapField make_constant_map(GridPtr grid, ManifoldPtr target, const Vec& point) {
  Mat vals(grid->num_nodes(), target->dim);
  for (int i = 0; i < grid->num_nodes(); ++i) vals.row(i) = point.transpose();
  return MapField(std::move(grid), std::move(target), std::move(vals));
}

/// Identity chart map of the grid's own domain manifold.
inline MapField make_identity_map(GridPtr grid) {
  Mat vals = grid->node_coords;
  ManifoldPtr domain = grid->domain;
  return MapField(std::move(grid), domain, std::move(vals));
}

/// x -> center + radius (cos(k w x + phase), sin(k w x + phase)) into any
/// two-dimensional chart; w = 2 pi / L. Requires a one-dimensional grid.
inline MapField make_circle_map(GridPtr grid, ManifoldPtr target, int k, const Vec& center,
                                double radius, double phase = 0.0) {
  if (grid->dims != 1) throw ConfigError("circle maps need a one-dimensional domain");
  if (target->dim != 2) throw ConfigError("circle maps need a two-dimensional target");
  const double w = 2.0 * M_PI / grid->lengths[0];
  Mat vals(grid->num_nodes(), 2);
  for (int i = 0; i < grid->num_nodes(); ++i) {
    double ang = k * w * grid->node_coords(i, 0) + phase;
    vals(i, 0) = center[0] + radius * std::cos(ang);
    vals(i, 1) = center[1] + radius * std::sin(ang);
  }
  return MapField(std::move(grid), std::move(target), std::move(vals));
}

/// Equatorial great circle of winding k in the spherical chart.
inline MapField make_great_circle_map(GridPtr grid, ManifoldPtr sphere, int k = 1) {
  if (grid->dims != 1) throw ConfigError("great-circle maps need a one-dimensional domain");
  const double w = 2.0 * M_PI / grid->lengths[0];
  Mat vals(grid->num_nodes(), 2);
  for (int i = 0; i < grid->num_nodes(); ++i) {
    vals(i, 0) = 0.5 * M_PI;
    vals(i, 1) = k * w * grid->node_coords(i, 0);
  }
  return MapField(std::move(grid), std::move(sphere), std::move(vals));
}

/// Great circle tilted by angle beta out of the equatorial plane, expressed
/// in the spherical chart. Unit speed for a length-2pi domain; exercises the
/// nontrivial chart representation (theta varies, phi winds).
inline MapField make_tilted_great_circle_map(GridPtr grid, ManifoldPtr sphere, double beta) {
  if (grid->dims != 1) throw ConfigError("great-circle maps need a one-dimensional domain");
  const double w = 2.0 * M_PI / grid->lengths[0];
  Mat vals(grid->num_nodes(), 2);
  for (int i = 0; i < grid->num_nodes(); ++i) {
    double s = w * grid->node_coords(i, 0);
    // Point cos(s) e1 + sin(s)(cos(beta) e2 + sin(beta) e3).
    double z = std::sin(beta) * std::sin(s);
    vals(i, 0) = std::acos(z);
    vals(i, 1) = std::atan2(std::cos(beta) * std::sin(s), std::cos(s));
  }
  return MapField(std::move(grid), std::move(sphere), std::move(vals));
}

struct FourierMode {
  std::vector<int> k;       // one entry per domain axis
  std::vector<double> cos_amp;  // one entry per target coordinate
  std::vector<double> sin_amp;
};

inline MapField make_fourier_map(GridPtr grid, ManifoldPtr target, const Vec& base,
                                 const std::vector<FourierMode>& modes) {
  const int d = target->dim;
  Mat vals(grid->num_nodes(), d);
  for (int i = 0; i < grid->num_nodes(); ++i) vals.row(i) = base.transpose();
  for (const FourierMode& mode : modes) {
    if (static_cast<int>(mode.k.size()) != grid->dims)
      throw ConfigError("fourier mode arity does not match the domain dimension");
    if (static_cast<int>(mode.cos_amp.size()) != d ||
        static_cast<int>(mode.sin_amp.size()) != d)
      throw ConfigError("fourier amplitudes must have one entry per target coordinate");
    for (int i = 0; i < grid->num_nodes(); ++i) {
      double phase = 0.0;
      for (int a = 0; a < grid->dims; ++a)
        phase += 2.0 * M_PI * mode.k[a] * grid->node_coords(i, a) / grid->lengths[a];
      for (int c = 0; c < d; ++c)
        vals(i, c) += mode.cos_amp[c] * std::cos(phase) + mode.sin_amp[c] * std::sin(phase);
    }
  }
  return MapField(std::move(grid), std::move(target), std::move(vals));
}

}  // namespace statmap
