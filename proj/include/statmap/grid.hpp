#pragma once

#include <algorithm>
#include <fstream>
#include <memory>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "statmap/chart.hpp"
#include "statmap/geometry_ops.hpp"

namespace statmap {

// ---------------------------------------------------------------------------
// Periodic finite-difference grid over a flat-torus chart of the domain.
// Geometry samples are precomputed at nodes (for quadrature and pointwise
// operators) and at edge midpoints (for the staggered Dirichlet forms that
// the variational module builds on).
// ---------------------------------------------------------------------------

class DomainGrid {
 public:
  ManifoldPtr domain;
  int dims = 0;           // m in {1, 2}
  int n = 0;              // nodes per axis
  std::vector<double> lengths;
  std::vector<double> h;  // chart step per axis
  double cell_volume = 0.0;

  Mat node_coords;                 // N x m
  std::vector<Mat> node_ginv;      // inverse metric per node
  std::vector<Tensor3> node_gamma; // domain Christoffels per node
  Vec node_sqrtg;
  Vec weights;                     // cell_volume * sqrt(det g)

  // Per axis a: edge e starts at node idx and ends at neighbor(idx, a, +1).
  // edge_sw[a][idx] = cell_volume * sqrt(det g) * g^{aa}, all at the midpoint.
  std::vector<Vec> edge_sw;

  int num_nodes() const { return static_cast<int>(node_coords.rows()); }

  int index(int i0, int i1 = 0) const { return dims == 1 ? i0 : i0 * n + i1; }

  int neighbor(int idx, int axis, int step) const {
    if (axis < 0 || axis >= dims) throw ConfigError("axis out of range");
    if (dims == 1) {
      int i = (idx + step) % n;
      return i < 0 ? i + n : i;
    }
    int i0 = idx / n, i1 = idx % n;
    if (axis == 0) {
      i0 = (i0 + step) % n;
      if (i0 < 0) i0 += n;
    } else {
      i1 = (i1 + step) % n;
      if (i1 < 0) i1 += n;
    }
    return i0 * n + i1;
  }

  double total_weight() const { return weights.sum(); }
};

using GridPtr = std::shared_ptr<const DomainGrid>;

/// Build a grid over a periodic (flat-torus chart) domain manifold. Lengths
/// come from the chart periods. The domain metric may vary over the chart
/// (conformal option) but must be diagonal.
inline GridPtr build_grid(ManifoldPtr domain, int n) {
  if (n < 8 || n % 2 != 0)
    throw ConfigError("grid resolution must be even and at least 8, got " + std::to_string(n));
  const int m = domain->dim;
  if (m < 1 || m > 2) throw ConfigError("grid domains must have dimension 1 or 2");
  for (const CoordSpec& c : domain->coords)
    if (c.period <= 0.0)
      throw ConfigError("grid domain must be a periodic (flat-torus) chart");

  auto g = std::make_shared<DomainGrid>();
  g->domain = domain;
  g->dims = m;
  g->n = n;
  for (const CoordSpec& c : domain->coords) g->lengths.push_back(c.period);
  g->h.resize(m);
  g->cell_volume = 1.0;
  for (int a = 0; a < m; ++a) {
    g->h[a] = g->lengths[a] / n;
    g->cell_volume *= g->h[a];
  }

  const int N = (m == 1) ? n : n * n;
  g->node_coords.resize(N, m);
  g->node_ginv.resize(N);
  g->node_gamma.resize(N);
  g->node_sqrtg.resize(N);
  g->weights.resize(N);
  g->edge_sw.assign(m, Vec::Zero(N));

  auto coords_of = [&](int idx) {
    Vec x(m);
    if (m == 1) {
      x[0] = idx * g->h[0];
    } else {
      x[0] = (idx / n) * g->h[0];
      x[1] = (idx % n) * g->h[1];
    }
    return x;
  };

  for (int idx = 0; idx < N; ++idx) {
    Vec x = coords_of(idx);
    g->node_coords.row(idx) = x.transpose();
    Mat gm = domain->metric_value(x);
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b)
        if (a != b && std::abs(gm(a, b)) > 1e-13 * gm.cwiseAbs().maxCoeff())
          throw ConfigError("grid domains require a diagonal metric");
    g->node_ginv[idx] = domain->metric_inverse(x);
    g->node_gamma[idx] = domain->christoffel(x);
    double det = gm.determinant();
    if (!(det > 0.0)) throw StructuralError("non-positive metric determinant on grid");
    g->node_sqrtg[idx] = std::sqrt(det);
    g->weights[idx] = g->cell_volume * g->node_sqrtg[idx];
    for (int a = 0; a < m; ++a) {
      Vec mid = x;
      mid[a] += 0.5 * g->h[a];
      Mat gm_mid = domain->metric_value(mid);
      Mat gi_mid = domain->metric_inverse(mid);
      g->edge_sw[a][idx] =
          g->cell_volume * std::sqrt(gm_mid.determinant()) * gi_mid(a, a);
    }
  }
  return g;
}

// ---------------------------------------------------------------------------
// Scalar-field operations.
// ---------------------------------------------------------------------------

/// Second-order central difference with periodic wrap.
inline Vec partial(const DomainGrid& g, const Vec& field, int axis) {
  if (axis < 0 || axis >= g.dims) throw ConfigError("partial: axis out of range");
  if (field.size() != g.num_nodes()) throw ConfigError("partial: field shape mismatch");
  Vec out(field.size());
  const double inv2h = 1.0 / (2.0 * g.h[axis]);
  for (int idx = 0; idx < g.num_nodes(); ++idx)
    out[idx] = (field[g.neighbor(idx, axis, +1)] - field[g.neighbor(idx, axis, -1)]) * inv2h;
  return out;
}

/// Quadrature: sum of weights times samples (trapezoid on the periodic grid).
inline double integrate(const DomainGrid& g, const Vec& field) {
  if (field.size() != g.num_nodes()) throw ConfigError("integrate: field shape mismatch");
  return g.weights.dot(field);
}

/// Smoothness diagnostic: detects fields whose periodic extension has a jump
/// (e.g. an unwrapped sawtooth), which central differences would silently
/// turn into garbage. Heuristic: a huge outlier among second differences.
inline bool field_is_wrap_smooth(const DomainGrid& g, const Vec& field, double period = 0.0) {
  double scale = std::max(1.0, field.cwiseAbs().maxCoeff());
  std::vector<double> d2;
  d2.reserve(static_cast<size_t>(field.size()) * g.dims);
  for (int axis = 0; axis < g.dims; ++axis)
    for (int idx = 0; idx < g.num_nodes(); ++idx) {
      double fp = field[g.neighbor(idx, axis, +1)];
      double fm = field[g.neighbor(idx, axis, -1)];
      double dp = wrap_diff(fp - field[idx], period);
      double dm = wrap_diff(fm - field[idx], period);
      d2.push_back(std::abs(dp + dm));
    }
  std::vector<double> sorted = d2;
  std::sort(sorted.begin(), sorted.end());
  double median = sorted[sorted.size() / 2];
  double mx = sorted.back();
  return mx <= 100.0 * median + 1e-10 * scale;
}

// ---------------------------------------------------------------------------
// Fields along the map: target-chart values per node (MapField) and sections
// of the pullback tangent bundle (Section).
// ---------------------------------------------------------------------------

class MapField {
 public:
  GridPtr grid;
  ManifoldPtr target;
  Mat values;  // N x dim(target)

  MapField() = default;
  MapField(GridPtr g, ManifoldPtr tgt, Mat vals)
      : grid(std::move(g)), target(std::move(tgt)), values(std::move(vals)) {
    validate();
  }

  int target_dim() const { return target->dim; }
  int num_nodes() const { return grid->num_nodes(); }

  void validate() const {
    if (values.rows() != grid->num_nodes() || values.cols() != target->dim)
      throw ConfigError("map field shape mismatch");
    for (int idx = 0; idx < values.rows(); ++idx) {
      Vec p = values.row(idx).transpose();
      if (!target->contains(p))
        throw DomainViolation("map value outside target validity region at node " +
                              std::to_string(idx) + " on " + target->name);
    }
  }

  Vec value_at(int idx) const { return values.row(idx).transpose(); }

  /// Forward chord (u(x + h e_a) - u(x)) / h with minimal-image differences
  /// on periodic target coordinates.
  Vec chord(int axis, int idx) const {
    int right = grid->neighbor(idx, axis, +1);
    Vec d(target->dim);
    for (int c = 0; c < target->dim; ++c)
      d[c] = wrap_diff(values(right, c) - values(idx, c), target->coords[c].period);
    return d / grid->h[axis];
  }

  /// Chart midpoint of the chord starting at idx (consistent with chord()).
  Vec edge_midpoint(int axis, int idx) const {
    int right = grid->neighbor(idx, axis, +1);
    Vec p(target->dim);
    for (int c = 0; c < target->dim; ++c)
      p[c] = values(idx, c) +
             0.5 * wrap_diff(values(right, c) - values(idx, c), target->coords[c].period);
    return p;
  }

  /// Central derivative of the map along a grid axis, minimal-image aware.
  Vec central_derivative(int axis, int idx) const {
    int right = grid->neighbor(idx, axis, +1);
    int left = grid->neighbor(idx, axis, -1);
    Vec d(target->dim);
    for (int c = 0; c < target->dim; ++c)
      d[c] = wrap_diff(values(right, c) - values(left, c), target->coords[c].period);
    return d / (2.0 * grid->h[axis]);
  }
};

class Section {
 public:
  GridPtr grid;
  ManifoldPtr target;
  Mat values;  // N x dim(target)

  Section() = default;
  Section(GridPtr g, ManifoldPtr tgt)
      : grid(std::move(g)), target(std::move(tgt)) {
    values = Mat::Zero(grid->num_nodes(), target->dim);
  }
  Section(GridPtr g, ManifoldPtr tgt, Mat vals)
      : grid(std::move(g)), target(std::move(tgt)), values(std::move(vals)) {
    if (values.rows() != grid->num_nodes() || values.cols() != target->dim)
      throw ConfigError("section shape mismatch");
  }

  static Section like(const MapField& u) { return Section(u.grid, u.target); }

  int num_nodes() const { return grid->num_nodes(); }
  double sup_norm() const {
    return values.size() == 0 ? 0.0 : values.cwiseAbs().maxCoeff();
  }
  Vec value_at(int idx) const { return values.row(idx).transpose(); }
};

// ---------------------------------------------------------------------------
// CSV serialization: one row per node, node multi-index then components.
// Headers are "i0[,i1],v0,v1,..." as documented in docs/schema.md.
// ---------------------------------------------------------------------------

namespace csv_detail {

inline void write_values(std::ostream& os, const DomainGrid& g, const Mat& vals) {
  os << "i0";
  if (g.dims == 2) os << ",i1";
  for (int c = 0; c < vals.cols(); ++c) os << ",v" << c;
  os << "\n";
  os.precision(17);
  for (int idx = 0; idx < vals.rows(); ++idx) {
    if (g.dims == 1)
      os << idx;
    else
      os << idx / g.n << "," << idx % g.n;
    for (int c = 0; c < vals.cols(); ++c) os << "," << vals(idx, c);
    os << "\n";
  }
}

inline Mat read_values(std::istream& is, const DomainGrid& g, int ncols) {
  std::string line;
  if (!std::getline(is, line)) throw ConfigError("csv: missing header");
  Mat vals = Mat::Zero(g.num_nodes(), ncols);
  const int index_cols = g.dims;
  int rows = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> row;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    if (static_cast<int>(row.size()) != index_cols + ncols)
      throw ConfigError("csv: wrong column count");
    int idx = (g.dims == 1) ? static_cast<int>(row[0])
                            : static_cast<int>(row[0]) * g.n + static_cast<int>(row[1]);
    if (idx < 0 || idx >= g.num_nodes()) throw ConfigError("csv: node index out of range");
    for (int c = 0; c < ncols; ++c) vals(idx, c) = row[index_cols + c];
    ++rows;
  }
  if (rows != g.num_nodes()) throw ConfigError("csv: wrong row count");
  return vals;
}

}  // namespace csv_detail

inline void write_map_csv(const MapField& u, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot open " + path + " for writing");
  csv_detail::write_values(os, *u.grid, u.values);
}

inline MapField read_map_csv(GridPtr grid, ManifoldPtr target, const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open " + path);
  Mat vals = csv_detail::read_values(is, *grid, target->dim);
  return MapField(std::move(grid), std::move(target), std::move(vals));
}

inline void write_section_csv(const Section& s, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot open " + path + " for writing");
  csv_detail::write_values(os, *s.grid, s.values);
}

// ---------------------------------------------------------------------------
// Divergence of the traced difference tensor, div^g(tr_g K), a diagnostic
// field on the domain.
// ---------------------------------------------------------------------------

inline Vec trace_K_divergence(const DomainGrid& g) {
  const int m = g.dims;
  const int N = g.num_nodes();
  // X^k = g^{ij} K^k_ij per node.
  Mat X(N, m);
  for (int idx = 0; idx < N; ++idx) {
    Vec x = g.node_coords.row(idx).transpose();
    Tensor3 K = difference_tensor(*g.domain, x);
    const Mat& gi = g.node_ginv[idx];
    for (int k = 0; k < m; ++k) {
      double s = 0.0;
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) s += gi(i, j) * K(k, i, j);
      X(idx, k) = s;
    }
  }
  // div^g X = (1/sqrt g) d_k (sqrt g X^k), centered differences per axis.
  Vec div = Vec::Zero(N);
  for (int k = 0; k < m; ++k) {
    Vec flux(N);
    for (int idx = 0; idx < N; ++idx) flux[idx] = g.node_sqrtg[idx] * X(idx, k);
    Vec d = partial(g, flux, k);
    for (int idx = 0; idx < N; ++idx) div[idx] += d[idx] / g.node_sqrtg[idx];
  }
  return div;
}

}  // namespace statmap
