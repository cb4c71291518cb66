#pragma once

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "statmap/chart.hpp"
#include "statmap/geometry_ops.hpp"

namespace statmap {

// ---------------------------------------------------------------------------
// Built-in manifold zoo. Every member carries analytic metric derivatives,
// analytic inverse and analytic Christoffel symbols (with first derivatives),
// so curvature and stability computations are limited by discretization of
// the domain, not by stencil noise in the target geometry.
// ---------------------------------------------------------------------------

struct ManifoldSpec {
  std::string type;               // euclidean | flat_torus | sphere | normal_family | simplex
  int dim = 0;                    // euclidean, simplex
  std::vector<double> lengths;    // flat_torus (also fixes its dim)
  double radius = 1.0;            // sphere
  double alpha = 0.0;             // normal_family, simplex
  double conformal_amplitude = 0.0;      // flat_torus metric option exp(2f) delta
  std::string connection_override;       // "" | "levi_civita" | "constant" | "cubic_potential"
  double override_value = 0.0;           // parameter of the override
  std::string curvature_source = "connection";  // or "levi_civita"
};

namespace zoo_detail {

inline void set_curvature_source(ChartManifold& m, const std::string& src) {
  if (src == "connection")
    m.curvature_source = CurvatureSource::kConnection;
  else if (src == "levi_civita")
    m.curvature_source = CurvatureSource::kLeviCivita;
  else
    throw ConfigError("unknown curvature_source '" + src + "'");
}

/// Replace the connection by the Levi-Civita connection of the metric.
inline void override_levi_civita(ChartManifold& m) {
  // Capture by value: the manifold object the evaluators close over must be
  // self-contained.
  auto base = std::make_shared<ChartManifold>(m);
  m.connection.christoffel = [base](const Vec& p) { return levi_civita(*base, p); };
  if (base->metric.d1 && base->metric.d2)
    m.connection.d1 = [base](const Vec& p) { return levi_civita_d1(*base, p); };
  else
    m.connection.d1 = nullptr;
}

}  // namespace zoo_detail

inline ChartManifold make_euclidean(int d) {
  if (d < 1) throw ConfigError("euclidean: dimension must be positive");
  ChartManifold m;
  m.dim = d;
  m.name = "euclidean(" + std::to_string(d) + ")";
  m.coords.assign(d, CoordSpec{});
  m.metric.value = [d](const Vec&) { return Mat::Identity(d, d); };
  m.metric.d1 = [d](const Vec&) { return Tensor3(d); };
  m.metric.d2 = [d](const Vec&) { return Tensor4(d); };
  m.metric.inverse = [d](const Vec&) { return Mat::Identity(d, d); };
  m.connection.christoffel = [d](const Vec&) { return Tensor3(d); };
  m.connection.d1 = [d](const Vec&) { return Tensor4(d); };
  m.sample_lo = Vec::Constant(d, -2.0);
  m.sample_hi = Vec::Constant(d, 2.0);
  return m;
}

/// Periodic chart [0, L_a) per axis. Metric is delta_ij, or exp(2f) delta_ij
/// with f = amp * sum_a sin(2 pi x_a / L_a) when a conformal amplitude is
/// given. Connection overrides ("constant", "cubic_potential") build flat-
/// chart statistical structures used by the divergence diagnostics; both keep
/// the Codazzi property because their lowered symbols are totally symmetric.
inline ChartManifold make_flat_torus(const std::vector<double>& lengths,
                                     double conformal_amplitude = 0.0,
                                     const std::string& connection_override = "",
                                     double override_value = 0.0) {
  const int d = static_cast<int>(lengths.size());
  if (d < 1 || d > 2) throw ConfigError("flat_torus: dimension must be 1 or 2");
  for (double L : lengths)
    if (!(L > 0.0)) throw ConfigError("flat_torus: lengths must be positive");

  ChartManifold m;
  m.dim = d;
  m.name = "flat_torus(" + std::to_string(d) + ")";
  for (double L : lengths) {
    CoordSpec c;
    c.period = L;
    m.coords.push_back(c);
  }
  std::vector<double> L = lengths;
  const double amp = conformal_amplitude;

  auto f = [L, amp](const Vec& p) {
    double s = 0.0;
    for (size_t a = 0; a < L.size(); ++a) s += std::sin(2.0 * M_PI * p[a] / L[a]);
    return amp * s;
  };
  auto df = [L, amp](const Vec& p, int a) {
    double w = 2.0 * M_PI / L[a];
    return amp * w * std::cos(w * p[a]);
  };
  auto ddf = [L, amp](const Vec& p, int a, int b) {
    if (a != b) return 0.0;
    double w = 2.0 * M_PI / L[a];
    return -amp * w * w * std::sin(w * p[a]);
  };

  m.metric.value = [d, f](const Vec& p) {
    return Mat::Identity(d, d) * std::exp(2.0 * f(p));
  };
  m.metric.inverse = [d, f](const Vec& p) {
    return Mat::Identity(d, d) * std::exp(-2.0 * f(p));
  };
  m.metric.d1 = [d, f, df](const Vec& p) {
    Tensor3 out(d);
    double e = std::exp(2.0 * f(p));
    for (int k = 0; k < d; ++k)
      for (int i = 0; i < d; ++i) out(k, i, i) = 2.0 * df(p, k) * e;
    return out;
  };
  m.metric.d2 = [d, f, df, ddf](const Vec& p) {
    Tensor4 out(d);
    double e = std::exp(2.0 * f(p));
    for (int l = 0; l < d; ++l)
      for (int k = 0; k < d; ++k)
        for (int i = 0; i < d; ++i)
          out(l, k, i, i) = (2.0 * ddf(p, l, k) + 4.0 * df(p, l) * df(p, k)) * e;
    return out;
  };

  if (connection_override.empty() || connection_override == "levi_civita") {
    // Levi-Civita of the (possibly conformal) metric:
    // Gamma^k_ij = delta^k_i d_j f + delta^k_j d_i f - delta_ij d_k f.
    m.connection.christoffel = [d, df](const Vec& p) {
      Tensor3 out(d);
      for (int k = 0; k < d; ++k)
        for (int i = 0; i < d; ++i)
          for (int j = 0; j < d; ++j) {
            double s = 0.0;
            if (k == i) s += df(p, j);
            if (k == j) s += df(p, i);
            if (i == j) s -= df(p, k);
            out(k, i, j) = s;
          }
      return out;
    };
    m.connection.d1 = [d, ddf](const Vec& p) {
      Tensor4 out(d);
      for (int l = 0; l < d; ++l)
        for (int k = 0; k < d; ++k)
          for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) {
              double s = 0.0;
              if (k == i) s += ddf(p, l, j);
              if (k == j) s += ddf(p, l, i);
              if (i == j) s -= ddf(p, l, k);
              out(l, k, i, j) = s;
            }
      return out;
    };
  } else if (connection_override == "constant") {
    if (amp != 0.0)
      throw ConfigError("flat_torus: connection overrides require a flat metric");
    const double c = override_value;
    m.connection.christoffel = [d, c](const Vec&) {
      Tensor3 out(d);
      for (int k = 0; k < d; ++k)
        for (int i = 0; i < d; ++i)
          for (int j = 0; j < d; ++j) out(k, i, j) = c;
      return out;
    };
    m.connection.d1 = [d](const Vec&) { return Tensor4(d); };
  } else if (connection_override == "cubic_potential") {
    // Gamma^k_ij = eps * cos(sum_a 2 pi x_a / L_a): totally symmetric,
    // periodic, position dependent.
    if (amp != 0.0)
      throw ConfigError("flat_torus: connection overrides require a flat metric");
    const double eps = override_value;
    auto phase = [L](const Vec& p) {
      double s = 0.0;
      for (size_t a = 0; a < L.size(); ++a) s += 2.0 * M_PI * p[a] / L[a];
      return s;
    };
    m.connection.christoffel = [d, eps, phase](const Vec& p) {
      Tensor3 out(d);
      double v = eps * std::cos(phase(p));
      for (int k = 0; k < d; ++k)
        for (int i = 0; i < d; ++i)
          for (int j = 0; j < d; ++j) out(k, i, j) = v;
      return out;
    };
    m.connection.d1 = [d, eps, phase, L](const Vec& p) {
      Tensor4 out(d);
      double s = -eps * std::sin(phase(p));
      for (int l = 0; l < d; ++l) {
        double v = s * 2.0 * M_PI / L[l];
        for (int k = 0; k < d; ++k)
          for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) out(l, k, i, j) = v;
      }
      return out;
    };
  } else {
    throw ConfigError("flat_torus: unknown connection override '" + connection_override + "'");
  }

  m.sample_lo = Vec::Zero(d);
  m.sample_hi = Vec::Zero(d);
  for (int a = 0; a < d; ++a) m.sample_hi[a] = lengths[a];
  return m;
}

/// Round sphere of the given radius in the spherical chart (theta, phi),
/// metric diag(R^2, R^2 sin^2 theta). The azimuth phi is periodic; theta is
/// confined to (0, pi) away from the coordinate poles.
inline ChartManifold make_sphere(double radius) {
  if (!(radius > 0.0)) throw ConfigError("sphere: radius must be positive");
  ChartManifold m;
  m.dim = 2;
  m.name = "sphere";
  CoordSpec theta;
  theta.lo = 0.0;
  theta.hi = M_PI;
  CoordSpec phi;
  phi.period = 2.0 * M_PI;
  m.coords = {theta, phi};
  const double R2 = radius * radius;

  m.metric.value = [R2](const Vec& p) {
    Mat g = Mat::Zero(2, 2);
    double s = std::sin(p[0]);
    g(0, 0) = R2;
    g(1, 1) = R2 * s * s;
    return g;
  };
  m.metric.inverse = [R2](const Vec& p) {
    Mat g = Mat::Zero(2, 2);
    double s = std::sin(p[0]);
    g(0, 0) = 1.0 / R2;
    g(1, 1) = 1.0 / (R2 * s * s);
    return g;
  };
  m.metric.d1 = [R2](const Vec& p) {
    Tensor3 out(2);
    out(0, 1, 1) = R2 * std::sin(2.0 * p[0]);
    return out;
  };
  m.metric.d2 = [R2](const Vec& p) {
    Tensor4 out(2);
    out(0, 0, 1, 1) = 2.0 * R2 * std::cos(2.0 * p[0]);
    return out;
  };
  m.connection.christoffel = [](const Vec& p) {
    Tensor3 out(2);
    double s = std::sin(p[0]), c = std::cos(p[0]);
    out(0, 1, 1) = -s * c;
    out(1, 0, 1) = out(1, 1, 0) = c / s;
    return out;
  };
  m.connection.d1 = [](const Vec& p) {
    Tensor4 out(2);
    double s = std::sin(p[0]);
    out(0, 0, 1, 1) = -std::cos(2.0 * p[0]);
    out(0, 1, 0, 1) = out(0, 1, 1, 0) = -1.0 / (s * s);
    return out;
  };
  m.sample_lo = Vec(2);
  m.sample_hi = Vec(2);
  m.sample_lo << 0.25 * M_PI, 0.0;
  m.sample_hi << 0.75 * M_PI, 2.0 * M_PI;
  return m;
}

/// Gaussian location-scale family N(mu, sigma^2) with the Fisher metric
/// diag(1/sigma^2, 2/sigma^2) and the alpha-connection. All symbols scale as
/// 1/sigma, so the analytic derivative is just -Gamma/sigma.
inline ChartManifold make_normal_family(double alpha) {
  ChartManifold m;
  m.dim = 2;
  m.name = "normal_family(alpha=" + std::to_string(alpha) + ")";
  CoordSpec mu;  // unconstrained
  CoordSpec sigma;
  sigma.lo = 0.0;
  m.coords = {mu, sigma};

  m.metric.value = [](const Vec& p) {
    double s2 = p[1] * p[1];
    Mat g = Mat::Zero(2, 2);
    g(0, 0) = 1.0 / s2;
    g(1, 1) = 2.0 / s2;
    return g;
  };
  m.metric.inverse = [](const Vec& p) {
    double s2 = p[1] * p[1];
    Mat g = Mat::Zero(2, 2);
    g(0, 0) = s2;
    g(1, 1) = 0.5 * s2;
    return g;
  };
  m.metric.d1 = [](const Vec& p) {
    Tensor3 out(2);
    double s3 = p[1] * p[1] * p[1];
    out(1, 0, 0) = -2.0 / s3;
    out(1, 1, 1) = -4.0 / s3;
    return out;
  };
  m.metric.d2 = [](const Vec& p) {
    Tensor4 out(2);
    double s4 = std::pow(p[1], 4);
    out(1, 1, 0, 0) = 6.0 / s4;
    out(1, 1, 1, 1) = 12.0 / s4;
    return out;
  };

  auto gamma = [alpha](const Vec& p) {
    Tensor3 out(2);
    double s = p[1];
    out(0, 0, 1) = out(0, 1, 0) = -(1.0 + alpha) / s;
    out(1, 0, 0) = (1.0 - alpha) / (2.0 * s);
    out(1, 1, 1) = -(1.0 + 2.0 * alpha) / s;
    return out;
  };
  m.connection.christoffel = gamma;
  m.connection.d1 = [gamma](const Vec& p) {
    Tensor4 out(2);
    Tensor3 g = gamma(p);
    for (int k = 0; k < 2; ++k)
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) out(1, k, i, j) = -g(k, i, j) / p[1];
    return out;
  };
  m.cubic_tensor = [](const Vec& p) {
    Tensor3 t(2);
    double s3 = p[1] * p[1] * p[1];
    t(0, 0, 1) = t(0, 1, 0) = t(1, 0, 0) = 2.0 / s3;
    t(1, 1, 1) = 8.0 / s3;
    return t;
  };
  m.sample_lo = Vec(2);
  m.sample_hi = Vec(2);
  m.sample_lo << -2.0, 0.5;
  m.sample_hi << 2.0, 2.0;
  return m;
}

/// Interior of the probability simplex on d+1 outcomes, chart (p_1..p_d)
/// with p_0 = 1 - sum p_i. Fisher metric g_ij = delta_ij/p_i + 1/p_0 with
/// Sherman-Morrison inverse p_i delta_ij - p_i p_j, and the alpha-connection
/// Gamma^(alpha)k_ij = (1+alpha)/2 (p_k/p_0 + [i==j] p_k/p_i - delta_ijk/p_k),
/// which vanishes at alpha = -1 (the chart is mixture-affine).
inline ChartManifold make_simplex(double alpha, int d) {
  if (d < 1) throw ConfigError("simplex: dimension must be positive");
  ChartManifold m;
  m.dim = d;
  m.name = "simplex(alpha=" + std::to_string(alpha) + ",d=" + std::to_string(d) + ")";
  for (int a = 0; a < d; ++a) {
    CoordSpec c;
    c.lo = 0.0;
    c.hi = 1.0;
    m.coords.push_back(c);
  }
  auto p0 = [](const Vec& p) { return 1.0 - p.sum(); };
  m.extra_validity = [p0](const Vec& p) { return p0(p) > 0.0 && p.minCoeff() > 0.0; };
  m.extra_boundary_distance = [p0](const Vec& p) {
    return std::min(p.minCoeff(), p0(p));
  };

  m.metric.value = [d, p0](const Vec& p) {
    Mat g = Mat::Constant(d, d, 1.0 / p0(p));
    for (int i = 0; i < d; ++i) g(i, i) += 1.0 / p[i];
    return g;
  };
  m.metric.inverse = [d](const Vec& p) {
    Mat g(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) g(i, j) = (i == j ? p[i] : 0.0) - p[i] * p[j];
    return g;
  };
  m.metric.d1 = [d, p0](const Vec& p) {
    Tensor3 out(d);
    double q = 1.0 / (p0(p) * p0(p));
    for (int k = 0; k < d; ++k)
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
          double v = q;
          if (i == j && j == k) v -= 1.0 / (p[i] * p[i]);
          out(k, i, j) = v;
        }
    return out;
  };
  m.metric.d2 = [d, p0](const Vec& p) {
    Tensor4 out(d);
    double q = 2.0 / std::pow(p0(p), 3);
    for (int l = 0; l < d; ++l)
      for (int k = 0; k < d; ++k)
        for (int i = 0; i < d; ++i)
          for (int j = 0; j < d; ++j) {
            double v = q;
            if (i == j && j == k && k == l) v += 2.0 / std::pow(p[i], 3);
            out(l, k, i, j) = v;
          }
    return out;
  };

  const double c = 0.5 * (1.0 + alpha);
  m.connection.christoffel = [d, c, p0](const Vec& p) {
    Tensor3 out(d);
    double q0 = p0(p);
    for (int k = 0; k < d; ++k)
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
          double v = p[k] / q0;
          if (i == j) v += p[k] / p[i];
          if (i == j && j == k) v -= 1.0 / p[k];
          out(k, i, j) = c * v;
        }
    return out;
  };
  m.connection.d1 = [d, c, p0](const Vec& p) {
    Tensor4 out(d);
    double q0 = p0(p);
    for (int l = 0; l < d; ++l)
      for (int k = 0; k < d; ++k)
        for (int i = 0; i < d; ++i)
          for (int j = 0; j < d; ++j) {
            double v = (l == k ? 1.0 / q0 : 0.0) + p[k] / (q0 * q0);
            if (i == j) {
              if (l == k) v += 1.0 / p[i];
              if (l == i) v -= p[k] / (p[i] * p[i]);
            }
            if (i == j && j == k && k == l) v += 1.0 / (p[k] * p[k]);
            out(l, k, i, j) = c * v;
          }
    return out;
  };
  m.cubic_tensor = [d, p0](const Vec& p) {
    Tensor3 t(d);
    double q = 1.0 / (p0(p) * p0(p));
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        for (int k = 0; k < d; ++k) {
          double v = -q;
          if (i == j && j == k) v += 1.0 / (p[i] * p[i]);
          t(i, j, k) = v;
        }
    return t;
  };
  m.sample_lo = Vec::Constant(d, 0.08);
  m.sample_hi = Vec::Constant(d, 0.08 + 0.8 / d);
  return m;
}

/// Build a zoo manifold from a descriptor and verify the Codazzi invariant
/// on a quasi-random point cloud before handing it out.
inline ChartManifold make_manifold(const ManifoldSpec& spec) {
  ChartManifold m;
  if (spec.type == "euclidean") {
    m = make_euclidean(spec.dim);
  } else if (spec.type == "flat_torus") {
    m = make_flat_torus(spec.lengths, spec.conformal_amplitude, spec.connection_override,
                        spec.override_value);
  } else if (spec.type == "sphere") {
    m = make_sphere(spec.radius);
  } else if (spec.type == "normal_family") {
    m = make_normal_family(spec.alpha);
  } else if (spec.type == "simplex") {
    m = make_simplex(spec.alpha, spec.dim);
  } else {
    throw ConfigError("unknown manifold type '" + spec.type + "'");
  }
  if (!spec.connection_override.empty() && spec.type != "flat_torus") {
    if (spec.connection_override == "levi_civita")
      zoo_detail::override_levi_civita(m);
    else
      throw ConfigError("connection override '" + spec.connection_override +
                        "' only supported on flat_torus");
  }
  zoo_detail::set_curvature_source(m, spec.curvature_source);

  for (const Vec& p : m.quasirandom_sample(25)) {
    if (codazzi_residual(m, p) > 1e-6)
      throw StructuralError("Codazzi invariant violated for " + m.name);
  }
  return m;
}

}  // namespace statmap
