#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "statmap/grid.hpp"

namespace statmap {

// ---------------------------------------------------------------------------
// Energy, tension field and the harmonic gradient flow.
//
// The energy is discretized as a sum over grid edges ("staggered" form):
//
//   E(u) = 1/2 sum_axes sum_edges sw_e h_ab(mid_e) c_e^a c_e^b,
//
// with c_e the forward chord of u along the edge, mid_e the chart midpoint,
// and sw_e the quadrature/metric weight of the edge. The tension field is
// assembled as the *exact* gradient of this discrete functional (raised by
// the target metric and normalized by the node weight) plus the pointwise
// trace of the difference tensor, g^{ij} K(d_i u, d_j u). The two pieces are
// the Levi-Civita tension and the statistical correction; their sum is the
// trace of the statistical second fundamental form. Making the first piece
// an exact discrete gradient is what lets first- and second-variation
// identities hold to solver precision instead of O(h^2).
// ---------------------------------------------------------------------------

namespace var_detail {

/// d_g h_ab at a target point (analytic or centered stencil).
inline Tensor3 target_metric_d1(const ChartManifold& t, const Vec& p) {
  return metric_d1(t, p);
}

}  // namespace var_detail

inline double energy(const MapField& u) {
  const DomainGrid& g = *u.grid;
  const ChartManifold& tgt = *u.target;
  double E = 0.0;
  for (int a = 0; a < g.dims; ++a)
    for (int idx = 0; idx < g.num_nodes(); ++idx) {
      Vec c = u.chord(a, idx);
      Mat h = tgt.metric_value(u.edge_midpoint(a, idx));
      E += 0.5 * g.edge_sw[a][idx] * c.dot(h * c);
    }
  return E;
}

/// Lowered gradient of the discrete energy: grad(y)_d = dE/du(y)^d.
inline Mat energy_gradient_lowered(const MapField& u) {
  const DomainGrid& g = *u.grid;
  const ChartManifold& tgt = *u.target;
  const int N = g.num_nodes();
  const int d = u.target_dim();
  Mat grad = Mat::Zero(N, d);
  for (int a = 0; a < g.dims; ++a) {
    const double inv_h = 1.0 / g.h[a];
    for (int idx = 0; idx < N; ++idx) {
      // Edge from idx to idx+1 along axis a; idx is its left end.
      Vec c = u.chord(a, idx);
      Vec mid = u.edge_midpoint(a, idx);
      Mat h = tgt.metric_value(mid);
      Tensor3 dh = var_detail::target_metric_d1(tgt, mid);
      double sw = g.edge_sw[a][idx];
      int right = g.neighbor(idx, a, +1);
      Vec hc = h * c;
      for (int dd = 0; dd < d; ++dd) {
        double quad = 0.0;
        for (int al = 0; al < d; ++al)
          for (int be = 0; be < d; ++be) quad += dh(dd, al, be) * c[al] * c[be];
        double mid_term = 0.25 * sw * quad;
        grad(idx, dd) += mid_term - sw * inv_h * hc[dd];   // left end
        grad(right, dd) += mid_term + sw * inv_h * hc[dd]; // right end
      }
    }
  }
  return grad;
}

/// Pointwise statistical correction g^{ij} K(d_i u, d_j u) (upper index).
inline Mat tension_connection_correction(const MapField& u) {
  const DomainGrid& g = *u.grid;
  const ChartManifold& tgt = *u.target;
  const int N = g.num_nodes();
  const int d = u.target_dim();
  Mat corr = Mat::Zero(N, d);
  for (int idx = 0; idx < N; ++idx) {
    Vec p = u.value_at(idx);
    Tensor3 K = difference_tensor(tgt, p);
    if (K.max_abs() == 0.0) continue;
    const Mat& gi = g.node_ginv[idx];
    std::vector<Vec> du(g.dims);
    for (int a = 0; a < g.dims; ++a) du[a] = u.central_derivative(a, idx);
    for (int a = 0; a < g.dims; ++a)
      for (int b = 0; b < g.dims; ++b) {
        double gab = gi(a, b);
        if (gab == 0.0) continue;
        for (int k = 0; k < d; ++k) {
          double s = 0.0;
          for (int al = 0; al < d; ++al)
            for (int be = 0; be < d; ++be) s += K(k, al, be) * du[a][al] * du[b][be];
          corr(idx, k) += gab * s;
        }
      }
  }
  return corr;
}

/// Statistical tension field tau(u) = tr_g (nabla du) with the target's
/// affine connection: exact discrete Levi-Civita gradient part plus the
/// difference-tensor trace.
inline Section tension(const MapField& u) {
  const DomainGrid& g = *u.grid;
  const ChartManifold& tgt = *u.target;
  Mat grad = energy_gradient_lowered(u);
  Mat corr = tension_connection_correction(u);
  Section tau = Section::like(u);
  for (int idx = 0; idx < g.num_nodes(); ++idx) {
    Mat hinv = tgt.metric_inverse(u.value_at(idx));
    Vec lowered = grad.row(idx).transpose();
    tau.values.row(idx) =
        (-(hinv * lowered) / g.weights[idx] + corr.row(idx).transpose()).transpose();
  }
  return tau;
}

inline double bienergy(const MapField& u, const Section& tau) {
  const DomainGrid& g = *u.grid;
  double E2 = 0.0;
  for (int idx = 0; idx < g.num_nodes(); ++idx) {
    Mat h = u.target->metric_value(u.value_at(idx));
    Vec t = tau.value_at(idx);
    E2 += 0.5 * g.weights[idx] * t.dot(h * t);
  }
  return E2;
}

inline double bienergy(const MapField& u) { return bienergy(u, tension(u)); }

/// Pullback covariant derivative along grid axis i:
/// (nabla~_i V)^g = d_i V^g + Gamma^g_ab(u) d_i u^a V^b, centered stencils.
inline Section pullback_derivative(const MapField& u, const Section& V, int axis) {
  const DomainGrid& g = *u.grid;
  if (axis < 0 || axis >= g.dims) throw ConfigError("pullback_derivative: axis out of range");
  if (V.values.rows() != u.values.rows() || V.values.cols() != u.values.cols())
    throw ConfigError("pullback_derivative: section shape mismatch");
  const ChartManifold& tgt = *u.target;
  const int d = u.target_dim();
  Section out = Section::like(u);
  const double inv2h = 1.0 / (2.0 * g.h[axis]);
  for (int idx = 0; idx < g.num_nodes(); ++idx) {
    int right = g.neighbor(idx, axis, +1);
    int left = g.neighbor(idx, axis, -1);
    Vec dV = (V.values.row(right) - V.values.row(left)).transpose() * inv2h;
    Vec du = u.central_derivative(axis, idx);
    Tensor3 gamma = tgt.christoffel(u.value_at(idx));
    Vec v = V.value_at(idx);
    for (int gg = 0; gg < d; ++gg) {
      double s = dV[gg];
      for (int al = 0; al < d; ++al)
        for (int be = 0; be < d; ++be) s += gamma(gg, al, be) * du[al] * v[be];
      out.values(idx, gg) = s;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Energy report.
// ---------------------------------------------------------------------------

struct EnergyReport {
  double E = 0.0;
  double E2 = 0.0;
  double tension_sup = 0.0;
  bool converged = true;
  Section tau;
};

inline EnergyReport make_energy_report(const MapField& u, bool converged = true) {
  EnergyReport r;
  r.tau = tension(u);
  r.E = energy(u);
  r.E2 = bienergy(u, r.tau);
  r.tension_sup = r.tau.sup_norm();
  r.converged = converged;
  return r;
}

/// Characteristic energy-density scale used by harmonicity gates.
inline double energy_scale(const MapField& u) {
  double vol = u.grid->total_weight();
  return std::max(1.0, std::sqrt(2.0 * energy(u) / vol));
}

// ---------------------------------------------------------------------------
// Two-parameter variation families u_{s,t}. The default generator is the
// chart-linear family u + sV + tW, which makes s/t derivatives exact; a
// custom generator hook exists for sensitivity studies. Leaving the validity
// region is an error, never a silent projection.
// ---------------------------------------------------------------------------

class VariationFamily {
 public:
  MapField base;
  Section V, W;
  // Optional custom generator: (s, t) -> map values.
  std::function<Mat(double, double)> generator;

  VariationFamily(MapField u, Section v, Section w,
                  std::function<Mat(double, double)> gen = nullptr)
      : base(std::move(u)), V(std::move(v)), W(std::move(w)), generator(std::move(gen)) {
    if (V.values.rows() != base.values.rows() || W.values.rows() != base.values.rows())
      throw ConfigError("variation family: direction shape mismatch");
    check_directions();
  }

  MapField at(double s, double t) const {
    Mat vals = generator ? generator(s, t) : base.values + s * V.values + t * W.values;
    return MapField(base.grid, base.target, std::move(vals));
  }

 private:
  // Build-time invariant: generator(0,0) = base and its s/t derivatives at
  // the origin reproduce V and W (finite-difference check for custom hooks).
  void check_directions() const {
    if (!generator) return;  // chart-linear family satisfies this identically
    Mat at0 = generator(0.0, 0.0);
    double scale = std::max(1.0, base.values.cwiseAbs().maxCoeff());
    if ((at0 - base.values).cwiseAbs().maxCoeff() > 1e-12 * scale)
      throw ConfigError("variation family: generator(0,0) != base map");
    const double eps = 1e-6;
    Mat dv = (generator(eps, 0.0) - generator(-eps, 0.0)) / (2.0 * eps);
    Mat dw = (generator(0.0, eps) - generator(0.0, -eps)) / (2.0 * eps);
    double vscale = std::max(1.0, V.values.cwiseAbs().maxCoeff());
    double wscale = std::max(1.0, W.values.cwiseAbs().maxCoeff());
    if ((dv - V.values).cwiseAbs().maxCoeff() > 1e-6 * vscale ||
        (dw - W.values).cwiseAbs().maxCoeff() > 1e-6 * wscale)
      throw ConfigError("variation family: generator derivatives do not match V, W");
  }
};

// ---------------------------------------------------------------------------
// First-variation check: central differences of E along the V direction
// versus -int h(V, tau(u)) dmu.
// ---------------------------------------------------------------------------

struct FirstVariationReport {
  std::vector<double> steps;
  std::vector<double> fd_values;
  std::vector<double> residuals;
  double target = 0.0;          // -int h(V, tau(u))
  double observed_order = 0.0;  // from residual decay; 99 if at the floor
  bool at_floor = false;
  double final_rel_residual = 0.0;
  bool pass = false;
};

inline FirstVariationReport first_variation_check(
    const VariationFamily& fam, std::vector<double> steps = {},
    double tol = 1e-6) {
  if (steps.empty()) steps = {1e-2, 5e-3, 2.5e-3, 1.25e-3, 6.25e-4};
  const MapField& u = fam.base;
  const DomainGrid& g = *u.grid;

  Section tau = tension(u);
  double target = 0.0;
  for (int idx = 0; idx < g.num_nodes(); ++idx) {
    Mat h = u.target->metric_value(u.value_at(idx));
    target -= g.weights[idx] * fam.V.value_at(idx).dot(h * tau.value_at(idx));
  }

  FirstVariationReport rep;
  rep.target = target;

  // Shrink-and-retry when the family leaves the validity region.
  for (int attempt = 0;; ++attempt) {
    try {
      rep.steps = steps;
      rep.fd_values.clear();
      rep.residuals.clear();
      for (double hs : steps) {
        double Ep = energy(fam.at(hs, 0.0));
        double Em = energy(fam.at(-hs, 0.0));
        double fd = (Ep - Em) / (2.0 * hs);
        rep.fd_values.push_back(fd);
        rep.residuals.push_back(std::abs(fd - target));
      }
      break;
    } catch (const DomainViolation&) {
      if (attempt >= 8) throw;
      for (double& s : steps) s *= 0.5;
    }
  }

  const double floor = 1e-12 * std::max(1.0, std::abs(target));
  std::vector<double> orders;
  for (size_t i = 0; i + 1 < rep.residuals.size(); ++i) {
    if (rep.residuals[i] > floor && rep.residuals[i + 1] > floor) {
      double ratio = rep.steps[i] / rep.steps[i + 1];
      orders.push_back(std::log(rep.residuals[i] / rep.residuals[i + 1]) / std::log(ratio));
    }
  }
  if (orders.empty()) {
    rep.at_floor = true;
    rep.observed_order = 99.0;
  } else {
    std::sort(orders.begin(), orders.end());
    rep.observed_order = orders[orders.size() / 2];
  }
  rep.final_rel_residual = rep.residuals.back() / std::max(1.0, std::abs(target));
  rep.pass = rep.final_rel_residual <= tol && (rep.at_floor || rep.observed_order >= 1.8);
  return rep;
}

// ---------------------------------------------------------------------------
// Harmonic map gradient flow, explicit Euler: u <- u + dt tau(u).
// ---------------------------------------------------------------------------

struct FlowParams {
  double dt = 0.0;  // 0 = automatic 0.2 h^2 / max g^{aa}
  double tol = 1e-6;
  int max_steps = 400000;
};

struct FlowSample {
  int step;
  double tension_sup;
  double energy;
};

struct FlowResult {
  MapField u;
  bool converged = false;
  int steps = 0;
  double final_tension_sup = 0.0;
  std::vector<FlowSample> series;
};

inline double default_flow_dt(const DomainGrid& g) {
  double maxg = 0.0;
  for (int idx = 0; idx < g.num_nodes(); ++idx)
    for (int a = 0; a < g.dims; ++a) maxg = std::max(maxg, g.node_ginv[idx](a, a));
  double h2 = std::numeric_limits<double>::infinity();
  for (int a = 0; a < g.dims; ++a) h2 = std::min(h2, g.h[a] * g.h[a]);
  return 0.2 * h2 / maxg;
}

inline FlowResult harmonic_flow(const MapField& u0, FlowParams params = {}) {
  const DomainGrid& g = *u0.grid;
  double dt = params.dt > 0.0 ? params.dt : default_flow_dt(g);

  // Explicit-Euler stability guard against the stiffness of the discrete
  // Laplacian, 4 g^{aa} / h^2 per axis.
  double stiffness = 0.0;
  for (int idx = 0; idx < g.num_nodes(); ++idx)
    for (int a = 0; a < g.dims; ++a)
      stiffness = std::max(stiffness, 4.0 * g.node_ginv[idx](a, a) / (g.h[a] * g.h[a]));
  if (!(dt * stiffness < 1.0))
    throw ConfigError("flow step dt violates the explicit-Euler stability guard");

  FlowResult res;
  res.u = u0;
  double prev_energy = energy(res.u);
  int rises = 0;
  const int sample_stride = std::max(1, params.max_steps / 2000);

  for (int step = 0; step < params.max_steps; ++step) {
    Section tau = tension(res.u);
    double sup = tau.sup_norm();
    double E = energy(res.u);
    if (step % sample_stride == 0) res.series.push_back({step, sup, E});
    if (sup < params.tol) {
      res.converged = true;
      res.steps = step;
      res.final_tension_sup = sup;
      res.series.push_back({step, sup, E});
      return res;
    }
    if (E > prev_energy) {
      if (++rises >= 50)
        throw FlowDivergenceError("energy increased over 50 consecutive flow steps");
    } else {
      rises = 0;
    }
    prev_energy = E;
    res.u.values += dt * tau.values;
    try {
      res.u.validate();
    } catch (const DomainViolation& e) {
      throw DomainViolation(std::string("flow left the target validity region: ") + e.what());
    }
  }
  Section tau = tension(res.u);
  res.final_tension_sup = tau.sup_norm();
  res.steps = params.max_steps;
  res.converged = res.final_tension_sup < params.tol;
  res.series.push_back({params.max_steps, res.final_tension_sup, energy(res.u)});
  return res;
}

}  // namespace statmap
