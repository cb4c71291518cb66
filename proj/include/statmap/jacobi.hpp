#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "statmap/variational.hpp"

namespace statmap {

// ---------------------------------------------------------------------------
// The Jacobi operator J_u = rough Laplacian - curvature operator of the
// second variational formula.
//
// The metric (Levi-Civita) part of J is realized as the exact second
// variation of the discrete energy along chart-linear families: with
// H(V,W) := d^2/ds dt E(u + sV + tW)|_0 expanded over edges, J is the
// Wt-adjoint field satisfying sum_x w_x h(J V, W)(x) = H(V,W) for all W.
// For targets whose connection is not the Levi-Civita connection of h, the
// pointwise first-order corrections
//     [rough^nabla - rough^LC](V) - [R^src - R^LC](V)
// are added, so the operator converges to the statistical Jacobi operator
// while the exact-Hessian property is preserved in the metric case.
// ---------------------------------------------------------------------------

struct HessianResult {
  double value = 0.0;
  bool harmonicity_gate = true;  // false marks an advisory (non-harmonic) result
};

class JacobiOperator {
 public:
  explicit JacobiOperator(MapField base) : u(std::move(base)) { precompute(); }

  MapField u;
  double tension_sup = 0.0;
  bool harmonicity_gate = true;
  bool has_statistical_correction = false;

  /// J_u V.
  Section apply(const Section& V) const {
    Section out = hessian_apply(V);
    if (has_statistical_correction) {
      Section delta = statistical_delta(V);
      out.values += delta.values;
    }
    return out;
  }

  /// Rough Laplacian: adjoint of the staggered covariant Dirichlet form,
  /// plus the pointwise connection correction when the target is
  /// statistical. Positive semi-definite in the metric case.
  Section rough_laplacian(const Section& V) const {
    const DomainGrid& g = *u.grid;
    const int d = u.target_dim();
    const int N = g.num_nodes();
    Mat G = Mat::Zero(N, d);
    for (int a = 0; a < g.dims; ++a) {
      const double inv_h = 1.0 / g.h[a];
      for (int idx = 0; idx < N; ++idx) {
        const EdgeData& e = edges_[a][idx];
        int right = g.neighbor(idx, a, +1);
        Vec dv = (V.values.row(right) - V.values.row(idx)).transpose() * inv_h;
        Vec vbar = 0.5 * (V.values.row(right) + V.values.row(idx)).transpose();
        // nabla~+ V on the edge, with the Levi-Civita symbols at the midpoint.
        Vec cov = dv;
        for (int gg = 0; gg < d; ++gg)
          for (int al = 0; al < d; ++al)
            for (int be = 0; be < d; ++be)
              cov[gg] += e.lc_mid(gg, al, be) * e.c[al] * vbar[be];
        Vec hcov = e.h * cov;
        for (int dd = 0; dd < d; ++dd) {
          double gamma_term = 0.0;
          for (int al = 0; al < d; ++al)
            gamma_term += 0.5 * lc_c_at(e, al, dd) * hcov[al];
          G(idx, dd) += e.sw * (-inv_h * hcov[dd] + gamma_term);
          G(right, dd) += e.sw * (inv_h * hcov[dd] + gamma_term);
        }
      }
    }
    Section out = Section::like(u);
    for (int idx = 0; idx < N; ++idx)
      out.values.row(idx) = (nodes_[idx].hinv * G.row(idx).transpose()).transpose() /
                            g.weights[idx];
    if (has_statistical_correction) {
      Section delta = rough_delta(V);
      out.values += delta.values;
    }
    return out;
  }

  /// Curvature operator R^u(V) = g^{ij} R(V, d_i u) d_j u (pointwise).
  Section curvature_term(const Section& V) const {
    const DomainGrid& g = *u.grid;
    const int d = u.target_dim();
    Section out = Section::like(u);
    for (int idx = 0; idx < g.num_nodes(); ++idx) {
      const NodeData& nd = nodes_[idx];
      if (nd.du_zero) continue;
      Vec v = V.value_at(idx);
      const Mat& gi = g.node_ginv[idx];
      for (int a = 0; a < g.dims; ++a)
        for (int b = 0; b < g.dims; ++b) {
          double gab = gi(a, b);
          if (gab == 0.0) continue;
          for (int l = 0; l < d; ++l) {
            double s = 0.0;
            for (int al = 0; al < d; ++al)
              for (int be = 0; be < d; ++be)
                for (int ga = 0; ga < d; ++ga)
                  s += nd.R_src(l, al, be, ga) * v[al] * nd.du[a][be] * nd.du[b][ga];
            out.values(idx, l) += gab * s;
          }
        }
    }
    return out;
  }

  /// Hessian pairing int h(J V, W) dmu by node quadrature. Exact equal to
  /// the mixed (s,t) derivative of the discrete energy for metric targets.
  HessianResult hessian(const Section& V, const Section& W) const {
    Section jv = apply(V);
    const DomainGrid& g = *u.grid;
    double s = 0.0;
    for (int idx = 0; idx < g.num_nodes(); ++idx)
      s += g.weights[idx] *
           W.value_at(idx).dot(nodes_[idx].h * jv.value_at(idx));
    return {s, harmonicity_gate};
  }

  /// Weighted inner product int h(A, B) dmu.
  double weighted_inner(const Section& A, const Section& B) const {
    const DomainGrid& g = *u.grid;
    double s = 0.0;
    for (int idx = 0; idx < g.num_nodes(); ++idx)
      s += g.weights[idx] * A.value_at(idx).dot(nodes_[idx].h * B.value_at(idx));
    return s;
  }

 private:
  struct EdgeData {
    double sw = 0.0;
    Vec c;          // forward chord / h
    Mat h;          // target metric at the chart midpoint
    Tensor3 dh;     // d_g h_ab at the midpoint
    Tensor4 d2h;    // d_d d_g h_ab at the midpoint
    Tensor3 lc_mid; // Levi-Civita symbols at the midpoint
  };
  struct NodeData {
    Mat h, hinv;
    std::vector<Vec> du;       // central derivatives per axis
    bool du_zero = true;
    Tensor4 R_src, R_lc;       // curvature per configured source and LC
    std::vector<Mat> A, B, C;  // Gamma(du_a, .) matrices: statistical, LC, diff
    Tensor3 gammaM;            // domain symbols (copied from the grid)
  };

  std::vector<std::vector<EdgeData>> edges_;  // [axis][edge]
  std::vector<NodeData> nodes_;

  double lc_c_at(const EdgeData& e, int al, int dd) const {
    // (Gamma^{LC}(c, .))^al_dd at the edge midpoint.
    double s = 0.0;
    for (int be = 0; be < e.c.size(); ++be) s += e.lc_mid(al, be, dd) * e.c[be];
    return s;
  }

  void precompute() {
    const DomainGrid& g = *u.grid;
    const ChartManifold& tgt = *u.target;
    const int d = u.target_dim();
    const int N = g.num_nodes();

    Section tau = tension(u);
    tension_sup = tau.sup_norm();
    harmonicity_gate = tension_sup < 1e-4 * energy_scale(u);

    edges_.assign(g.dims, std::vector<EdgeData>(N));
    for (int a = 0; a < g.dims; ++a)
      for (int idx = 0; idx < N; ++idx) {
        EdgeData& e = edges_[a][idx];
        e.sw = g.edge_sw[a][idx];
        e.c = u.chord(a, idx);
        Vec mid = u.edge_midpoint(a, idx);
        e.h = tgt.metric_value(mid);
        e.dh = metric_d1(tgt, mid);
        e.d2h = metric_d2(tgt, mid);
        e.lc_mid = levi_civita(tgt, mid);
      }

    nodes_.resize(N);
    double cnorm = 0.0, anorm = 0.0;
    for (int idx = 0; idx < N; ++idx) {
      NodeData& nd = nodes_[idx];
      Vec p = u.value_at(idx);
      nd.h = tgt.metric_value(p);
      nd.hinv = tgt.metric_inverse(p);
      nd.gammaM = g.node_gamma[idx];
      nd.du.resize(g.dims);
      nd.du_zero = true;
      for (int a = 0; a < g.dims; ++a) {
        nd.du[a] = u.central_derivative(a, idx);
        if (nd.du[a].cwiseAbs().maxCoeff() > 0.0) nd.du_zero = false;
      }
      Tensor3 gamma = tgt.christoffel(p);
      Tensor3 lc = levi_civita(tgt, p);
      nd.A.assign(g.dims, Mat::Zero(d, d));
      nd.B.assign(g.dims, Mat::Zero(d, d));
      nd.C.assign(g.dims, Mat::Zero(d, d));
      for (int a = 0; a < g.dims; ++a)
        for (int gg = 0; gg < d; ++gg)
          for (int be = 0; be < d; ++be) {
            double sa = 0.0, sb = 0.0;
            for (int al = 0; al < d; ++al) {
              sa += gamma(gg, al, be) * nd.du[a][al];
              sb += lc(gg, al, be) * nd.du[a][al];
            }
            nd.A[a](gg, be) = sa;
            nd.B[a](gg, be) = sb;
            nd.C[a](gg, be) = sa - sb;
            cnorm = std::max(cnorm, std::abs(sa - sb));
            anorm = std::max(anorm, std::max(std::abs(sa), std::abs(sb)));
          }
      nd.R_src = curvature(tgt, p);
    }
    // A connection that agrees with Levi-Civita to roundoff is treated as
    // metric: the statistical correction is then skipped entirely so the
    // operator stays the exact energy Hessian.
    has_statistical_correction = cnorm > 1e-12 * std::max(1.0, anorm);
    if (has_statistical_correction ||
        u.target->curvature_source == CurvatureSource::kLeviCivita) {
      for (int idx = 0; idx < N; ++idx)
        nodes_[idx].R_lc = curvature_with_source(tgt, u.value_at(idx),
                                                 CurvatureSource::kLeviCivita);
    }
  }

  /// Exact discrete Hessian operator of the energy (Levi-Civita content).
  Section hessian_apply(const Section& V) const {
    const DomainGrid& g = *u.grid;
    const int d = u.target_dim();
    const int N = g.num_nodes();
    Mat G = Mat::Zero(N, d);
    for (int a = 0; a < g.dims; ++a) {
      const double inv_h = 1.0 / g.h[a];
      for (int idx = 0; idx < N; ++idx) {
        const EdgeData& e = edges_[a][idx];
        int right = g.neighbor(idx, a, +1);
        Vec dv = (V.values.row(right) - V.values.row(idx)).transpose() * inv_h;
        Vec vbar = 0.5 * (V.values.row(right) + V.values.row(idx)).transpose();
        Vec hdv = e.h * dv;
        for (int dd = 0; dd < d; ++dd) {
          // P_dd = d2h(d2, dd; c, c) Vbar^{d2};  S_dd = dh(dd; dv, c);
          // U_dd = dh(g; e_dd, c) Vbar^g;        M_dd = h(dv, e_dd).
          double P = 0.0, S = 0.0, U = 0.0;
          for (int al = 0; al < d; ++al)
            for (int be = 0; be < d; ++be) {
              double cc = e.c[al] * e.c[be];
              for (int d2 = 0; d2 < d; ++d2) P += e.d2h(d2, dd, al, be) * vbar[d2] * cc;
              S += e.dh(dd, al, be) * dv[al] * e.c[be];
              U += e.dh(al, dd, be) * vbar[al] * e.c[be];
            }
          double mid_part = 0.25 * P + 0.5 * S;
          double end_part = (U + hdv[dd]) * inv_h;
          G(idx, dd) += e.sw * (mid_part - end_part);
          G(right, dd) += e.sw * (mid_part + end_part);
        }
      }
    }
    Section out = Section::like(u);
    for (int idx = 0; idx < N; ++idx)
      out.values.row(idx) =
          (nodes_[idx].hinv * G.row(idx).transpose()).transpose() / g.weights[idx];
    return out;
  }

  /// Pointwise difference [rough^nabla - rough^LC](V): first order, built
  /// from the difference-tensor matrices C_a = K(d_a u, .).
  Section rough_delta(const Section& V) const {
    const DomainGrid& g = *u.grid;
    const int d = u.target_dim();
    const int N = g.num_nodes();

    // Node fields C_b V per axis, then centered derivatives.
    std::vector<Mat> CbV(g.dims, Mat::Zero(N, d));
    for (int b = 0; b < g.dims; ++b)
      for (int idx = 0; idx < N; ++idx)
        CbV[b].row(idx) = (nodes_[idx].C[b] * V.value_at(idx)).transpose();

    Section out = Section::like(u);
    for (int idx = 0; idx < N; ++idx) {
      const NodeData& nd = nodes_[idx];
      const Mat& gi = g.node_ginv[idx];
      Vec acc = Vec::Zero(d);
      for (int a = 0; a < g.dims; ++a)
        for (int b = 0; b < g.dims; ++b) {
          double gab = gi(a, b);
          if (gab == 0.0) continue;
          int rp = g.neighbor(idx, a, +1), rm = g.neighbor(idx, a, -1);
          Vec d_a_CbV =
              (CbV[b].row(rp) - CbV[b].row(rm)).transpose() / (2.0 * g.h[a]);
          int vp = g.neighbor(idx, b, +1), vm = g.neighbor(idx, b, -1);
          Vec DbV = (V.values.row(vp) - V.values.row(vm)).transpose() / (2.0 * g.h[b]);
          Vec term = d_a_CbV + nd.C[a] * DbV +
                     nd.A[a] * (nd.A[b] * V.value_at(idx)) -
                     nd.B[a] * (nd.B[b] * V.value_at(idx));
          Vec gammaM_term = Vec::Zero(d);
          for (int k = 0; k < g.dims; ++k)
            gammaM_term += nd.gammaM(k, a, b) * (nd.C[k] * V.value_at(idx));
          acc -= gab * (term - gammaM_term);
        }
      out.values.row(idx) = acc.transpose();
    }
    return out;
  }

  /// Pointwise difference [R^src - R^LC](V) traced against g^{ij}.
  Section curvature_delta(const Section& V) const {
    const DomainGrid& g = *u.grid;
    const int d = u.target_dim();
    Section out = Section::like(u);
    if (u.target->curvature_source == CurvatureSource::kLeviCivita)
      return out;  // the configured reading *is* Levi-Civita: no correction
    for (int idx = 0; idx < g.num_nodes(); ++idx) {
      const NodeData& nd = nodes_[idx];
      if (nd.du_zero) continue;
      Vec v = V.value_at(idx);
      const Mat& gi = g.node_ginv[idx];
      for (int a = 0; a < g.dims; ++a)
        for (int b = 0; b < g.dims; ++b) {
          double gab = gi(a, b);
          if (gab == 0.0) continue;
          for (int l = 0; l < d; ++l) {
            double s = 0.0;
            for (int al = 0; al < d; ++al)
              for (int be = 0; be < d; ++be)
                for (int ga = 0; ga < d; ++ga)
                  s += (nd.R_src(l, al, be, ga) - nd.R_lc(l, al, be, ga)) * v[al] *
                       nd.du[a][be] * nd.du[b][ga];
            out.values(idx, l) += gab * s;
          }
        }
    }
    return out;
  }

  Section statistical_delta(const Section& V) const {
    Section rough = rough_delta(V);
    Section curv = curvature_delta(V);
    rough.values -= curv.values;
    return rough;
  }
};

// ---------------------------------------------------------------------------
// Free-function forms of the operator surface.
// ---------------------------------------------------------------------------

inline Section rough_laplacian(const MapField& u, const Section& V) {
  return JacobiOperator(u).rough_laplacian(V);
}

inline Section curvature_term(const MapField& u, const Section& V) {
  return JacobiOperator(u).curvature_term(V);
}

inline Section jacobi_apply(const MapField& u, const Section& V) {
  return JacobiOperator(u).apply(V);
}

inline HessianResult hessian(const MapField& u, const Section& V, const Section& W) {
  return JacobiOperator(u).hessian(V, W);
}

}  // namespace statmap
