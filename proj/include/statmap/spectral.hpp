#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "statmap/jacobi.hpp"

namespace statmap {

using ordered_json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Dense matrix realization of the Jacobi operator and the weighted symmetric
// eigenproblem behind index/nullity/stability. Index and nullity are
// quadratic-form quantities, so they are read off the symmetrized weighted
// form B = (Wt A + (Wt A)^T)/2 against the weight matrix Wt; the raw
// asymmetry of Wt A is reported as a diagnostic, never hidden.
// ---------------------------------------------------------------------------

struct JacobiAssembly {
  Mat A;   // operator matrix in the flattened per-node coordinate basis
  Mat Wt;  // block-diagonal weights w_x h_ab(u(x))
  Mat B;   // symmetrized weighted form
  double asymmetry = 0.0;
  bool harmonicity_gate = true;
  double tension_sup = 0.0;
  int n_dof = 0;
};

inline int flat_dof(const MapField& u, int node, int comp) {
  return node * u.target_dim() + comp;
}

inline Section section_from_flat(const MapField& u, const Vec& x) {
  Section s = Section::like(u);
  const int d = u.target_dim();
  for (int idx = 0; idx < u.num_nodes(); ++idx)
    for (int c = 0; c < d; ++c) s.values(idx, c) = x[flat_dof(u, idx, c)];
  return s;
}

inline Vec flat_from_section(const Section& s) {
  const int d = static_cast<int>(s.values.cols());
  Vec x(s.values.rows() * d);
  for (int idx = 0; idx < s.values.rows(); ++idx)
    for (int c = 0; c < d; ++c) x[idx * d + c] = s.values(idx, c);
  return x;
}

inline JacobiAssembly assemble(const JacobiOperator& op, int dense_cap = 6000) {
  const MapField& u = op.u;
  const DomainGrid& g = *u.grid;
  const int d = u.target_dim();
  const int n_dof = g.num_nodes() * d;
  if (n_dof > dense_cap)
    throw ConfigError("jacobi assembly size " + std::to_string(n_dof) +
                      " exceeds the dense cap " + std::to_string(dense_cap));

  JacobiAssembly asm_out;
  asm_out.n_dof = n_dof;
  asm_out.harmonicity_gate = op.harmonicity_gate;
  asm_out.tension_sup = op.tension_sup;
  asm_out.A = Mat::Zero(n_dof, n_dof);

  parallel_for(n_dof, [&](int col) {
    Vec e = Vec::Zero(n_dof);
    e[col] = 1.0;
    Section basis = section_from_flat(u, e);
    asm_out.A.col(col) = flat_from_section(op.apply(basis));
  });

  asm_out.Wt = Mat::Zero(n_dof, n_dof);
  for (int idx = 0; idx < g.num_nodes(); ++idx) {
    Mat h = u.target->metric_value(u.value_at(idx));
    asm_out.Wt.block(idx * d, idx * d, d, d) = g.weights[idx] * h;
  }
  Eigen::LLT<Mat> llt(asm_out.Wt);
  if (llt.info() != Eigen::Success)
    throw StructuralError("weight matrix not positive definite");

  Mat WA = asm_out.Wt * asm_out.A;
  asm_out.B = 0.5 * (WA + WA.transpose());
  double denom = WA.norm();
  asm_out.asymmetry = denom == 0.0 ? 0.0 : (WA - WA.transpose()).norm() / denom;
  return asm_out;
}

inline JacobiAssembly assemble(const MapField& u, int dense_cap = 6000) {
  return assemble(JacobiOperator(u), dense_cap);
}

// ---------------------------------------------------------------------------
// Spectrum, index, nullity, verdict.
// ---------------------------------------------------------------------------

struct EigenCluster {
  double lambda = 0.0;
  int dim = 0;
};

struct SpectrumReport {
  Vec eigenvalues;  // ascending
  int index = 0;
  int nullity = 0;
  double tau_zero = 0.0;
  double asymmetry = 0.0;
  bool harmonicity_gate = true;
  std::string verdict;  // "weakly_stable" | "unstable"
  std::vector<EigenCluster> clusters;
  int n_dof = 0;
};

inline SpectrumReport spectrum(const JacobiAssembly& asm_in, double tau_zero_rel = 1e-6) {
  Eigen::GeneralizedSelfAdjointEigenSolver<Mat> solver(asm_in.B, asm_in.Wt);
  if (solver.info() != Eigen::Success) {
    Eigen::SelfAdjointEigenSolver<Mat> diag(asm_in.Wt);
    std::string cond = "unavailable";
    if (diag.info() == Eigen::Success)
      cond = std::to_string(diag.eigenvalues().maxCoeff() /
                            std::max(1e-300, diag.eigenvalues().minCoeff()));
    throw NumericError("generalized eigendecomposition failed (weight condition " + cond + ")");
  }
  SpectrumReport rep;
  rep.eigenvalues = solver.eigenvalues();
  rep.n_dof = asm_in.n_dof;
  rep.asymmetry = asm_in.asymmetry;
  rep.harmonicity_gate = asm_in.harmonicity_gate;
  double lam_max = rep.eigenvalues.cwiseAbs().maxCoeff();
  rep.tau_zero = tau_zero_rel * std::max(1.0, lam_max);
  for (int i = 0; i < rep.eigenvalues.size(); ++i) {
    double l = rep.eigenvalues[i];
    if (l < -rep.tau_zero) ++rep.index;
    if (std::abs(l) <= rep.tau_zero) ++rep.nullity;
  }
  rep.verdict = rep.index == 0 ? "weakly_stable" : "unstable";
  // Cluster degenerate eigenvalues for eigenspace-dimension reporting.
  double gap = 10.0 * rep.tau_zero;
  for (int i = 0; i < rep.eigenvalues.size();) {
    int j = i + 1;
    while (j < rep.eigenvalues.size() && rep.eigenvalues[j] - rep.eigenvalues[j - 1] <= gap) ++j;
    EigenCluster c;
    c.dim = j - i;
    double s = 0.0;
    for (int k = i; k < j; ++k) s += rep.eigenvalues[k];
    c.lambda = s / c.dim;
    rep.clusters.push_back(c);
    i = j;
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Random smooth sections (band-limited Fourier fields); used by Monte-Carlo
// stability checks and by tests.
// ---------------------------------------------------------------------------

inline Section random_smooth_section(const MapField& u, std::mt19937_64& rng, int kmax = 3) {
  const DomainGrid& g = *u.grid;
  std::normal_distribution<double> gauss(0.0, 1.0);
  Section s = Section::like(u);
  const int d = u.target_dim();
  auto add_mode = [&](const std::vector<int>& k) {
    double knorm2 = 0.0;
    for (int a = 0; a < g.dims; ++a) knorm2 += k[a] * k[a];
    for (int c = 0; c < d; ++c) {
      double ac = gauss(rng) / (1.0 + knorm2);
      double as = gauss(rng) / (1.0 + knorm2);
      for (int idx = 0; idx < g.num_nodes(); ++idx) {
        double phase = 0.0;
        for (int a = 0; a < g.dims; ++a)
          phase += 2.0 * M_PI * k[a] * g.node_coords(idx, a) / g.lengths[a];
        s.values(idx, c) += ac * std::cos(phase) + as * std::sin(phase);
      }
    }
  };
  if (g.dims == 1) {
    for (int k = 0; k <= kmax; ++k) add_mode({k});
  } else {
    for (int k0 = 0; k0 <= kmax; ++k0)
      for (int k1 = -kmax; k1 <= kmax; ++k1) {
        if (k0 == 0 && k1 < 0) continue;
        add_mode({k0, k1});
      }
  }
  return s;
}

// ---------------------------------------------------------------------------
// Stability verdict combining the curvature certificate (Theorem-4.2 route)
// with the assembled spectrum.
// ---------------------------------------------------------------------------

struct StabilityConfig {
  int certificate_samples = 2000;
  int quadratic_samples = 200;
  std::uint64_t seed = 0;
  double tau_zero_rel = 1e-6;
  int dense_cap = 6000;
};

struct StabilityReport {
  SpectrumReport spec;
  NonpositivityVerdict certificate;
  std::string route;  // "theorem_4_2" or "spectrum"
  bool contradiction = false;
  std::string advice;
  double min_quadratic_form = 0.0;         // min int h(JV,V) / |V|_Wt^2
  double max_integrated_curvature = 0.0;   // max int h(R^u V, V) / |V|_Wt^2
  bool integrated_nonpositive = true;      // Monte-Carlo Definition-4.3 check
  std::string verdict;
  bool harmonicity_gate = true;
};

inline StabilityReport stability_report(const MapField& u, const StabilityConfig& cfg = {}) {
  StabilityReport rep;
  JacobiOperator op(u);
  rep.harmonicity_gate = op.harmonicity_gate;
  rep.certificate = nonpositivity_certificate(*u.target, cfg.certificate_samples, cfg.seed);
  JacobiAssembly asm_out = assemble(op, cfg.dense_cap);
  rep.spec = spectrum(asm_out, cfg.tau_zero_rel);

  auto rng = make_rng(cfg.seed + 1);
  rep.min_quadratic_form = std::numeric_limits<double>::infinity();
  rep.max_integrated_curvature = -std::numeric_limits<double>::infinity();
  for (int s = 0; s < cfg.quadratic_samples; ++s) {
    Section V = random_smooth_section(u, rng);
    double nrm = op.weighted_inner(V, V);
    if (nrm < 1e-14) continue;
    rep.min_quadratic_form = std::min(rep.min_quadratic_form, op.hessian(V, V).value / nrm);
    Section RV = op.curvature_term(V);
    rep.max_integrated_curvature =
        std::max(rep.max_integrated_curvature, op.weighted_inner(RV, V) / nrm);
  }
  rep.integrated_nonpositive = rep.max_integrated_curvature <= 1e-10;

  if (rep.certificate.nonpositive) {
    rep.route = "theorem_4_2";
    if (rep.spec.eigenvalues.size() > 0 && rep.spec.eigenvalues[0] < -rep.spec.tau_zero) {
      rep.contradiction = true;
      rep.advice =
          "target certified non-positively curved but lambda_1 < -tau_zero: "
          "discretization too coarse, refine the grid (double n) and re-run";
      rep.verdict = rep.spec.verdict;
    } else {
      rep.verdict = "weakly_stable";
    }
  } else {
    rep.route = "spectrum";
    rep.verdict = rep.spec.verdict;
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Serialization.
// ---------------------------------------------------------------------------

inline ordered_json spectrum_to_json(const SpectrumReport& rep) {
  ordered_json j;
  j["eigenvalues"] = std::vector<double>(rep.eigenvalues.data(),
                                         rep.eigenvalues.data() + rep.eigenvalues.size());
  j["index"] = rep.index;
  j["nullity"] = rep.nullity;
  j["asymmetry"] = rep.asymmetry;
  j["verdict"] = rep.verdict;
  j["harmonicity_gate"] = rep.harmonicity_gate;
  j["tau_zero"] = rep.tau_zero;
  j["n_dof"] = rep.n_dof;
  ordered_json clusters = ordered_json::array();
  for (const EigenCluster& c : rep.clusters) {
    ordered_json jc;
    jc["lambda"] = c.lambda;
    jc["dim"] = c.dim;
    clusters.push_back(jc);
  }
  j["clusters"] = clusters;
  return j;
}

inline ordered_json stability_to_json(const StabilityReport& rep) {
  ordered_json j;
  j["verdict"] = rep.verdict;
  j["route"] = rep.route;
  j["contradiction"] = rep.contradiction;
  if (!rep.advice.empty()) j["advice"] = rep.advice;
  j["harmonicity_gate"] = rep.harmonicity_gate;
  j["certificate"] = {{"nonpositive", rep.certificate.nonpositive},
                      {"max_normalized", rep.certificate.max_normalized},
                      {"samples", rep.certificate.samples},
                      {"positive_witnesses", rep.certificate.positive_witnesses.size()}};
  j["min_quadratic_form"] = rep.min_quadratic_form;
  j["max_integrated_curvature"] = rep.max_integrated_curvature;
  j["integrated_nonpositive"] = rep.integrated_nonpositive;
  j["spectrum"] = spectrum_to_json(rep.spec);
  return j;
}

inline ordered_json energy_report_to_json(const EnergyReport& rep) {
  ordered_json j;
  j["E"] = rep.E;
  j["E2"] = rep.E2;
  j["tension_sup"] = rep.tension_sup;
  j["converged"] = rep.converged;
  return j;
}

inline void write_spectrum_csv(const SpectrumReport& rep, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot open " + path + " for writing");
  os << "rank,eigenvalue\n";
  os.precision(17);
  for (int i = 0; i < rep.eigenvalues.size(); ++i)
    os << i << "," << rep.eigenvalues[i] << "\n";
}

}  // namespace statmap
