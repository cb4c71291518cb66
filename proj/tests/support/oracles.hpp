#pragma once

// Independent numerical oracles used by the test suites. Everything here is
// deliberately implemented along different routes than the library code it
// checks: quadrature of the score covariance for Fisher metrics, direct
// stencils for differential operators, Richardson extrapolation for
// convergence orders, and a hand-rolled Rayleigh-quotient eigensolver for
// spectra.

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "statmap/core.hpp"

namespace oracles {

using statmap::Mat;
using statmap::Vec;

// ---------------------------------------------------------------------------
// Fisher information of N(mu, sigma^2) by quadrature of the score outer
// product: I_ij = int (d_i log p)(d_j log p) p dx, substituting x = mu + s z.
// ---------------------------------------------------------------------------

inline Mat fisher_info_normal_quadrature(double mu, double sigma, int n = 4001,
                                         double zmax = 12.0) {
  (void)mu;  // the integral is invariant in mu; kept for signature clarity
  Mat info = Mat::Zero(2, 2);
  const double dz = 2.0 * zmax / (n - 1);
  for (int i = 0; i < n; ++i) {
    double z = -zmax + i * dz;
    // Simpson weights.
    double w = (i == 0 || i == n - 1) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
    double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI);
    // Scores in (mu, sigma): d_mu l = z/sigma, d_sigma l = (z^2 - 1)/sigma.
    double smu = z / sigma;
    double ssig = (z * z - 1.0) / sigma;
    info(0, 0) += w * smu * smu * pdf;
    info(0, 1) += w * smu * ssig * pdf;
    info(1, 0) += w * ssig * smu * pdf;
    info(1, 1) += w * ssig * ssig * pdf;
  }
  return info * (dz / 3.0);
}

// ---------------------------------------------------------------------------
// Derivative and order estimation helpers.
// ---------------------------------------------------------------------------

inline double central_diff(const std::function<double(double)>& f, double x, double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

inline double mixed_second_diff(const std::function<double(double, double)>& f, double hs,
                                double ht) {
  return (f(hs, ht) - f(hs, -ht) - f(-hs, ht) + f(-hs, -ht)) / (4.0 * hs * ht);
}

/// Observed convergence order from errors at resolutions n and 2n.
inline double observed_order(double err_coarse, double err_fine) {
  return std::log2(err_coarse / err_fine);
}

// ---------------------------------------------------------------------------
// Dense symmetric eigensolver by cyclic Jacobi rotations. Used only inside
// the Rayleigh-quotient oracle so the oracle shares no factorization code
// with the library's LAPACK-style path.
// ---------------------------------------------------------------------------

inline void jacobi_eigensolver(Mat a, Vec& evals, Mat& evecs) {
  const int n = static_cast<int>(a.rows());
  evecs = Mat::Identity(n, n);
  for (int sweep = 0; sweep < 200; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off < 1e-28 * std::max(1.0, a.norm() * a.norm())) break;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) {
        if (std::abs(a(p, q)) < 1e-300) continue;
        double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        double t = (theta >= 0.0 ? 1.0 : -1.0) /
                   (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        double c = 1.0 / std::sqrt(t * t + 1.0);
        double s = t * c;
        Eigen::JacobiRotation<double> rot(c, s);
        a.applyOnTheLeft(p, q, rot.adjoint());
        a.applyOnTheRight(p, q, rot);
        evecs.applyOnTheRight(p, q, rot);
      }
  }
  evals = a.diagonal();
  // Sort ascending with eigenvectors.
  std::vector<int> perm(n);
  for (int i = 0; i < n; ++i) perm[i] = i;
  std::sort(perm.begin(), perm.end(), [&](int i, int j) { return evals[i] < evals[j]; });
  Vec ev(n);
  Mat vv(n, n);
  for (int i = 0; i < n; ++i) {
    ev[i] = evals[perm[i]];
    vv.col(i) = evecs.col(perm[i]);
  }
  evals = ev;
  evecs = vv;
}

// ---------------------------------------------------------------------------
// Brute-force smallest eigenvalues of the pencil B x = lambda Wt x by block
// Rayleigh-quotient minimization over random subspaces: steepest-descent
// directions are appended to the block and a Rayleigh-Ritz step (via the
// Jacobi solver above) keeps the best k Ritz pairs. Only matrix-vector
// products with B and Wt are used.
// ---------------------------------------------------------------------------

struct RqOptions {
  int block = 10;
  int iters = 3000;
  double tol = 1e-11;
  std::uint64_t seed = 1234;
};

inline Vec rq_smallest_eigenvalues(const std::function<Vec(const Vec&)>& applyB,
                                   const std::function<Vec(const Vec&)>& applyWt, int n,
                                   int want, RqOptions opt = {}) {
  const int k = std::max(opt.block, want + 3);
  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  auto orthonormalize = [&](Mat& X) {
    // Gram-Schmidt in the Wt inner product.
    for (int c = 0; c < X.cols(); ++c) {
      for (int rep = 0; rep < 2; ++rep)
        for (int b = 0; b < c; ++b) {
          double proj = X.col(b).dot(applyWt(X.col(c)));
          X.col(c) -= proj * X.col(b);
        }
      double nrm = std::sqrt(std::max(1e-300, X.col(c).dot(applyWt(X.col(c)))));
      if (nrm < 1e-12) {
        for (int r = 0; r < n; ++r) X(r, c) = gauss(rng);
        double nn = std::sqrt(X.col(c).dot(applyWt(X.col(c))));
        X.col(c) /= nn;
      } else {
        X.col(c) /= nrm;
      }
    }
  };

  Mat X(n, k);
  for (int c = 0; c < k; ++c)
    for (int r = 0; r < n; ++r) X(r, c) = gauss(rng);
  orthonormalize(X);

  Vec prev = Vec::Constant(want, 1e300);
  for (int it = 0; it < opt.iters; ++it) {
    // Residual (steepest descent) directions: R = B X - Wt X diag(rho).
    Mat BX(n, k), WX(n, k);
    for (int c = 0; c < k; ++c) {
      BX.col(c) = applyB(X.col(c));
      WX.col(c) = applyWt(X.col(c));
    }
    Vec rho(k);
    for (int c = 0; c < k; ++c) rho[c] = X.col(c).dot(BX.col(c));
    Mat R = BX - WX * rho.asDiagonal();

    Mat S(n, 2 * k);
    S.leftCols(k) = X;
    S.rightCols(k) = R;
    orthonormalize(S);

    // Rayleigh-Ritz on the subspace.
    Mat BS(n, 2 * k);
    for (int c = 0; c < 2 * k; ++c) BS.col(c) = applyB(S.col(c));
    Mat small = S.transpose() * BS;
    small = 0.5 * (small + small.transpose());
    Vec evals;
    Mat evecs;
    jacobi_eigensolver(small, evals, evecs);
    X = S * evecs.leftCols(k);

    Vec cur = evals.head(want);
    double diff = (cur - prev).cwiseAbs().maxCoeff();
    double scale = std::max(1.0, cur.cwiseAbs().maxCoeff());
    if (diff < opt.tol * scale && it > 10) return cur;
    prev = cur;
  }
  return prev;
}

}  // namespace oracles
