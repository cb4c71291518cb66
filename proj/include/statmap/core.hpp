#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace statmap {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// ---------------------------------------------------------------------------
// Error taxonomy. The CLI maps these onto exit codes, so the distinction
// between configuration, domain, structural and numeric failures is load
// bearing and not just documentation.
// ---------------------------------------------------------------------------

/// Bad user input: unknown descriptor, invalid resolution, schema violation.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// A point (or a finite-difference stencil around it) left a chart's
/// validity region.
struct DomainViolation : std::runtime_error {
  explicit DomainViolation(const std::string& what) : std::runtime_error(what) {}
};

/// A structural invariant of a statistical manifold failed (non-symmetric or
/// indefinite metric, Codazzi violation). Never silently repaired.
struct StructuralError : std::runtime_error {
  explicit StructuralError(const std::string& what) : std::runtime_error(what) {}
};

/// Numerical failure: eigendecomposition breakdown, divergent flow, ...
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

struct FlowDivergenceError : NumericError {
  explicit FlowDivergenceError(const std::string& what) : NumericError(what) {}
};

// ---------------------------------------------------------------------------
// Small dense tensors. Rank three and four are all the chart calculus needs;
// dimensions stay <= 3 so flat storage is fine.
// ---------------------------------------------------------------------------

class Tensor3 {
 public:
  Tensor3() = default;
  explicit Tensor3(int d) : d_(d), a_(static_cast<size_t>(d) * d * d, 0.0) {}

  int dim() const { return d_; }
  double& operator()(int i, int j, int k) { return a_[idx(i, j, k)]; }
  double operator()(int i, int j, int k) const { return a_[idx(i, j, k)]; }

  Tensor3& operator+=(const Tensor3& o) {
    for (size_t t = 0; t < a_.size(); ++t) a_[t] += o.a_[t];
    return *this;
  }
  Tensor3& operator-=(const Tensor3& o) {
    for (size_t t = 0; t < a_.size(); ++t) a_[t] -= o.a_[t];
    return *this;
  }
  Tensor3& operator*=(double s) {
    for (double& v : a_) v *= s;
    return *this;
  }
  friend Tensor3 operator-(Tensor3 a, const Tensor3& b) { return a -= b; }
  friend Tensor3 operator+(Tensor3 a, const Tensor3& b) { return a += b; }
  friend Tensor3 operator*(double s, Tensor3 a) { return a *= s; }

  double max_abs() const {
    double m = 0.0;
    for (double v : a_) m = std::max(m, std::abs(v));
    return m;
  }

 private:
  size_t idx(int i, int j, int k) const {
    return (static_cast<size_t>(i) * d_ + j) * d_ + k;
  }
  int d_ = 0;
  std::vector<double> a_;
};

class Tensor4 {
 public:
  Tensor4() = default;
  explicit Tensor4(int d) : d_(d), a_(static_cast<size_t>(d) * d * d * d, 0.0) {}

  int dim() const { return d_; }
  double& operator()(int i, int j, int k, int l) { return a_[idx(i, j, k, l)]; }
  double operator()(int i, int j, int k, int l) const { return a_[idx(i, j, k, l)]; }

  Tensor4& operator-=(const Tensor4& o) {
    for (size_t t = 0; t < a_.size(); ++t) a_[t] -= o.a_[t];
    return *this;
  }
  friend Tensor4 operator-(Tensor4 a, const Tensor4& b) { return a -= b; }

  double max_abs() const {
    double m = 0.0;
    for (double v : a_) m = std::max(m, std::abs(v));
    return m;
  }

 private:
  size_t idx(int i, int j, int k, int l) const {
    return ((static_cast<size_t>(i) * d_ + j) * d_ + k) * d_ + l;
  }
  int d_ = 0;
  std::vector<double> a_;
};

// ---------------------------------------------------------------------------
// Randomness. Everything that samples takes an explicit seed so that reports
// are reproducible; the quasi-random lattice is used where the spec asks for
// deterministic point clouds without a seed.
// ---------------------------------------------------------------------------

inline std::mt19937_64 make_rng(std::uint64_t seed) { return std::mt19937_64(seed); }

/// Additive-recurrence (generalized golden ratio) lattice in [0,1)^d.
inline std::vector<Vec> quasirandom_points(int d, int count) {
  // Plastic-constant generalization; standard low-discrepancy recipe.
  double phi = 2.0;
  for (int it = 0; it < 64; ++it) phi = std::pow(1.0 + phi, 1.0 / (d + 1));
  std::vector<double> alpha(d);
  for (int k = 0; k < d; ++k) alpha[k] = std::fmod(std::pow(1.0 / phi, k + 1), 1.0);
  std::vector<Vec> pts(count, Vec::Zero(d));
  for (int i = 0; i < count; ++i)
    for (int k = 0; k < d; ++k)
      pts[i][k] = std::fmod(0.5 + alpha[k] * (i + 1), 1.0);
  return pts;
}

// ---------------------------------------------------------------------------
// Periodic helpers.
// ---------------------------------------------------------------------------

/// Minimal representative of `delta` modulo `period` (no-op when period == 0).
inline double wrap_diff(double delta, double period) {
  if (period <= 0.0) return delta;
  return delta - period * std::round(delta / period);
}

/// Wrap a coordinate into [0, period).
inline double wrap_coord(double x, double period) {
  if (period <= 0.0) return x;
  double y = std::fmod(x, period);
  return y < 0.0 ? y + period : y;
}

// ---------------------------------------------------------------------------
// Parallelism. STATMAP_THREADS caps the pool; work items write to
// preallocated slots so results do not depend on the thread count.
// ---------------------------------------------------------------------------

inline int thread_cap() {
  static const int cap = [] {
    unsigned hw = std::thread::hardware_concurrency();
    int n = hw == 0 ? 1 : static_cast<int>(hw);
    if (const char* env = std::getenv("STATMAP_THREADS")) {
      try {
        int m = std::stoi(env);
        if (m >= 1) n = std::min(n, m);
      } catch (...) {
        // ignore malformed values, keep hardware default
      }
    }
    return n;
  }();
  return cap;
}

/// Run fn(i) for i in [0, count). Items must be independent.
inline void parallel_for(int count, const std::function<void(int)>& fn) {
  int threads = std::min(thread_cap(), count);
  if (threads <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(threads);
  std::atomic<int> next{0};
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (;;) {
        int i = next.fetch_add(1);
        if (i >= count) return;
        fn(i);
      }
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace statmap
