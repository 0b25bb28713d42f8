#pragma once

// Shared aliases, error types, and small numeric helpers used across the
// library. Nothing in here knows about meshes or shapes.

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace lodcut {

using Real = double;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;
using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2() = default;
  Vec2(double x_, double y_) : x(x_), y(y_) {}

  Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  double dot(const Vec2& o) const { return x * o.x + y * o.y; }
  double norm() const { return std::sqrt(x * x + y * y); }
};

// Raised when a shape's construction lengths do not live on the fine lattice.
struct ResolutionError : std::runtime_error {
  explicit ResolutionError(const std::string& msg) : std::runtime_error(msg) {}
};

// Raised (in enforce mode) when active cells share no vertex with an interior cell.
struct AssumptionViolated : std::runtime_error {
  std::vector<int> cells;
  AssumptionViolated(const std::string& msg, std::vector<int> bad)
      : std::runtime_error(msg), cells(std::move(bad)) {}
};

// Raised when a corrector saddle system has no usable unknowns or no solution.
struct SingularSaddle : std::runtime_error {
  explicit SingularSaddle(const std::string& msg) : std::runtime_error(msg) {}
};

// Raised when a linear solve fails or its residual exceeds the pinned tolerance.
struct SolverFailure : std::runtime_error {
  explicit SolverFailure(const std::string& msg) : std::runtime_error(msg) {}
};

struct DimensionMismatch : std::runtime_error {
  explicit DimensionMismatch(const std::string& msg) : std::runtime_error(msg) {}
};

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};

// Ordinary least squares fit y ~ slope*x + intercept. Needs >= 2 distinct x.
inline LineFit linear_fit(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size() || xs.size() < 2)
    throw DimensionMismatch("linear_fit: need >= 2 paired samples");
  const double n = static_cast<double>(xs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  const double det = n * sxx - sx * sx;
  if (std::abs(det) < 1e-30) throw DimensionMismatch("linear_fit: degenerate abscissae");
  LineFit f;
  f.slope = (n * sxy - sx * sy) / det;
  f.intercept = (sy - f.slope * sx) / n;
  return f;
}

// Slope of log(y) against log(x); base cancels out of the slope.
inline double loglog_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
  std::vector<double> lx(xs.size()), ly(ys.size());
  for (size_t i = 0; i < xs.size(); ++i) {
    if (xs[i] <= 0 || ys[i] <= 0) throw DimensionMismatch("loglog_slope: nonpositive sample");
    lx[i] = std::log(xs[i]);
    ly[i] = std::log(ys[i]);
  }
  return linear_fit(lx, ly).slope;
}

// Worker count: LODCUT_WORKERS wins, then hardware_concurrency, floor 1.
inline int default_workers() {
  if (const char* env = std::getenv("LODCUT_WORKERS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return hc > 0 ? static_cast<int>(hc) : 1;
}

// Runs fn(i) for i in [0, n) across `workers` threads. Work items must be
// independent; results must be written to disjoint slots so the outcome does
// not depend on scheduling.
inline void parallel_for(int n, int workers, const std::function<void(int)>& fn) {
  if (n <= 0) return;
  if (workers <= 1 || n == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  const int nthreads = std::min(workers, n);
  std::atomic<int> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  std::mutex err_mutex;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(nthreads));
  for (int t = 0; t < nthreads; ++t) {
    pool.emplace_back([&]() {
      while (true) {
        const int i = next.fetch_add(1);
        if (i >= n || failed.load()) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(err_mutex);
          if (!first_error) first_error = std::current_exception();
          failed.store(true);
          return;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace lodcut
