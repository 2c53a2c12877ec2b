#include "wgl/linalg.hpp"

#include <cmath>
#include <cstdint>
#include <utility>

#include "wgl/errors.hpp"

namespace wgl {

DenseMatrix DenseMatrix::identity(std::size_t n) {
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

std::vector<double> DenseMatrix::multiply(std::span<const double> x) const {
  if (x.size() != cols_) throw ValidationError("DenseMatrix::multiply: size mismatch");
  std::vector<double> y(rows_, 0.0);
  for (std::size_t i = 0; i < rows_; ++i) {
    double s = 0.0;
    const auto r = row(i);
    for (std::size_t j = 0; j < cols_; ++j) s += r[j] * x[j];
    y[i] = s;
  }
  return y;
}

double DenseMatrix::norm1() const {
  std::vector<double> colsum(cols_, 0.0);
  for (std::size_t i = 0; i < rows_; ++i) {
    const auto r = row(i);
    for (std::size_t j = 0; j < cols_; ++j) colsum[j] += std::fabs(r[j]);
  }
  double best = 0.0;
  for (double c : colsum) best = std::max(best, c);
  return best;
}

LuFactorization::LuFactorization(DenseMatrix a, Execution exec) : lu_(std::move(a)) {
  if (lu_.rows() != lu_.cols()) throw ValidationError("LU: matrix must be square");
  const std::size_t n = lu_.rows();
  norm1_ = lu_.norm1();
  piv_.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t p = k;
    double best = std::fabs(lu_(k, k));
    for (std::size_t i = k + 1; i < n; ++i) {
      const double v = std::fabs(lu_(i, k));
      if (v > best) {
        best = v;
        p = i;
      }
    }
    piv_[k] = p;
    if (best == 0.0) throw NumericalError("LU: matrix is singular to working precision");
    if (p != k) {
      auto rk = lu_.row(k);
      auto rp = lu_.row(p);
      for (std::size_t j = 0; j < n; ++j) std::swap(rk[j], rp[j]);
    }
    const double inv_pivot = 1.0 / lu_(k, k);
    const auto pivot_row = lu_.row(k);
    const auto first = static_cast<std::int64_t>(k + 1);
    const auto last = static_cast<std::int64_t>(n);
    auto update = [&](std::int64_t ii) {
      auto r = lu_.row(static_cast<std::size_t>(ii));
      const double l = r[k] * inv_pivot;
      r[k] = l;
      if (l == 0.0) return;
      for (std::size_t j = k + 1; j < n; ++j) r[j] -= l * pivot_row[j];
    };
    if (exec == Execution::parallel && n - k > 64) {
#pragma omp parallel for schedule(static)
      for (std::int64_t i = first; i < last; ++i) update(i);
    } else {
      for (std::int64_t i = first; i < last; ++i) update(i);
    }
  }
}

std::vector<double> LuFactorization::solve(std::span<const double> b) const {
  const std::size_t n = size();
  if (b.size() != n) throw ValidationError("LU solve: size mismatch");
  std::vector<double> x(b.begin(), b.end());
  for (std::size_t k = 0; k < n; ++k) {
    if (piv_[k] != k) std::swap(x[k], x[piv_[k]]);
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = lu_.row(i);
    double s = x[i];
    for (std::size_t j = 0; j < i; ++j) s -= r[j] * x[j];
    x[i] = s;
  }
  for (std::size_t i = n; i-- > 0;) {
    const auto r = lu_.row(i);
    double s = x[i];
    for (std::size_t j = i + 1; j < n; ++j) s -= r[j] * x[j];
    x[i] = s / r[i];
  }
  return x;
}

std::vector<double> LuFactorization::solve_transposed(std::span<const double> b) const {
  // A = P^T L U  =>  A^T y = b  <=>  U^T L^T P y = b.
  const std::size_t n = size();
  if (b.size() != n) throw ValidationError("LU solve: size mismatch");
  std::vector<double> y(b.begin(), b.end());
  for (std::size_t i = 0; i < n; ++i) {
    double s = y[i];
    for (std::size_t j = 0; j < i; ++j) s -= lu_(j, i) * y[j];
    y[i] = s / lu_(i, i);
  }
  for (std::size_t i = n; i-- > 0;) {
    double s = y[i];
    for (std::size_t j = i + 1; j < n; ++j) s -= lu_(j, i) * y[j];
    y[i] = s;
  }
  for (std::size_t k = n; k-- > 0;) {
    if (piv_[k] != k) std::swap(y[k], y[piv_[k]]);
  }
  return y;
}

double LuFactorization::condition_estimate() const {
  const std::size_t n = size();
  std::vector<double> x(n, 1.0 / static_cast<double>(n));
  double estimate = 0.0;
  for (int iter = 0; iter < 5; ++iter) {
    const auto y = solve(x);
    double ynorm = 0.0;
    for (double v : y) ynorm += std::fabs(v);
    if (iter > 0 && ynorm <= estimate) break;
    estimate = ynorm;
    std::vector<double> xi(n);
    for (std::size_t i = 0; i < n; ++i) xi[i] = y[i] >= 0.0 ? 1.0 : -1.0;
    const auto z = solve_transposed(xi);
    std::size_t jmax = 0;
    double zmax = -1.0;
    double ztx = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      ztx += z[i] * x[i];
      if (std::fabs(z[i]) > zmax) {
        zmax = std::fabs(z[i]);
        jmax = i;
      }
    }
    if (zmax <= ztx) break;
    std::fill(x.begin(), x.end(), 0.0);
    x[jmax] = 1.0;
  }
  // Higham's alternating-sign probe guards against the greedy iteration stalling.
  std::vector<double> alt(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double sign = (i % 2 == 0) ? 1.0 : -1.0;
    alt[i] = sign * (1.0 + static_cast<double>(i) / static_cast<double>(n > 1 ? n - 1 : 1));
  }
  const auto w = solve(alt);
  double wnorm = 0.0;
  for (double v : w) wnorm += std::fabs(v);
  estimate = std::max(estimate, 2.0 * wnorm / (3.0 * static_cast<double>(n)));
  return estimate * norm1_;
}

}  // namespace wgl
