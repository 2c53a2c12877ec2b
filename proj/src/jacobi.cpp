#include "wgl/jacobi.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <sstream>

#include "wgl/errors.hpp"

namespace wgl {
namespace {

struct Rotation {
  std::size_t p = 0;
  std::size_t q = 0;
  double c = 1.0;
  double s = 0.0;
  bool active = false;
};

// Rutishauser's stable angle for annihilating a(p, q).
Rotation make_rotation(double app, double aqq, double apq, std::size_t p, std::size_t q) {
  Rotation r{p, q, 1.0, 0.0, false};
  if (apq == 0.0) return r;
  const double theta = (aqq - app) / (2.0 * apq);
  double t = 1.0 / (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
  if (theta < 0.0) t = -t;
  r.c = 1.0 / std::sqrt(t * t + 1.0);
  r.s = t * r.c;
  r.active = true;
  return r;
}

double off_diagonal_squared(const std::vector<double>& a, std::size_t n) {
  CompensatedSum s;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j) s.add(a[i * n + j] * a[i * n + j]);
    }
  }
  return s.value();
}

double frobenius_squared(const std::vector<double>& a) {
  CompensatedSum s;
  for (double v : a) s.add(v * v);
  return s.value();
}

void check_input(const std::vector<double>& a, std::size_t n) {
  if (n == 0 || a.size() != n * n) throw ValidationError("jacobi: matrix must be n*n with n >= 1");
}

[[noreturn]] void fail(int sweeps, double off) {
  std::ostringstream msg;
  msg << "jacobi: no convergence after " << sweeps << " sweeps (off-diagonal norm " << off << ")";
  throw NumericalError(msg.str());
}

// Squared off-diagonal target. Rounding leaves entries near eps*||A|| after
// convergence, so the floor grows with n.
double off_target(double frob2, std::size_t n) {
  const double rel = 1e-15 * static_cast<double>(std::max<std::size_t>(n, 1));
  return rel * rel * frob2;
}

}  // namespace

JacobiResult jacobi_eigenvalues(std::vector<double> a, std::size_t n, Execution exec,
                                int max_sweeps) {
  check_input(a, n);
  JacobiResult out;
  const double target = off_target(frobenius_squared(a), n);

  // Round-robin tournament on an even number of players; index n is a bye.
  const std::size_t players = n + (n % 2);
  std::vector<std::size_t> ring(players);
  for (std::size_t i = 0; i < players; ++i) ring[i] = i;
  std::vector<Rotation> rounds(players / 2);

  double off = off_diagonal_squared(a, n);
  while (off > target && n > 1) {
    if (out.sweeps >= max_sweeps) fail(out.sweeps, std::sqrt(off));
    for (std::size_t round = 0; round + 1 < players; ++round) {
      std::size_t active = 0;
      for (std::size_t k = 0; k < players / 2; ++k) {
        std::size_t p = ring[k];
        std::size_t q = ring[players - 1 - k];
        if (p > q) std::swap(p, q);
        if (q >= n) continue;
        const double apq = a[p * n + q];
        if (std::fabs(apq) * std::fabs(apq) <= 1e-40 * target) continue;
        rounds[active++] = make_rotation(a[p * n + p], a[q * n + q], apq, p, q);
      }
      // Row block: rows p, q of every pair are disjoint.
      auto rotate_rows = [&](std::int64_t k) {
        const Rotation& r = rounds[static_cast<std::size_t>(k)];
        double* rp = a.data() + r.p * n;
        double* rq = a.data() + r.q * n;
        for (std::size_t j = 0; j < n; ++j) {
          const double x = rp[j];
          const double y = rq[j];
          rp[j] = r.c * x - r.s * y;
          rq[j] = r.s * x + r.c * y;
        }
      };
      // Column block: each row is updated independently.
      auto rotate_cols = [&](std::int64_t i) {
        double* row = a.data() + static_cast<std::size_t>(i) * n;
        for (std::size_t k = 0; k < active; ++k) {
          const Rotation& r = rounds[k];
          const double x = row[r.p];
          const double y = row[r.q];
          row[r.p] = r.c * x - r.s * y;
          row[r.q] = r.s * x + r.c * y;
        }
      };
      const auto na = static_cast<std::int64_t>(active);
      const auto nn = static_cast<std::int64_t>(n);
      if (exec == Execution::parallel && n >= 128) {
#pragma omp parallel
        {
#pragma omp for schedule(static)
          for (std::int64_t k = 0; k < na; ++k) rotate_rows(k);
#pragma omp for schedule(static)
          for (std::int64_t i = 0; i < nn; ++i) rotate_cols(i);
        }
      } else {
        for (std::int64_t k = 0; k < na; ++k) rotate_rows(k);
        for (std::int64_t i = 0; i < nn; ++i) rotate_cols(i);
      }
      for (std::size_t k = 0; k < active; ++k) {
        a[rounds[k].p * n + rounds[k].q] = 0.0;
        a[rounds[k].q * n + rounds[k].p] = 0.0;
      }
      // Rotate every position except the first.
      const std::size_t last = ring[players - 1];
      for (std::size_t i = players - 1; i > 1; --i) ring[i] = ring[i - 1];
      ring[1] = last;
    }
    ++out.sweeps;
    off = off_diagonal_squared(a, n);
  }
  out.off_norm = std::sqrt(off);
  out.eigenvalues.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.eigenvalues[i] = a[i * n + i];
  return out;
}

JacobiResult jacobi_eigenvalues_cyclic(std::vector<double> a, std::size_t n, int max_sweeps) {
  check_input(a, n);
  JacobiResult out;
  const double target = off_target(frobenius_squared(a), n);
  double off = off_diagonal_squared(a, n);
  while (off > target && n > 1) {
    if (out.sweeps >= max_sweeps) fail(out.sweeps, std::sqrt(off));
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a[p * n + q];
        if (std::fabs(apq) * std::fabs(apq) <= 1e-40 * target) continue;
        const Rotation r = make_rotation(a[p * n + p], a[q * n + q], apq, p, q);
        for (std::size_t k = 0; k < n; ++k) {
          const double x = a[k * n + p];
          const double y = a[k * n + q];
          a[k * n + p] = r.c * x - r.s * y;
          a[k * n + q] = r.s * x + r.c * y;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double x = a[p * n + k];
          const double y = a[q * n + k];
          a[p * n + k] = r.c * x - r.s * y;
          a[q * n + k] = r.s * x + r.c * y;
        }
        a[p * n + q] = 0.0;
        a[q * n + p] = 0.0;
      }
    }
    ++out.sweeps;
    off = off_diagonal_squared(a, n);
  }
  out.off_norm = std::sqrt(off);
  out.eigenvalues.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.eigenvalues[i] = a[i * n + i];
  return out;
}

}  // namespace wgl
