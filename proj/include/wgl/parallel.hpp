#pragma once

// Execution policy and deterministic chunked reductions shared by the
// OpenMP kernels. Every reduction partitions its index range into fixed-size
// chunks and combines the per-chunk partials in chunk order, so the serial
// and parallel paths produce bit-identical results for any thread count.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include <omp.h>

namespace wgl {

enum class Execution { serial, parallel };

inline constexpr std::size_t kReductionChunk = 4096;

// Neumaier-compensated accumulator.
struct CompensatedSum {
  double sum = 0.0;
  double carry = 0.0;

  void add(double x) {
    const double t = sum + x;
    if (std::fabs(sum) >= std::fabs(x)) {
      carry += (sum - t) + x;
    } else {
      carry += (x - t) + sum;
    }
    sum = t;
  }
  void add(const CompensatedSum& other) {
    add(other.sum);
    add(other.carry);
  }
  double value() const { return sum + carry; }
};

inline std::size_t chunk_count(std::size_t n, std::size_t chunk = kReductionChunk) {
  return (n + chunk - 1) / chunk;
}

// Runs body(begin, end, chunk_index) over fixed chunks of [0, n).
template <class Body>
void for_each_chunk(std::size_t n, Execution exec, Body&& body,
                    std::size_t chunk = kReductionChunk) {
  const auto chunks = static_cast<std::int64_t>(chunk_count(n, chunk));
  if (exec == Execution::parallel) {
#pragma omp parallel for schedule(dynamic, 1)
    for (std::int64_t c = 0; c < chunks; ++c) {
      const std::size_t b = static_cast<std::size_t>(c) * chunk;
      const std::size_t e = std::min(n, b + chunk);
      body(b, e, static_cast<std::size_t>(c));
    }
  } else {
    for (std::int64_t c = 0; c < chunks; ++c) {
      const std::size_t b = static_cast<std::size_t>(c) * chunk;
      const std::size_t e = std::min(n, b + chunk);
      body(b, e, static_cast<std::size_t>(c));
    }
  }
}

// Vector-valued compensated reduction: term(i, acc) adds the contribution of
// index i into acc (width accumulators). Returns the combined sums.
template <class Term>
std::vector<double> chunked_sums(std::size_t n, std::size_t width, Execution exec,
                                 Term&& term) {
  const std::size_t chunks = chunk_count(n);
  std::vector<std::vector<CompensatedSum>> partial(chunks,
                                                   std::vector<CompensatedSum>(width));
  for_each_chunk(n, exec, [&](std::size_t b, std::size_t e, std::size_t c) {
    auto& acc = partial[c];
    for (std::size_t i = b; i < e; ++i) term(i, acc);
  });
  std::vector<CompensatedSum> total(width);
  for (const auto& p : partial) {
    for (std::size_t k = 0; k < width; ++k) total[k].add(p[k]);
  }
  std::vector<double> out(width);
  for (std::size_t k = 0; k < width; ++k) out[k] = total[k].value();
  return out;
}

// Sets the OpenMP worker count; 0 leaves the runtime default.
inline void set_thread_count(int threads) {
  if (threads > 0) omp_set_num_threads(threads);
}

}  // namespace wgl
