#pragma once

#include <algorithm>
#include <atomic>
#include <functional>
#include <thread>
#include <vector>

namespace kinpose {

// Runs fn(i) for i in [0,n). Work items must be independent; outputs must be
// written to per-index slots so the result does not depend on worker count.
inline void parallel_for(int n, int workers,
                         const std::function<void(int)>& fn) {
  if (n <= 0) return;
  if (workers <= 1 || n == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  auto run = [&] {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= n) return;
      fn(i);
    }
  };
  std::vector<std::thread> pool;
  const int k = std::min(workers, n);
  pool.reserve(k - 1);
  for (int t = 1; t < k; ++t) pool.emplace_back(run);
  run();
  for (auto& th : pool) th.join();
}

// Sum of term(i) over [0,n) with a fixed chunked accumulation order, so the
// result is bit-identical for any worker count.
template <typename Term>
double deterministic_sum(int n, int workers, Term&& term) {
  constexpr int kChunk = 64;
  const int n_chunks = (n + kChunk - 1) / kChunk;
  std::vector<double> partial(size_t(std::max(n_chunks, 0)), 0.0);
  parallel_for(n_chunks, workers, [&](int c) {
    double s = 0;
    const int end = std::min(n, (c + 1) * kChunk);
    for (int i = c * kChunk; i < end; ++i) s += term(i);
    partial[c] = s;
  });
  double total = 0;
  for (double p : partial) total += p;
  return total;
}

}  // namespace kinpose
