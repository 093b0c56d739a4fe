#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace degcount {

/// Compensated accumulator. Summation order is whatever the caller uses, so
/// results are reproducible as long as the order is fixed.
class KahanSum {
 public:
  void add(double x) {
    const double y = x - carry_;
    const double t = sum_ + y;
    carry_ = (t - sum_) - y;
    sum_ = t;
  }
  KahanSum& operator+=(double x) {
    add(x);
    return *this;
  }
  double value() const { return sum_; }

 private:
  double sum_ = 0.0;
  double carry_ = 0.0;
};

/// Threads requested by DEGCOUNT_THREADS, else hardware parallelism.
inline unsigned default_thread_count() {
  if (const char* env = std::getenv("DEGCOUNT_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1u : hw;
}

/// Runs fn(block) for block = 0..num_blocks-1 on up to `threads` workers.
/// Blocks are statically assigned round-robin; callers store per-block
/// results and combine them in block order, which makes any reduction
/// independent of the thread count.
template <class Fn>
void for_each_block(std::size_t num_blocks, unsigned threads, Fn&& fn) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(num_blocks, 1))));
  if (threads == 1) {
    for (std::size_t b = 0; b < num_blocks; ++b) fn(b);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      for (std::size_t b = t; b < num_blocks; b += threads) fn(b);
    });
  }
  for (auto& th : pool) th.join();
}

/// Deterministic parallel sum: per-block Kahan partials combined in block order.
template <class BlockFn>
double block_reduce(std::size_t num_blocks, unsigned threads, BlockFn&& block_sum) {
  std::vector<double> partial(num_blocks, 0.0);
  for_each_block(num_blocks, threads, [&](std::size_t b) { partial[b] = block_sum(b); });
  KahanSum total;
  for (double p : partial) total.add(p);
  return total.value();
}

}  // namespace degcount
