#pragma once

#include <thread>
#include <vector>

namespace shla {

/// Deterministic parallel map: results land in index order regardless of the
/// worker count, so outputs never depend on --threads.
template <typename Result, typename Fn>
std::vector<Result> parallel_map(int count, int threads, Fn&& fn) {
  std::vector<Result> out(count);
  if (threads <= 1 || count <= 1) {
    for (int i = 0; i < count; ++i) out[i] = fn(i);
    return out;
  }
  threads = std::min(threads, count);
  std::vector<std::thread> pool;
  for (int w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      for (int i = w; i < count; i += threads) out[i] = fn(i);
    });
  }
  for (auto& t : pool) t.join();
  return out;
}

}  // namespace shla
