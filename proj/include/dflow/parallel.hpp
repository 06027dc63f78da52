#pragma once

#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace dflow {

// Runs fn(worker, begin, end) over a partition of [0, count) on `workers`
// threads. Chunks are contiguous and assigned deterministically; workers == 1
// runs inline. Callers that accumulate per-chunk results must reduce them in
// index order themselves if they need worker-count-independent output.
inline void parallel_for(
    std::size_t count, int workers,
    const std::function<void(std::size_t, std::size_t, std::size_t)>& fn) {
  if (count == 0) return;
  std::size_t n_workers =
      workers < 1 ? 1 : std::min<std::size_t>(static_cast<std::size_t>(workers), count);
  if (n_workers == 1) {
    fn(0, 0, count);
    return;
  }
  std::vector<std::thread> threads;
  threads.reserve(n_workers);
  std::size_t chunk = count / n_workers;
  std::size_t rem = count % n_workers;
  std::size_t begin = 0;
  for (std::size_t w = 0; w < n_workers; ++w) {
    std::size_t end = begin + chunk + (w < rem ? 1 : 0);
    threads.emplace_back([&fn, w, begin, end] { fn(w, begin, end); });
    begin = end;
  }
  for (auto& t : threads) t.join();
}

}  // namespace dflow
