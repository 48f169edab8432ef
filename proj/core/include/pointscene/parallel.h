#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace pointscene {

// Process-wide worker count used by the parallel kernels. 0 selects
// hardware_concurrency().
void SetNumThreads(int num_threads);
int NumThreads();

// Splits [0, n) into at most NumThreads() contiguous chunks and runs
// fn(begin, end, chunk_index) on each. Chunk boundaries depend only on n and
// the thread count, never on scheduling. The first exception thrown by any
// chunk is rethrown on the calling thread.
template <typename Fn>
void ParallelForChunks(size_t n, Fn&& fn, int num_chunks = 0) {
  if (num_chunks <= 0) num_chunks = NumThreads();
  num_chunks = static_cast<int>(
      std::max<size_t>(1, std::min<size_t>(n, static_cast<size_t>(num_chunks))));
  if (num_chunks == 1) {
    fn(size_t{0}, n, 0);
    return;
  }
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> workers;
  workers.reserve(num_chunks);
  for (int c = 0; c < num_chunks; ++c) {
    const size_t begin = n * c / num_chunks;
    const size_t end = n * (c + 1) / num_chunks;
    workers.emplace_back([&, begin, end, c] {
      try {
        fn(begin, end, c);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& w : workers) w.join();
  if (error) std::rethrow_exception(error);
}

template <typename Fn>
void ParallelFor(size_t n, Fn&& fn) {
  ParallelForChunks(n, [&](size_t begin, size_t end, int) {
    for (size_t i = begin; i < end; ++i) fn(i);
  });
}

}  // namespace pointscene
