#include "pointscene/parallel.h"

#include <atomic>

namespace pointscene {
namespace {
std::atomic<int> g_num_threads{0};
}

void SetNumThreads(int num_threads) {
  g_num_threads.store(std::max(0, num_threads));
}

int NumThreads() {
  const int n = g_num_threads.load();
  if (n > 0) return n;
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace pointscene
