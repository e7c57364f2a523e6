#include "ivsign/rng.hpp"

#include <atomic>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace ivsign {

std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t index) {
  return mix64(mix64(seed) ^ mix64(index + 0x51a2b3c4d5e6f708ULL));
}

int max_threads() {
  static const int n = [] {
    if (const char* env = std::getenv("IVSIGN_THREADS")) {
      const int v = std::atoi(env);
      if (v > 0) return v;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
  }();
  return n;
}

void for_each_chunk(std::int64_t n_chunks, const std::function<void(std::int64_t)>& fn) {
  const int workers = static_cast<int>(
      std::min<std::int64_t>(max_threads(), n_chunks));
  if (workers <= 1) {
    for (std::int64_t c = 0; c < n_chunks; ++c) fn(c);
    return;
  }
  std::atomic<std::int64_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::int64_t c = next.fetch_add(1, std::memory_order_relaxed);
        if (c >= n_chunks) return;
        fn(c);
      }
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace ivsign
