#include <algorithm>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include "topic_compose/common.hpp"

namespace topic_compose {

int default_threads() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

void parallel_for(Index count, int threads, const std::function<void(Index)>& body) {
  if (count <= 0) return;
  if (threads <= 0) threads = default_threads();
  const Index workers = std::min<Index>(threads, count);
  if (workers == 1) {
    for (Index i = 0; i < count; ++i) body(i);
    return;
  }

  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto run_chunk = [&](Index begin, Index end) {
    try {
      for (Index i = begin; i < end; ++i) body(i);
    } catch (...) {
      std::lock_guard<std::mutex> lock(failure_mutex);
      if (!failure) failure = std::current_exception();
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers - 1));
  const Index chunk = count / workers;
  const Index extra = count % workers;
  Index begin = 0;
  for (Index w = 0; w < workers; ++w) {
    const Index end = begin + chunk + (w < extra ? 1 : 0);
    if (w + 1 == workers) {
      run_chunk(begin, end);
    } else {
      pool.emplace_back(run_chunk, begin, end);
    }
    begin = end;
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace topic_compose
