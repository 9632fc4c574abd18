#include "aperture/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace aperture {

std::size_t thread_count() {
  std::size_t requested = 0;
  if (const char* env = std::getenv("APERTURE_THREADS"); env != nullptr && *env != '\0') {
    try {
      requested = static_cast<std::size_t>(std::stoul(env));
    } catch (const std::exception&) {
      requested = 0;
    }
  }
  if (requested == 0) requested = std::thread::hardware_concurrency();
  return std::max<std::size_t>(1, requested);
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
  const std::size_t workers = std::min(thread_count(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto run = [&] {
    for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(n);
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(run);
    run();
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace aperture
