#ifndef SSMKIT_PARALLEL_HPP
#define SSMKIT_PARALLEL_HPP

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <thread>
#include <vector>

namespace ssmkit {

/// Worker count: SSMKIT_THREADS if set and positive, else the hardware concurrency.
inline std::size_t thread_limit() {
  if (const char* env = std::getenv("SSMKIT_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && v > 0) return static_cast<std::size_t>(v);
  }
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

/// Calls body(i) for i in [0, n). Each index is visited exactly once, so
/// bodies that write only to slot i give schedule-independent results.
/// The first exception (by index) is rethrown after all workers finish.
template <class Body>
void parallel_for(std::size_t n, Body&& body, std::size_t max_threads = thread_limit()) {
  const std::size_t workers = std::min(n, std::max<std::size_t>(1, max_threads));
  if (workers <= 1 || n < 64) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += workers) {
        try {
          body(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace ssmkit

#endif  // SSMKIT_PARALLEL_HPP
