#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace dgwr {

//! Worker count: DGWR_THREADS if set to a positive integer, otherwise the
//! hardware concurrency.
inline unsigned
worker_count()
{
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("DGWR_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v > 0)
        return static_cast<unsigned>(v);
    } catch (...) {
    }
  }
  return hw;
}

//! Runs body(i) for i in [0, n). Each index is handled by exactly one
//! worker and writes only its own slot, so results do not depend on the
//! schedule. If bodies throw, the exception of the lowest index is
//! rethrown.
template<class Body>
void
parallel_for(std::size_t n, Body&& body)
{
  const std::size_t workers = std::min<std::size_t>(worker_count(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i)
      body(i);
    return;
  }
  std::vector<std::exception_ptr> errors(n);
  {
    std::vector<std::jthread> pool;
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
  }
  for (auto& e : errors)
    if (e)
      std::rethrow_exception(e);
}

} // namespace dgwr
