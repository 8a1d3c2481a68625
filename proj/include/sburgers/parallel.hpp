#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <optional>
#include <thread>
#include <utility>
#include <vector>

namespace sburgers {

/// 0 means one worker per hardware thread.
inline std::size_t resolve_threads(std::size_t requested) {
  if (requested > 0) return requested;
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

/// Computes fn(i) for i in [0, n) on `threads` workers and returns the
/// results by index. make_context() is called once per worker so each one
/// owns its scratch objects. The first exception thrown is rethrown.
template <class MakeContext, class Fn>
auto parallel_map(std::size_t n, std::size_t threads, MakeContext make_context, Fn fn) {
  using Context = decltype(make_context());
  using Result = decltype(fn(std::declval<Context&>(), std::size_t{}));
  std::vector<std::optional<Result>> slots(n);
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    try {
      Context ctx = make_context();
      for (std::size_t i = next++; i < n; i = next++) slots[i].emplace(fn(ctx, i));
    } catch (...) {
      std::lock_guard lock(error_mutex);
      if (!error) error = std::current_exception();
      next = n;
    }
  };
  const std::size_t workers = std::min(resolve_threads(threads), std::max<std::size_t>(n, 1));
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  if (error) std::rethrow_exception(error);
  std::vector<Result> out;
  out.reserve(n);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

struct NoContext {};

template <class Fn>
auto parallel_map(std::size_t n, std::size_t threads, Fn fn) {
  return parallel_map(n, threads, [] { return NoContext{}; },
                      [&fn](NoContext&, std::size_t i) { return fn(i); });
}

}  // namespace sburgers
