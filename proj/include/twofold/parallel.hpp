#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <optional>
#include <thread>
#include <vector>

namespace twofold {

/// Evaluates fn(i) for i in [0, n) on up to `workers` threads and returns the
/// results in index order. Items are claimed dynamically; nothing is reduced
/// across items, so the output does not depend on the worker count. The first
/// exception thrown by any item is rethrown after all threads join.
template <class Fn>
auto parallel_map(std::size_t n, unsigned workers, Fn&& fn) -> std::vector<decltype(fn(std::size_t{}))> {
  using R = decltype(fn(std::size_t{}));
  std::vector<std::optional<R>> slots(n);
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n);

  auto work = [&] {
    for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
      try {
        slots[i].emplace(fn(i));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };

  const unsigned count = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(n)));
  if (count <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(count);
    for (unsigned k = 0; k < count; ++k) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  std::vector<R> out;
  out.reserve(n);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

}  // namespace twofold
