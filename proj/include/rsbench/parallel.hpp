// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "rsbench/error.hpp"

namespace rsbench {

/// Worker count from RS_BENCH_WORKERS, else the hardware concurrency.
inline std::size_t worker_count() {
  if (const char* env = std::getenv("RS_BENCH_WORKERS"); env && *env) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (*end != '\0' || v < 1) {
      throw Error(ErrorKind::Config, std::string("RS_BENCH_WORKERS must be a positive integer, got '") + env + "'");
    }
    return static_cast<std::size_t>(v);
  }
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

/// Computes out[i] = fn(i) for i in [0, n) on up to `workers` threads. Results
/// land in index order whatever the scheduling; the first exception (lowest
/// index) is rethrown.
template <typename T, typename Fn>
std::vector<T> parallel_map(std::size_t n, Fn fn, std::size_t workers = worker_count()) {
  std::vector<T> out(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto body = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        out[i] = fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::min(workers, n);
  if (threads <= 1) {
    body();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(body);
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

}  // namespace rsbench
