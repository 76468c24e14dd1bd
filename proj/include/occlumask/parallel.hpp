#pragma once

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace occlumask {

/// Worker count: OCCLUMASK_THREADS if set to a positive integer, else hardware concurrency.
inline unsigned thread_count() {
    if (const char* env = std::getenv("OCCLUMASK_THREADS")) {
        char* end = nullptr;
        long n = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && n > 0) return static_cast<unsigned>(n);
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1u : hw;
}

namespace detail {
inline thread_local bool in_parallel_region = false;
}

/// Runs fn(i) for i in [0, n). Each index is handled exactly once, so results
/// written to per-index slots are independent of the schedule. The first
/// exception thrown by any worker is rethrown on the calling thread.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn, unsigned threads = thread_count()) {
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n)));
    // Nested calls run serially on the worker that issued them.
    if (threads <= 1 || detail::in_parallel_region) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) {
        pool.emplace_back([&, t] {
            detail::in_parallel_region = true;
            for (std::size_t i = t; i < n; i += threads) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace occlumask
