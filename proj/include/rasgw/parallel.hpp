#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace rasgw {

namespace detail {
inline std::atomic<unsigned>& worker_thread_count() {
    static std::atomic<unsigned> count{1};
    return count;
}
}  // namespace detail

inline void set_worker_threads(unsigned n) { detail::worker_thread_count() = n == 0 ? 1 : n; }
inline unsigned worker_threads() { return detail::worker_thread_count().load(); }

/// Runs fn(i) for i in [0, count) on up to worker_threads() threads with
/// static contiguous chunks. Work items must be independent; callers keep
/// determinism by writing item i's output to slot i and reducing in index
/// order afterwards.
template <typename Fn>
void parallel_for(std::size_t count, Fn&& fn) {
    const unsigned want = worker_threads();
    if (want <= 1 || count < 2) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    const std::size_t threads = std::min<std::size_t>(want, count);
    std::vector<std::thread> pool;
    pool.reserve(threads);
    std::exception_ptr first_error;
    std::atomic<bool> failed{false};
    const std::size_t chunk = (count + threads - 1) / threads;
    for (std::size_t t = 0; t < threads; ++t) {
        const std::size_t begin = t * chunk;
        const std::size_t end = std::min(count, begin + chunk);
        pool.emplace_back([&, begin, end] {
            try {
                for (std::size_t i = begin; i < end; ++i) fn(i);
            } catch (...) {
                if (!failed.exchange(true)) first_error = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace rasgw
