#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace rso {

/// Runs fn(i) for i in [0, n) on a small worker pool. Each index is
/// processed exactly once; results must be written to per-index slots so the
/// outcome is independent of the worker count. The first exception thrown by
/// any worker is rethrown on the calling thread.
inline void parallel_for_index(std::size_t n, const std::function<void(std::size_t)>& fn,
                               unsigned max_workers = 0) {
    if (max_workers == 0) {
        const unsigned hw = std::thread::hardware_concurrency();
        max_workers = hw == 0 ? 1 : std::min(hw, 8u);
    }
    const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(max_workers, n));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

} // namespace rso
