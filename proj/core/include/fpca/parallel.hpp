#pragma once

#include <atomic>
#include <functional>
#include <thread>
#include <vector>

namespace fpca::detail {

// Runs fn(0..n_items-1) on up to `width` threads.  Items are claimed from an
// atomic counter; callers own determinism by writing to pre-indexed slots.
inline void parallel_for(int width, int n_items, const std::function<void(int)>& fn) {
    if (n_items <= 0) return;
    if (width <= 1 || n_items == 1) {
        for (int i = 0; i < n_items; ++i) fn(i);
        return;
    }
    const int workers = std::min(width, n_items);
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    std::exception_ptr error;
    std::atomic<bool> failed{false};
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const int i = next.fetch_add(1);
                if (i >= n_items || failed.load()) return;
                try {
                    fn(i);
                } catch (...) {
                    if (!failed.exchange(true)) error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failed.load() && error) std::rethrow_exception(error);
}

} // namespace fpca::detail
