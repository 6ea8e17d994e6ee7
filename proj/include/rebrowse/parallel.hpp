#pragma once
// Minimal fork-join helper. Work items write only to their own output slots,
// so results never depend on the thread count.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <thread>
#include <vector>

namespace rebrowse {

inline int default_thread_count() {
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

// Calls fn(i) for every i in [0, n) using up to n_threads worker threads.
inline void parallel_for(int64_t n, int n_threads, const std::function<void(int64_t)>& fn) {
    if (n <= 0) return;
    n_threads = std::max(1, n_threads);
    n_threads = static_cast<int>(std::min<int64_t>(n_threads, n));
    if (n_threads == 1) {
        for (int64_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> workers;
    workers.reserve(static_cast<size_t>(n_threads));
    for (int t = 0; t < n_threads; ++t) {
        workers.emplace_back([t, n, n_threads, &fn] {
            for (int64_t i = t; i < n; i += n_threads) fn(i);
        });
    }
    for (auto& w : workers) w.join();
}

}  // namespace rebrowse
