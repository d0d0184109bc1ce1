#pragma once
// Deterministic static-chunk parallel loop. Results must be written to
// preallocated per-index slots so assembly order never depends on timing.

#include <atomic>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace fit {

inline std::atomic<int>& default_thread_count() {
    static std::atomic<int> n{0}; // 0 = hardware concurrency
    return n;
}

inline void set_default_threads(int n) { default_thread_count().store(n); }

template <typename Fn>
void parallel_for(int n, Fn&& fn, int n_threads = 0) {
    if (n <= 0) return;
    if (n_threads <= 0) n_threads = default_thread_count().load();
    if (n_threads <= 0) n_threads = static_cast<int>(std::thread::hardware_concurrency());
    if (n_threads <= 1 || n == 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    n_threads = std::min(n_threads, n);
    std::vector<std::thread> workers;
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n_threads), nullptr);
    const int chunk = (n + n_threads - 1) / n_threads;
    for (int t = 0; t < n_threads; ++t) {
        const int lo = t * chunk;
        const int hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        workers.emplace_back([&, t, lo, hi] {
            try {
                for (int i = lo; i < hi; ++i) fn(i);
            } catch (...) {
                errors[static_cast<std::size_t>(t)] = std::current_exception();
            }
        });
    }
    for (auto& w : workers) w.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

} // namespace fit
