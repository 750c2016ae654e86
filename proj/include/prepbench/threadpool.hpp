#pragma once

#include <atomic>
#include <cstdlib>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace prepbench {

// Worker count: PREPBENCH_THREADS caps it, hardware concurrency otherwise.
inline int worker_count() {
    if (const char* env = std::getenv("PREPBENCH_THREADS")) {
        const int v = std::atoi(env);
        if (v >= 1) return v;
    }
    const unsigned hc = std::thread::hardware_concurrency();
    return hc >= 1 ? static_cast<int>(hc) : 1;
}

// Runs fn(0..n_jobs-1) over a transient worker pool. Results must be written
// to pre-sized slots indexed by job id, so the output is independent of
// scheduling. If a job throws, the exception with the lowest job index is
// rethrown after all workers drain.
inline void parallel_for(std::size_t n_jobs,
                         const std::function<void(std::size_t)>& fn,
                         int n_threads = worker_count()) {
    if (n_jobs == 0) return;
    if (n_threads <= 1 || n_jobs == 1) {
        for (std::size_t i = 0; i < n_jobs; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(n_jobs);
    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n_jobs) return;
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    std::vector<std::thread> threads;
    const int spawn = static_cast<int>(
        std::min<std::size_t>(static_cast<std::size_t>(n_threads), n_jobs));
    threads.reserve(static_cast<std::size_t>(spawn));
    for (int t = 0; t < spawn; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace prepbench
