#pragma once

#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace mcgrad {

// Worker cap from MCGRAD_THREADS; affects speed only, never results
// (contributions are pure functions of (seed, index) and the reduction tree
// is fixed).
inline int worker_count() {
    int hw = static_cast<int>(std::thread::hardware_concurrency());
    if (hw <= 0) hw = 1;
    if (const char* env = std::getenv("MCGRAD_THREADS")) {
        const int cap = std::atoi(env);
        if (cap >= 1 && cap < hw) return cap;
        if (cap >= 1) return cap;
    }
    return hw;
}

// Runs fn(begin, end) over disjoint chunks of [0, n). The first exception is
// captured and rethrown on the calling thread.
template <typename Fn>
void parallel_for(long long n, Fn&& fn) {
    const int workers = std::min<long long>(worker_count(), std::max(1ll, n));
    if (workers == 1 || n < 1024) {
        fn(0ll, n);
        return;
    }
    std::vector<std::thread> pool;
    std::exception_ptr first_error;
    std::mutex error_mutex;
    const long long chunk = (n + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
        const long long lo = w * chunk;
        const long long hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&, lo, hi] {
            try {
                fn(lo, hi);
            } catch (...) {
                std::lock_guard<std::mutex> g(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace mcgrad
