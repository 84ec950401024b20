#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace mwchaos {

/// Worker count for intra-task parallelism; MWCHAOS_THREADS overrides.
inline unsigned worker_threads()
{
    if (const char* env = std::getenv("MWCHAOS_THREADS")) {
        int n = std::atoi(env);
        if (n > 0) return static_cast<unsigned>(n);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs body(i) for i in [0, n) on worker threads with dynamic scheduling.
/// The first exception thrown by any body is rethrown.
template <typename Index, typename Body>
void parallel_for(Index n, Body&& body)
{
    const unsigned threads = std::min<unsigned>(worker_threads(), static_cast<unsigned>(std::max<Index>(n, 1)));
    if (threads <= 1) {
        for (Index i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<Index> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto work = [&] {
        try {
            for (Index i = next++; i < n; i = next++) body(i);
        } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!error) error = std::current_exception();
            next = n;
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(threads - 1);
    for (unsigned t = 1; t < threads; ++t) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

} // namespace mwchaos
