#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace crem {

inline unsigned default_jobs() {
    const unsigned h = std::thread::hardware_concurrency();
    return h ? h : 1;
}

// Runs fn(0), ..., fn(count-1) across up to `jobs` threads (0 = machine
// parallelism) and rethrows the first exception after joining. Each index is
// claimed once; callers keep determinism by writing results into per-index
// slots.
inline void parallel_for_index(std::size_t count, unsigned jobs,
                               const std::function<void(std::size_t)>& fn) {
    if (count == 0)
        return;
    if (jobs == 0)
        jobs = default_jobs();
    if (jobs > count)
        jobs = static_cast<unsigned>(count);
    if (jobs <= 1) {
        for (std::size_t i = 0; i < count; ++i)
            fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mu;
    std::vector<std::thread> pool;
    pool.reserve(jobs);
    for (unsigned t = 0; t < jobs; ++t) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
                if (i >= count)
                    return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lk(error_mu);
                    if (!first_error)
                        first_error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (std::thread& th : pool)
        th.join();
    if (first_error)
        std::rethrow_exception(first_error);
}

} // namespace crem
