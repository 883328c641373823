#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace lpp {

//! Worker count from LPP_THREADS, else 1.
inline unsigned default_threads() {
    if (const char* env = std::getenv("LPP_THREADS")) {
        try {
            const long v = std::stol(env);
            if (v > 0)
                return static_cast<unsigned>(v);
        } catch (...) {
        }
    }
    return 1;
}

//! Runs fn(r) for r in [0, count) over contiguous chunks on `threads` workers.
//! fn must only write to per-index storage; callers reduce the results in
//! index order afterwards, so output does not depend on the thread count.
template <class Fn>
void for_each_replica(std::int64_t count, unsigned threads, Fn&& fn) {
    if (count <= 0)
        return;
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::min<std::int64_t>(count, 1024))));
    if (threads == 1) {
        for (std::int64_t r = 0; r < count; ++r)
            fn(r);
        return;
    }
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> workers;
    const std::int64_t chunk = (count + threads - 1) / threads;
    for (unsigned w = 0; w < threads; ++w) {
        const std::int64_t lo = w * chunk;
        const std::int64_t hi = std::min(count, lo + chunk);
        if (lo >= hi)
            break;
        workers.emplace_back([&, lo, hi] {
            try {
                for (std::int64_t r = lo; r < hi; ++r)
                    fn(r);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure)
                    failure = std::current_exception();
            }
        });
    }
    for (auto& t : workers)
        t.join();
    if (failure)
        std::rethrow_exception(failure);
}

} // namespace lpp
