#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace sdscan {

/// Runs fn(u) for every unit u in [0, units) on up to `threads` workers.
/// Units are claimed dynamically; callers write results into per-unit slots
/// so the merged output does not depend on scheduling. The first exception
/// thrown by any unit is rethrown after all workers join.
template <typename Fn>
void parallel_for(std::size_t units, unsigned threads, Fn&& fn) {
    threads = std::max(1u, threads);
    if (threads == 1 || units <= 1) {
        for (std::size_t u = 0; u < units; ++u) fn(u);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        while (true) {
            auto u = next.fetch_add(1);
            if (u >= units) return;
            try {
                fn(u);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                next.store(units);
            }
        }
    };
    std::vector<std::thread> pool;
    auto n = std::min<std::size_t>(threads, units);
    pool.reserve(n);
    for (std::size_t t = 0; t < n; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

} // namespace sdscan
