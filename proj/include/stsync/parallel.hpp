#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace stsync {

/// Worker cap: STIEFEL_SYNC_THREADS if set to a positive integer, otherwise
/// the hardware concurrency (at least 1).
inline std::size_t thread_cap() {
    if (const char* env = std::getenv("STIEFEL_SYNC_THREADS")) {
        try {
            const long v = std::stol(env);
            if (v > 0) return static_cast<std::size_t>(v);
        } catch (const std::exception&) {
        }
    }
    return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

/// Runs fn(i) for i in [0, count) on at most thread_cap() threads.
/// Results are position-indexed, so output order never depends on scheduling.
/// The first exception thrown by any task is rethrown after all workers join.
template <class Fn>
void parallel_for(std::size_t count, Fn&& fn) {
    const std::size_t workers = std::min(thread_cap(), count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::atomic<bool> failed{false};
    auto body = [&] {
        for (std::size_t i = next++; i < count; i = next++) {
            try {
                fn(i);
            } catch (...) {
                if (!failed.exchange(true)) first_error = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(body);
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace stsync
