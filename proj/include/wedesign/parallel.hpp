#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace wedesign {

/// Calls fn(i) for every i in [0, count) on up to `parallelism` threads.
/// Work items must write to disjoint outputs; the first exception thrown by
/// any item is rethrown on the calling thread.
template <class Fn>
void parallel_for(std::int64_t count, unsigned parallelism, Fn&& fn)
{
    const unsigned workers =
        static_cast<unsigned>(std::clamp<std::int64_t>(parallelism, 1, std::max<std::int64_t>(count, 1)));
    if (workers <= 1) {
        for (std::int64_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::int64_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    constexpr std::int64_t chunk = 64;
    auto work = [&] {
        try {
            for (;;) {
                const std::int64_t begin = next.fetch_add(chunk);
                if (begin >= count) return;
                const std::int64_t end = std::min(begin + chunk, count);
                for (std::int64_t i = begin; i < end; ++i) fn(i);
            }
        } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
            next.store(count);
        }
    };
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned t = 0; t < workers; ++t) pool.emplace_back(work);
    pool.clear();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace wedesign
