#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace zerovanna {

/// Runs fn(block) for every block in [0, n_blocks) on up to n_threads threads.
/// Blocks are claimed dynamically; callers must write results into per-block slots.
/// The first exception thrown by any block is rethrown on the calling thread.
template <typename Fn>
void parallel_blocks(std::size_t n_blocks, unsigned n_threads, Fn&& fn) {
    if (n_threads <= 1 || n_blocks <= 1) {
        for (std::size_t b = 0; b < n_blocks; ++b) fn(b);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (;;) {
            const std::size_t b = next.fetch_add(1);
            if (b >= n_blocks) return;
            try {
                fn(b);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next.store(n_blocks);
                return;
            }
        }
    };
    const unsigned count = static_cast<unsigned>(std::min<std::size_t>(n_threads, n_blocks));
    std::vector<std::jthread> pool;
    pool.reserve(count);
    for (unsigned t = 0; t < count; ++t) pool.emplace_back(worker);
    pool.clear();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace zerovanna
