#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace whff {

/// Calls fn(first, last) on `threads` contiguous chunks of [0, n) and joins.
/// The first exception thrown by any chunk is rethrown.
template <typename Fn>
void parallel_chunks(std::size_t n, unsigned threads, Fn&& fn) {
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
    if (threads == 1) {
        fn(std::size_t{0}, n);
        return;
    }
    std::vector<std::exception_ptr> errors(threads);
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) {
        const std::size_t first = n * t / threads;
        const std::size_t last = n * (t + 1) / threads;
        pool.emplace_back([&, t, first, last] {
            try {
                fn(first, last);
            } catch (...) {
                errors[t] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

} // namespace whff
