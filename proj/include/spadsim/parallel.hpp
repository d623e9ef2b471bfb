// Copyright Contributors to the spadsim project.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace spadsim {

/// Worker count: SPADSIM_THREADS when set (>= 1), else hardware concurrency.
inline int default_workers()
{
    if (const char* env = std::getenv("SPADSIM_THREADS")) {
        const int n = std::atoi(env);
        if (n >= 1)
            return n;
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Calls fn(begin, end) over contiguous chunks of [0, n). threads <= 0 means
/// default_workers(). The first exception thrown by any chunk is rethrown.
template <typename Fn>
void parallel_for(std::ptrdiff_t n, int threads, Fn&& fn)
{
    if (threads <= 0)
        threads = default_workers();
    threads = int(std::min<std::ptrdiff_t>(threads, std::max<std::ptrdiff_t>(n, 1)));
    if (threads <= 1) {
        fn(std::ptrdiff_t(0), n);
        return;
    }
    std::exception_ptr error;
    std::mutex m;
    std::vector<std::jthread> pool;
    const std::ptrdiff_t chunk = (n + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
        const std::ptrdiff_t b = t * chunk, e = std::min(n, b + chunk);
        if (b >= e)
            break;
        pool.emplace_back([&, b, e] {
            try {
                fn(b, e);
            } catch (...) {
                std::lock_guard lock(m);
                if (!error)
                    error = std::current_exception();
            }
        });
    }
    pool.clear();
    if (error)
        std::rethrow_exception(error);
}

} // namespace spadsim
