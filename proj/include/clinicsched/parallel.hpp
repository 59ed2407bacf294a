#pragma once

#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

#include "clinicsched/errors.hpp"

namespace clinicsched {

// Runs fn(i) for i in [0, n). With workers <= 1 this is a plain loop; otherwise
// indices are block-partitioned over std::thread workers. Callers obtain
// determinism by writing results into a preallocated slot per index and doing
// any reduction serially afterwards, so worker count never changes outcomes.
template <typename Fn>
void parallel_for_index(std::size_t n, int workers, Fn&& fn) {
    CS_REQUIRE(workers >= 1, "worker count must be >= 1");
    if (n == 0) return;
    const std::size_t nw = std::min<std::size_t>(static_cast<std::size_t>(workers), n);
    if (nw <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(nw);
    std::vector<std::exception_ptr> errors(nw);
    const std::size_t chunk = (n + nw - 1) / nw;
    for (std::size_t w = 0; w < nw; ++w) {
        const std::size_t lo = w * chunk;
        const std::size_t hi = std::min(n, lo + chunk);
        pool.emplace_back([&, w, lo, hi] {
            try {
                for (std::size_t i = lo; i < hi; ++i) fn(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace clinicsched
