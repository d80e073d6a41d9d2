#ifndef WELFARE_PARALLEL_HPP
#define WELFARE_PARALLEL_HPP

#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace welfare {

// Runs fn(begin, end) over a partition of [0, n).  Work items must write to
// disjoint, preallocated slots; results are then independent of the thread
// count, which keeps simulation output reproducible.
inline void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t, std::size_t)>& fn) {
    if (threads <= 1 || n < 2) {
        fn(0, n);
        return;
    }
    std::size_t parts = static_cast<std::size_t>(threads);
    if (parts > n) parts = n;
    std::vector<std::thread> pool;
    pool.reserve(parts);
    std::size_t chunk = (n + parts - 1) / parts;
    for (std::size_t p = 0; p < parts; ++p) {
        std::size_t lo = p * chunk;
        std::size_t hi = lo + chunk < n ? lo + chunk : n;
        if (lo >= hi) break;
        pool.emplace_back([&fn, lo, hi]() { fn(lo, hi); });
    }
    for (auto& t : pool) t.join();
}

} // namespace welfare

#endif
