#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace fblab {

/// Worker count for node-parallel phases. Reads FB_LAB_THREADS; defaults to
/// the hardware concurrency. Numerical results never depend on this value.
int worker_count();

/// Static block partition of [0, n) over worker_count() threads.
/// body(begin, end) must only write to locations owned by its block.
template <class Body>
void parallel_for(std::size_t n, Body&& body, std::size_t serial_cutoff = 8192) {
    const auto workers = static_cast<std::size_t>(worker_count());
    if (workers <= 1 || n < serial_cutoff) {
        body(std::size_t{0}, n);
        return;
    }
    const std::size_t chunks = std::min(workers, n);
    const std::size_t block = (n + chunks - 1) / chunks;
    std::vector<std::thread> pool;
    pool.reserve(chunks - 1);
    for (std::size_t c = 1; c < chunks; ++c) {
        const std::size_t begin = c * block;
        const std::size_t end = std::min(n, begin + block);
        if (begin >= end) break;
        pool.emplace_back([&body, begin, end] { body(begin, end); });
    }
    body(std::size_t{0}, std::min(n, block));
    for (auto& t : pool) t.join();
}

/// Deterministic reduction: [0, n) is cut into fixed blocks of block_size
/// (independent of the worker count), body(begin, end) returns the block's
/// partial value and partials are summed in block order.
template <class Body>
double parallel_sum(std::size_t n, Body&& body, std::size_t block_size = 4096) {
    const std::size_t blocks = (n + block_size - 1) / block_size;
    std::vector<double> partial(blocks, 0.0);
    parallel_for(
        blocks,
        [&](std::size_t b0, std::size_t b1) {
            for (std::size_t b = b0; b < b1; ++b) {
                partial[b] = body(b * block_size, std::min(n, (b + 1) * block_size));
            }
        },
        2);
    double total = 0.0;
    for (double v : partial) total += v;
    return total;
}

/// Block-wise maximum; order independent.
template <class Body>
double parallel_max(std::size_t n, Body&& body, std::size_t block_size = 4096) {
    const std::size_t blocks = (n + block_size - 1) / block_size;
    std::vector<double> partial(blocks, 0.0);
    parallel_for(
        blocks,
        [&](std::size_t b0, std::size_t b1) {
            for (std::size_t b = b0; b < b1; ++b) {
                partial[b] = body(b * block_size, std::min(n, (b + 1) * block_size));
            }
        },
        2);
    double best = 0.0;
    for (double v : partial) best = std::max(best, v);
    return best;
}

}  // namespace fblab
