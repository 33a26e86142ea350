#pragma once

// Deterministic parallel Monte Carlo driver. Work items are indexed; partial
// results land in per-chunk slots and are reduced in index order, so the
// aggregate is bit-identical for any thread count.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <string>
#include <thread>
#include <vector>

namespace fraclat {

inline unsigned thread_count() {
    if (const char* env = std::getenv("FRACLAT_THREADS")) {
        const long n = std::strtol(env, nullptr, 10);
        if (n > 0) return static_cast<unsigned>(n);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? hw : 1;
}

// Runs fn(chunk_index, begin, end) over [0,n) split into fixed-size chunks.
// Chunks are claimed through an atomic counter (work stealing); fn must write
// only to state owned by its chunk index.
inline void parallel_chunks(std::uint64_t n, std::uint64_t chunk_size,
                            const std::function<void(std::size_t, std::uint64_t, std::uint64_t)>& fn,
                            unsigned threads = 0) {
    if (n == 0) return;
    if (chunk_size == 0) chunk_size = 1;
    const std::size_t n_chunks = static_cast<std::size_t>((n + chunk_size - 1) / chunk_size);
    if (threads == 0) threads = thread_count();
    if (threads <= 1 || n_chunks == 1) {
        for (std::size_t c = 0; c < n_chunks; ++c) {
            const std::uint64_t b = c * chunk_size;
            const std::uint64_t e = std::min<std::uint64_t>(b + chunk_size, n);
            fn(c, b, e);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const std::size_t c = next.fetch_add(1);
            if (c >= n_chunks) return;
            const std::uint64_t b = c * chunk_size;
            const std::uint64_t e = std::min<std::uint64_t>(b + chunk_size, n);
            fn(c, b, e);
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
}

struct MeanSE {
    double mean = 0.0;
    double se = 0.0;
    std::uint64_t n = 0;
};

// Mean and standard error of fn(i) over i in [0,n), deterministically reduced.
inline MeanSE mc_mean_se(std::uint64_t n, const std::function<double(std::uint64_t)>& fn,
                         std::uint64_t chunk_size = 4096, unsigned threads = 0) {
    const std::size_t n_chunks = n == 0 ? 0 : static_cast<std::size_t>((n + chunk_size - 1) / chunk_size);
    std::vector<double> sums(n_chunks, 0.0), sqs(n_chunks, 0.0);
    parallel_chunks(n, chunk_size, [&](std::size_t c, std::uint64_t b, std::uint64_t e) {
        double s = 0.0, s2 = 0.0;
        for (std::uint64_t i = b; i < e; ++i) {
            const double v = fn(i);
            s += v;
            s2 += v * v;
        }
        sums[c] = s;
        sqs[c] = s2;
    }, threads);
    double s = 0.0, s2 = 0.0;
    for (std::size_t c = 0; c < n_chunks; ++c) { s += sums[c]; s2 += sqs[c]; }
    MeanSE out;
    out.n = n;
    if (n == 0) return out;
    out.mean = s / static_cast<double>(n);
    if (n > 1) {
        const double var = std::max(0.0, (s2 - s * s / static_cast<double>(n)) / static_cast<double>(n - 1));
        out.se = std::sqrt(var / static_cast<double>(n));
    }
    return out;
}

// Tallies integer counters per work item, e.g. CDF bins over a grid.
// fn(i, bins) increments bins; per-chunk tallies are reduced in order.
inline std::vector<std::uint64_t> mc_tally(
        std::uint64_t n, std::size_t n_bins,
        const std::function<void(std::uint64_t, std::vector<std::uint64_t>&)>& fn,
        std::uint64_t chunk_size = 4096, unsigned threads = 0) {
    const std::size_t n_chunks = n == 0 ? 0 : static_cast<std::size_t>((n + chunk_size - 1) / chunk_size);
    std::vector<std::vector<std::uint64_t>> partial(n_chunks, std::vector<std::uint64_t>(n_bins, 0));
    parallel_chunks(n, chunk_size, [&](std::size_t c, std::uint64_t b, std::uint64_t e) {
        for (std::uint64_t i = b; i < e; ++i) fn(i, partial[c]);
    }, threads);
    std::vector<std::uint64_t> total(n_bins, 0);
    for (const auto& p : partial)
        for (std::size_t k = 0; k < n_bins; ++k) total[k] += p[k];
    return total;
}

}  // namespace fraclat
