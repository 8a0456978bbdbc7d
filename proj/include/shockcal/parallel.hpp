// Fork-join helper with a determinism contract: work is cut into chunks
// whose boundaries depend only on the problem size, never on the thread
// count, so any fixed-order reduction over chunk results is reproducible
// for every SHOCKCAL_THREADS setting.

#pragma once

#include <atomic>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace shockcal {

// Worker cap: SHOCKCAL_THREADS if set (>=1), else hardware concurrency.
inline unsigned worker_thread_count() {
    if (const char* env = std::getenv("SHOCKCAL_THREADS")) {
        const long n = std::strtol(env, nullptr, 10);
        if (n >= 1) return static_cast<unsigned>(n);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

// Runs fn(begin, end) over [0, n) in chunks of chunk_size. Each chunk must
// write only to its own output slots; the caller performs any reduction in
// chunk-index order.
template <class Fn>
void parallel_for_chunks(std::size_t n, std::size_t chunk_size, Fn&& fn) {
    if (n == 0) return;
    if (chunk_size == 0) chunk_size = 1;
    const std::size_t n_chunks = (n + chunk_size - 1) / chunk_size;
    const unsigned n_workers =
        static_cast<unsigned>(std::min<std::size_t>(worker_thread_count(), n_chunks));

    if (n_workers <= 1) {
        for (std::size_t c = 0; c < n_chunks; ++c) {
            const std::size_t begin = c * chunk_size;
            fn(begin, std::min(begin + chunk_size, n));
        }
        return;
    }

    std::atomic<std::size_t> next_chunk{0};
    auto work = [&] {
        for (;;) {
            const std::size_t c = next_chunk.fetch_add(1);
            if (c >= n_chunks) return;
            const std::size_t begin = c * chunk_size;
            fn(begin, std::min(begin + chunk_size, n));
        }
    };

    std::vector<std::thread> pool;
    pool.reserve(n_workers - 1);
    for (unsigned i = 0; i + 1 < n_workers; ++i) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();
}

}  // namespace shockcal
