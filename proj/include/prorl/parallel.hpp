#ifndef PRORL_PARALLEL_HPP
#define PRORL_PARALLEL_HPP

#include <cstddef>
#include <cstdlib>
#include <thread>
#include <vector>

namespace prorl {

// Worker count: PRORL_THREADS env var if set, otherwise hardware concurrency.
inline unsigned thread_count() {
    if (const char* env = std::getenv("PRORL_THREADS")) {
        const long n = std::strtol(env, nullptr, 10);
        if (n >= 1) return static_cast<unsigned>(n);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

// Runs fn(i) for i in [0, n). Each index is processed exactly once and the
// caller's output slots are indexed by i, so results do not depend on the
// worker count or on scheduling.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn, unsigned workers = 0) {
    if (workers == 0) workers = thread_count();
    if (workers <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, n));
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (std::size_t i = w; i < n; i += workers) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

} // namespace prorl

#endif
