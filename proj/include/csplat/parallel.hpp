#pragma once

#include <atomic>
#include <algorithm>
#include <thread>
#include <vector>

namespace csplat {

namespace detail {
inline std::atomic<int>& threadCount() {
    static std::atomic<int> n{0};  // 0 = use hardware concurrency
    return n;
}
}  // namespace detail

inline void setNumThreads(int n) { detail::threadCount().store(n); }

inline int numThreads() {
    int n = detail::threadCount().load();
    if (n > 0) return n;
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : int(hw);
}

/// Run fn(block) for block = 0..nblocks-1 across the configured worker
/// threads. Block decomposition is fixed by the caller, so any reduction
/// done per block and combined in block order is independent of the
/// worker count.
template <typename Fn>
void parallelBlocks(int nblocks, Fn&& fn) {
    if (nblocks <= 0) return;
    const int workers = std::min(numThreads(), nblocks);
    if (workers <= 1) {
        for (int b = 0; b < nblocks; ++b) fn(b);
        return;
    }
    std::atomic<int> next{0};
    auto body = [&]() {
        for (;;) {
            const int b = next.fetch_add(1);
            if (b >= nblocks) return;
            fn(b);
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(size_t(workers - 1));
    for (int i = 0; i < workers - 1; ++i) pool.emplace_back(body);
    body();
    for (auto& t : pool) t.join();
}

}  // namespace csplat
