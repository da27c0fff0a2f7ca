#ifndef KESTEN_PARALLEL_HPP
#define KESTEN_PARALLEL_HPP

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace kesten {

namespace detail {
inline std::atomic<int>& thread_setting() {
    static std::atomic<int> n{0};
    return n;
}
} // namespace detail

/// Worker count for parallel loops; 0 means hardware concurrency.
inline void set_thread_count(int n) { detail::thread_setting() = std::max(0, n); }

inline int thread_count() {
    const int n = detail::thread_setting();
    if (n > 0)
        return n;
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Block size used to carve Monte Carlo work into independent RNG streams.
inline constexpr std::size_t kBlock = 1024;

/// Runs `fn(block_index, begin, end)` over [0, n) cut into fixed blocks of
/// `block` items. The cut does not depend on the worker count, so anything that
/// derives its RNG stream from `block_index` and reduces per-block results in
/// index order is reproducible across thread counts.
template <class Fn>
void for_blocks(std::size_t n, std::size_t block, Fn&& fn) {
    const std::size_t n_blocks = (n + block - 1) / block;
    const int workers = static_cast<int>(std::min<std::size_t>(thread_count(), n_blocks));
    if (workers <= 1) {
        for (std::size_t b = 0; b < n_blocks; ++b)
            fn(b, b * block, std::min(n, (b + 1) * block));
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto work = [&] {
        for (;;) {
            const std::size_t b = next++;
            if (b >= n_blocks)
                return;
            try {
                fn(b, b * block, std::min(n, (b + 1) * block));
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error)
                    error = std::current_exception();
            }
        }
    };
    std::vector<std::jthread> pool;
    for (int t = 0; t < workers; ++t)
        pool.emplace_back(work);
    pool.clear();
    if (error)
        std::rethrow_exception(error);
}

} // namespace kesten

#endif // KESTEN_PARALLEL_HPP
