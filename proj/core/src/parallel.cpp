#include "texir/parallel.hpp"

#include <atomic>
#include <thread>
#include <vector>

namespace texir {

static int g_threads = 0;

void set_thread_count(int n) { g_threads = n < 0 ? 0 : n; }

int thread_count() {
    if (g_threads > 0) return g_threads;
    unsigned hc = std::thread::hardware_concurrency();
    return hc > 0 ? int(hc) : 1;
}

void parallel_for(size_t n, const std::function<void(size_t)>& fn) {
    int workers = thread_count();
    if (workers <= 1 || n < 2) {
        for (size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<size_t> next{0};
    const size_t chunk = std::max<size_t>(1, n / (size_t(workers) * 16));
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                size_t begin = next.fetch_add(chunk);
                if (begin >= n) return;
                size_t end = std::min(n, begin + chunk);
                for (size_t i = begin; i < end; ++i) fn(i);
            }
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace texir
