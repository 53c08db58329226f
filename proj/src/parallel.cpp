#include "fpl/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace fpl {

namespace {

std::atomic<unsigned> g_threads{0};

template <typename T>
T pairwise(std::span<const T> v) {
    if (v.empty()) return T{};
    if (v.size() <= 8) {
        T acc{};
        for (const T& x : v) acc += x;
        return acc;
    }
    const std::size_t half = v.size() / 2;
    return pairwise(v.subspan(0, half)) + pairwise(v.subspan(half));
}

}  // namespace

void set_thread_count(unsigned n) { g_threads.store(std::max(1u, n)); }

unsigned thread_count() {
    unsigned n = g_threads.load();
    if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
    return n;
}

void parallel_for(std::size_t n_tasks, const std::function<void(std::size_t)>& task) {
    const std::size_t workers = std::min<std::size_t>(thread_count(), n_tasks);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n_tasks; ++i) task(i);
        return;
    }

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n_tasks) return;
            try {
                task(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next.store(n_tasks);
                return;
            }
        }
    };

    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

double pairwise_sum(std::span<const double> values) { return pairwise(values); }

cplx pairwise_sum(std::span<const cplx> values) { return pairwise(values); }

}  // namespace fpl
