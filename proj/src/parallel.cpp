#include "rednet/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace rednet {

int worker_count() {
    int hw = static_cast<int>(std::thread::hardware_concurrency());
    if (hw < 1) hw = 1;
    if (const char* env = std::getenv("REDNET_THREADS")) {
        try {
            const int requested = std::stoi(env);
            if (requested >= 1) return requested;
        } catch (...) {
            // Unparseable value: fall through to the hardware default.
        }
    }
    return hw;
}

namespace detail {

void parallel_for_impl(std::size_t count, void (*body)(void*, std::size_t), void* ctx) {
    if (count == 0) return;
    const std::size_t workers =
        std::min<std::size_t>(static_cast<std::size_t>(worker_count()), count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) body(ctx, i);
        return;
    }

    // Static striding: worker t handles indices t, t+workers, ... Outputs
    // are per-index, so the schedule cannot change results.
    std::vector<std::exception_ptr> errors(count);
    std::atomic<bool> failed{false};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t t = 0; t < workers; ++t) {
        pool.emplace_back([&, t] {
            for (std::size_t i = t; i < count; i += workers) {
                if (failed.load(std::memory_order_relaxed)) return;
                try {
                    body(ctx, i);
                } catch (...) {
                    errors[i] = std::current_exception();
                    failed.store(true, std::memory_order_relaxed);
                    return;
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (failed.load()) {
        for (auto& e : errors) {
            if (e) std::rethrow_exception(e);
        }
    }
}

}  // namespace detail
}  // namespace rednet
