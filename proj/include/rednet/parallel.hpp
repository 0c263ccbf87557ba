#pragma once

#include <cstddef>

namespace rednet {

// Number of workers parallel_for will use: REDNET_THREADS if set (clamped
// to >= 1), otherwise the hardware concurrency.
int worker_count();

namespace detail {
void parallel_for_impl(std::size_t count, void (*body)(void*, std::size_t), void* ctx);
}

// Runs f(0) .. f(count-1), possibly on several threads. Each index must
// write only to its own output slots; the caller decides any combining
// order afterwards, which keeps results independent of the worker count.
// Blocks until all indices ran; the first exception (lowest index) is
// rethrown.
template <typename F>
void parallel_for(std::size_t count, F&& f) {
    detail::parallel_for_impl(
        count,
        [](void* ctx, std::size_t i) { (*static_cast<F*>(ctx))(i); },
        &f);
}

}  // namespace rednet
