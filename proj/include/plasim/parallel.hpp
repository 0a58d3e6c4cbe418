#pragma once

#include <exception>
#include <thread>
#include <vector>

namespace plasim {

// Static block partition of [0, count) over worker threads. Results must be
// written to disjoint, index-addressed slots so the output is identical for
// any thread count. threads <= 1 runs inline; threads == 0 asks the hardware.
template <typename Fn>
void parallel_for(std::size_t count, int threads, Fn&& fn) {
    if (count == 0) return;
    unsigned n_threads = threads > 0 ? static_cast<unsigned>(threads)
                                     : std::thread::hardware_concurrency();
    if (n_threads == 0) n_threads = 1;
    if (n_threads > count) n_threads = static_cast<unsigned>(count);
    if (n_threads == 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::vector<std::thread> workers;
    std::vector<std::exception_ptr> errors(n_threads);
    const std::size_t chunk = (count + n_threads - 1) / n_threads;
    for (unsigned t = 0; t < n_threads; ++t) {
        const std::size_t begin = t * chunk;
        const std::size_t end = begin + chunk < count ? begin + chunk : count;
        workers.emplace_back([&, t, begin, end] {
            try {
                for (std::size_t i = begin; i < end; ++i) fn(i);
            } catch (...) {
                errors[t] = std::current_exception();
            }
        });
    }
    for (auto& w : workers) w.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

} // namespace plasim
