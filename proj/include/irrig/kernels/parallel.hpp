#pragma once

#include <exception>
#include <mutex>

namespace irrig::kernels {

/// Serial is the reference path; Parallel spreads independent items over OpenMP threads.
/// Items must not share mutable state, so both paths give bit-identical results.
enum class Exec { Serial, Parallel };

/// Calls f(i) for i in [0, n). The first exception thrown by any item (lowest index
/// under Serial, any under Parallel) is rethrown after the loop.
template <class F>
void for_each_index(Exec exec, int n, F&& f) {
    if (exec == Exec::Serial || n < 2) {
        for (int i = 0; i < n; ++i) f(i);
        return;
    }
    std::exception_ptr error;
    int error_index = n;
    std::mutex guard;
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < n; ++i) {
        try {
            f(i);
        } catch (...) {
            std::lock_guard<std::mutex> lock(guard);
            // Keep the lowest failing index so the error matches the serial path.
            if (i < error_index) {
                error_index = i;
                error = std::current_exception();
            }
        }
    }
    if (error) std::rethrow_exception(error);
}

int thread_count();

}  // namespace irrig::kernels
