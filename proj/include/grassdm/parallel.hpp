#pragma once

#include "grassdm/types.hpp"

#include <exception>

namespace grassdm {

/// Number of worker threads OpenMP regions will use.
int thread_count();
/// Caps the worker count for subsequent parallel regions; n <= 0 is ignored.
void set_thread_count(int n);

/// Runs fn(i) for i in [0, count) across OpenMP threads.
///
/// Every iteration must write only to its own output slots. If iterations
/// throw, the exception from the lowest index is rethrown after the loop,
/// so the error a caller sees does not depend on scheduling.
template <class Fn>
void parallel_for(Index count, Fn&& fn) {
    std::exception_ptr first_error;
    Index first_index = count;
#pragma omp parallel for schedule(dynamic, 1)
    for (Index i = 0; i < count; ++i) {
        try {
            fn(i);
        } catch (...) {
#pragma omp critical(grassdm_parallel_for_error)
            {
                if (i < first_index) {
                    first_index = i;
                    first_error = std::current_exception();
                }
            }
        }
    }
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace grassdm
