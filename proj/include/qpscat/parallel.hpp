#pragma once

#include <algorithm>
#include <cstddef>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace qpscat {

inline int& thread_count_ref() {
    static int n = 0; // 0 = library default (all cores)
    return n;
}

inline void set_num_threads(int n) {
    thread_count_ref() = n;
#ifdef _OPENMP
    if (n > 0) omp_set_num_threads(n);
#endif
}

inline int num_threads() {
#ifdef _OPENMP
    int n = thread_count_ref();
    return n > 0 ? n : omp_get_max_threads();
#else
    return 1;
#endif
}

/// Run fn(i) for i in [0, n). Parallel when the trip count is worth it.
template <class F>
void parallel_for(std::ptrdiff_t n, F&& fn, std::ptrdiff_t grain = 64) {
#ifdef _OPENMP
    if (n >= grain && num_threads() > 1) {
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t i = 0; i < n; ++i) fn(i);
        return;
    }
#endif
    (void)grain;
    for (std::ptrdiff_t i = 0; i < n; ++i) fn(i);
}

} // namespace qpscat
