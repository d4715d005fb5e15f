#pragma once

#include <cstdint>
#include <cstdlib>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace pegfit {

// Worker count resolution: explicit flag > PEGFIT_WORKERS env > OpenMP default.
inline int default_workers() {
    if (const char* env = std::getenv("PEGFIT_WORKERS")) {
        int w = std::atoi(env);
        if (w >= 1) return w;
    }
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

// Data-parallel loop over [0, n). Each iteration must write only to its own
// output slot; under that contract results are bitwise identical for any
// worker count. workers <= 1 runs the plain serial loop (the reference path
// the tests compare against).
template <class F>
void parallel_for(std::int64_t n, int workers, F&& body) {
    if (workers <= 1) {
        for (std::int64_t i = 0; i < n; ++i) body(i);
        return;
    }
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 1) num_threads(workers)
    for (std::int64_t i = 0; i < n; ++i) body(i);
#else
    for (std::int64_t i = 0; i < n; ++i) body(i);
#endif
}

// Deterministic parallel sum-accumulation: items are grouped into fixed-size
// blocks, each block is accumulated serially in item order, and block results
// are folded serially in block order. The float result is therefore
// independent of the worker count.
//
// per_item(buffer, i) adds item i's contribution into buffer (a
// std::vector<double> of size dim, zero-initialized).
template <class F>
void blocked_accumulate(std::int64_t n, int workers, int block_size,
                        std::vector<double>& accum, F&& per_item) {
    if (n <= 0) return;
    std::int64_t nblocks = (n + block_size - 1) / block_size;
    std::vector<std::vector<double>> partial(static_cast<std::size_t>(nblocks));
    parallel_for(nblocks, workers, [&](std::int64_t b) {
        std::vector<double>& buf = partial[static_cast<std::size_t>(b)];
        buf.assign(accum.size(), 0.0);
        std::int64_t lo = b * block_size;
        std::int64_t hi = lo + block_size < n ? lo + block_size : n;
        for (std::int64_t i = lo; i < hi; ++i) per_item(buf, i);
    });
    for (std::int64_t b = 0; b < nblocks; ++b) {
        const std::vector<double>& buf = partial[static_cast<std::size_t>(b)];
        for (std::size_t j = 0; j < accum.size(); ++j) accum[j] += buf[j];
    }
}

}  // namespace pegfit
