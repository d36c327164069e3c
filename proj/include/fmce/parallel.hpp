#pragma once

#include <cstddef>
#include <functional>

namespace fmce {

// Worker cap: FMCE_THREADS env var if set, else hardware concurrency.
// set_worker_cap overrides at runtime (tests); 0 restores the env/default.
int worker_cap();
void set_worker_cap(int cap);

// Runs fn(chunk_index, lo, hi) over [0, count) split into fixed-size
// chunks. Chunk boundaries depend only on `count` and `chunk_size`, never
// on the worker count, so callers that reduce per-chunk partials in chunk
// order get bit-identical results for any FMCE_THREADS value.
void parallel_chunks(size_t count, size_t chunk_size,
                     const std::function<void(size_t, size_t, size_t)>& fn);

inline size_t chunk_count(size_t count, size_t chunk_size) {
    return (count + chunk_size - 1) / chunk_size;
}

}  // namespace fmce
