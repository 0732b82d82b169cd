#pragma once

#include <cstdint>
#include <functional>

namespace bsvie {

// Global worker count, set once from the CLI. 0 = hardware concurrency.
void set_thread_count(int n);
int thread_count();

// Runs fn(lo, hi) over a fixed partition of [0, n) into kChunks pieces.
// The partition does not depend on the worker count, so any floating-point
// work that stays within a chunk is bit-identical for every thread count.
void parallel_for(std::int64_t n, const std::function<void(std::int64_t, std::int64_t)>& fn);

// Chunked variant for deterministic reductions: fn(chunk_index, lo, hi)
// writes partial results into per-chunk slots; the caller combines the
// slots in chunk order afterwards.
inline constexpr int kChunks = 64;
void parallel_chunks(std::int64_t n, const std::function<void(int, std::int64_t, std::int64_t)>& fn);

}  // namespace bsvie
