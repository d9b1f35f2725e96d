#pragma once

#include <cstdint>
#include <functional>

namespace strata {

// Bounded worker pool over an index range; results must be written to
// per-index slots by the callee. workers <= 0 means hardware concurrency.
void parallel_for(long n_tasks, int workers, const std::function<void(long)>& fn);

int resolve_workers(int requested);  // env STRATA_WORKERS overrides, then hardware

// SplitMix64 step; used to derive independent per-task seeds from a base seed.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

}  // namespace strata
