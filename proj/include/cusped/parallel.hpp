#pragma once

// Seeded per-trial random streams and a small worker pool.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>

namespace cusped {

// Independent stream for (seed, trial); results do not depend on scheduling.
std::mt19937_64 trial_rng(std::uint64_t seed, std::uint64_t trial);

// Worker count from CUSPED_FLOW_WORKERS, else hardware concurrency.
unsigned worker_count();

// Calls fn(i) for i in [0, n) on up to `workers` threads. The first exception
// thrown by any call is rethrown after all workers finish.
void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& fn);

}  // namespace cusped
