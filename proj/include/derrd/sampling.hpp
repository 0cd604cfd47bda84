#pragma once

#include <random>
#include <vector>

namespace derrd {

// k distinct positions from {0, ..., n-1}, drawn without replacement with
// P(position) proportional to exp(-(position + 1) / temp), i.e. the ranking
// position importance scheme over a list where position 0 holds rank 1.
// Returned ascending (original list order preserved). Requires k <= n.
std::vector<int> sample_rank_exponential(int n, int k, double temp,
                                         std::mt19937_64& rng);

// k distinct elements drawn uniformly from the pool (partial Fisher-Yates).
// Shrinks to pool.size() when the pool is smaller than k.
std::vector<int> sample_distinct_uniform(std::vector<int> pool, int k,
                                         std::mt19937_64& rng);

}  // namespace derrd
