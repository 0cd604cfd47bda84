#include "derrd/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace derrd {

std::vector<int> sample_rank_exponential(int n, int k, double temp,
                                         std::mt19937_64& rng) {
  if (k > n)
    throw std::invalid_argument("sample_rank_exponential: k exceeds candidates");
  std::vector<double> weight(n);
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    weight[i] = std::exp(-(i + 1.0) / temp);
    total += weight[i];
  }
  std::vector<int> out;
  out.reserve(k);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int draw = 0; draw < k; ++draw) {
    double x = unif(rng) * total;
    int chosen = -1;
    for (int i = 0; i < n; ++i) {
      if (weight[i] <= 0.0) continue;
      x -= weight[i];
      chosen = i;
      if (x <= 0.0) break;
    }
    out.push_back(chosen);
    total -= weight[chosen];
    weight[chosen] = 0.0;
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<int> sample_distinct_uniform(std::vector<int> pool, int k,
                                         std::mt19937_64& rng) {
  const std::size_t want = std::min<std::size_t>(k, pool.size());
  for (std::size_t i = 0; i < want; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
  pool.resize(want);
  return pool;
}

}  // namespace derrd
