#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "derrd/dataset.hpp"
#include "derrd/model.hpp"
#include "derrd/teacher_cache.hpp"

namespace derrd {

enum class RrdMode {
  relaxed,           // order among uninteresting items ignored
  full_ranking,      // list-wise over all sampled items, no relaxation
  interesting_only,  // list-wise over the interesting items alone
};

struct RrdConfig {
  int num_interesting = 10;      // K
  int num_uninteresting = 10;    // L, defaults to K
  double position_temp = 10.0;   // T
  RrdMode mode = RrdMode::relaxed;
};

// Per-user sample for one epoch: K interesting items in teacher order and L
// uninteresting items drawn from strictly lower teacher ranks (their order
// carries no meaning).
struct DistillSample {
  int user = 0;
  std::vector<int> interesting;
  std::vector<int> uninteresting;
  int epoch = 0;
};

// K distinct items from the teacher's cached list, position k sampled with
// probability proportional to e^{-k/T}, returned in teacher order. Throws if
// the cached list is shorter than K.
std::vector<int> sample_interesting(const TeacherSnapshot& snap, int user,
                                    const RrdConfig& cfg, std::mt19937_64& rng);

// L items uniform over the unobserved items ranked strictly below the worst
// sampled interesting item; items beyond the cached top-C are eligible.
// Shrinks with a warning when fewer than L items are eligible.
std::vector<int> sample_uninteresting(const TeacherSnapshot& snap, int user,
                                      std::span<const int> interesting,
                                      const RrdConfig& cfg,
                                      std::mt19937_64& rng,
                                      const InteractionDataset& ds);

// Fresh samples for every user, deterministic given (seed, epoch) and
// independent across users.
std::vector<DistillSample> resample_epoch(const TeacherSnapshot& snap,
                                          const InteractionDataset& ds,
                                          const RrdConfig& cfg, int epoch,
                                          std::uint64_t seed);

// List-wise distillation loss, mean over the given users' samples:
//   relaxed: -sum_k [ r_k - log( sum_{i>=k} e^{r_i} + sum_j e^{r_j} ) ]
// with k over interesting items in teacher order and j over the uninteresting
// set (summed in a canonical order so the value is invariant to the sampled
// order). Log-sum-exp stabilized; gradients flow to the student only.
double rrd_loss(Model& student, std::span<const DistillSample> samples,
                RrdMode mode, double grad_scale);

}  // namespace derrd
