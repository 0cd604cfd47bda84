#pragma once

#include <random>
#include <span>
#include <vector>

#include "derrd/dataset.hpp"
#include "derrd/model.hpp"
#include "derrd/teacher_cache.hpp"

namespace derrd {

struct RdConfig {
  int top_k = 10;            // K
  double position_temp = 10.0;  // T
  int warmup_epochs = 30;
  int dyn_negatives = 50;
};

// Per-item weights w_k = a_k * b_k over the teacher's fixed top-K list:
// a_k is the normalized position importance e^{-k/T}; b_k is 1 during the
// warmup epochs and afterwards proportional to the student's estimated rank
// of the item among `dyn_negatives` sampled unobserved items, rescaled to
// mean 1 over the list.
std::vector<double> rd_weights(const Model& student,
                               const InteractionDataset& ds, int user,
                               std::span<const int> top_k, const RdConfig& cfg,
                               int epoch, std::mt19937_64& rng);

// -sum_k w_k log sigma(score(u, pi_k)) with the weights treated as constants.
double rd_loss_with_weights(Model& student, int user,
                            std::span<const int> top_k,
                            std::span<const double> weights, double grad_scale);

// Full per-user RD loss, weights computed internally. Throws on an empty
// list.
double rd_loss(Model& student, const InteractionDataset& ds, int user,
               std::span<const int> top_k, const RdConfig& cfg, int epoch,
               std::mt19937_64& rng, double grad_scale);

}  // namespace derrd
