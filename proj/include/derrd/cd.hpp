#pragma once

#include <random>
#include <span>
#include <vector>

#include "derrd/model.hpp"
#include "derrd/teacher_cache.hpp"

namespace derrd {

struct CdConfig {
  int top_k = 10;               // K
  double position_temp = 10.0;  // T
};

// K distinct items drawn from the teacher's cached list without replacement
// with P(rank k) proportional to e^{-k/T}; returned in teacher order. Throws
// when K exceeds the candidate count.
std::vector<int> cd_sample(const TeacherSnapshot& snap, int user,
                           const CdConfig& cfg, std::mt19937_64& rng);

// Per-item soft target: sigma(teacher logit) for NeuMF; min-max normalized
// teacher score over the user's cached list for BPR (flat 0.5 if the list is
// degenerate).
std::vector<double> cd_targets(const TeacherSnapshot& snap, int user,
                               std::span<const int> items);

// Weighted binary cross-entropy of the student's relevance probabilities
// against the teacher-derived targets, summed over the sampled list.
double cd_loss(Model& student, int user, std::span<const int> items,
               std::span<const double> targets, double grad_scale);

}  // namespace derrd
