#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "derrd/dataset.hpp"
#include "derrd/model.hpp"

namespace derrd {

// Frozen teacher: a parameter copy plus, per user, the top-C unobserved items
// (not in train[u]) in strictly descending score order with ascending-id tie
// break. Hidden taps are served from the frozen model.
struct TeacherSnapshot {
  std::unique_ptr<Model> model;
  int cache_size = 500;  // C
  std::vector<std::vector<int>> top_items;      // [user][rank-1]
  std::vector<std::vector<double>> top_scores;  // same shape
  std::uint64_t dataset_checksum = 0;
  std::uint64_t seed = 0;

  int d_t() const { return model->tap_width(); }
  BaseKind base() const { return model->kind(); }

  void user_tap(int u, std::span<double> out) const { model->user_tap(u, out); }
  void item_tap(int i, std::span<double> out) const { model->item_tap(i, out); }
  void pair_tap(int u, int i, std::span<double> out) const {
    model->pair_tap(u, i, out);
  }
};

// Ranks every user's unobserved items under the frozen model and keeps the
// top C. Throws if any user ends up with an empty candidate list.
TeacherSnapshot build_teacher_cache(const Model& teacher,
                                    const InteractionDataset& ds,
                                    int cache_size, std::uint64_t seed);

void save_teacher_cache(const std::string& path, const TeacherSnapshot& snap);

// `model` must be the teacher loaded from its parameter snapshot; the cache
// file is validated against it and the dataset checksum.
TeacherSnapshot load_teacher_cache(const std::string& path,
                                   std::unique_ptr<Model> model,
                                   std::uint64_t expect_checksum);

}  // namespace derrd
