#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

namespace derrd {

// Binary implicit-feedback interactions with a per-user leave-one-out split.
// The last two distinct items per user (by file order) are held out: the last
// as test, the one before as validation. Immutable after construction.
struct InteractionDataset {
  int num_users = 0;
  int num_items = 0;
  std::vector<std::vector<int>> train;  // per user, sorted dense item ids
  std::vector<int> val_item;
  std::vector<int> test_item;
  std::vector<std::string> user_raw;  // dense id -> raw id
  std::vector<std::string> item_raw;
  std::map<std::string, int> user_index;  // raw id -> dense id
  std::map<std::string, int> item_index;

  bool in_train(int user, int item) const;
  // item != val/test and not in train[user]
  bool is_eval_negative_candidate(int user, int item) const;
  std::size_t train_interactions() const;

  // FNV-1a 64 over the sorted (user, item) pairs of train + val + test,
  // little-endian uint32 each. Used for reproducibility audits and to refuse
  // mismatched snapshots.
  std::uint64_t split_checksum() const;
};

// Parses a TSV of `user_raw_id \t item_raw_id` lines (duplicates dropped),
// filters users below min_user_interactions and items left with no
// interactions until a fixpoint, rejects users with fewer than 3 distinct
// items (warning), assigns dense ids in first-seen order and applies the
// leave-one-out split. Throws ConfigError on unreadable input or an empty
// result.
InteractionDataset load_interactions(const std::string& path,
                                     int min_user_interactions);

// n items drawn uniformly (with resampling on collision) from the items
// outside train[user] + {val, test}. Throws if no such item exists.
std::vector<int> sample_train_negatives(const InteractionDataset& ds, int user,
                                        int n, std::mt19937_64& rng);

// Per-user evaluation negatives: 5 independent draws of 499 distinct items
// each, disjoint from train[u] + {val, test}. Reproducible per
// (seed, user, repeat).
struct NegativePool {
  static constexpr int kRepeats = 5;
  static constexpr int kDrawSize = 499;
  std::uint64_t seed = 0;
  // [user][repeat] -> item ids
  std::vector<std::array<std::vector<int>, kRepeats>> draws;
};

std::vector<int> sample_eval_negatives(const InteractionDataset& ds,
                                       std::uint64_t seed, int user,
                                       int repeat);

NegativePool build_negative_pool(const InteractionDataset& ds,
                                 std::uint64_t seed);

// Human-readable manifest: entity counts and the split checksum.
std::string dataset_manifest(const InteractionDataset& ds);

}  // namespace derrd
