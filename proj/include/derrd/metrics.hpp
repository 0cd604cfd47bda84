#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "derrd/dataset.hpp"
#include "derrd/model.hpp"

namespace derrd {

struct RankMetrics {
  double hit = 0.0;   // H: 1 iff position <= cutoff
  double mrr = 0.0;   // M: 1/position on a hit
  double ndcg = 0.0;  // N: log 2 / log(position + 1) on a hit
};

// position is the 1-based rank of the held-out item among its candidates.
RankMetrics rank_metrics(int position, int cutoff);

enum class EvalPhase { validation, test };

struct EvalReport {
  static constexpr std::array<int, 3> kCutoffs{5, 10, 20};
  static constexpr std::array<char, 3> kMetrics{'H', 'M', 'N'};

  EvalPhase phase = EvalPhase::test;
  int repeats = 0;
  // [cutoff][metric][repeat], metric order H, M, N
  std::array<std::array<std::vector<double>, 3>, 3> per_repeat;
  // [user][repeat], 1-based hit position of the held-out item
  std::vector<std::vector<int>> hit_positions;

  double mean(int cutoff, char metric) const;
  // Per-user H@cutoff averaged over repeats (the paired t-test unit).
  std::vector<double> per_user_hit(int cutoff) const;
};

// Ranks the held-out item of `phase` among each repeat's negatives
// (descending score, ascending-id tie break) and averages the metrics over
// users, then over repeats. Side-effect free on a frozen model.
EvalReport evaluate(const Model& m, const InteractionDataset& ds,
                    const NegativePool& pool, EvalPhase phase);

struct EarlyStopDecision {
  bool stop = false;
  int best_epoch = 0;   // 1-based
  double best_value = 0.0;
};

// Stop once no strict improvement over the running best has been seen for
// `patience` successive epochs. history[e-1] is epoch e's validation value.
EarlyStopDecision early_stop(std::span<const double> history, int patience = 30);

// Two-sided paired t-test p-value over equal-length (>= 2) vectors. With
// zero variance of the differences: p = 1 if the mean difference is 0, else
// p = 0 with a warning.
double paired_ttest(std::span<const double> a, std::span<const double> b);

struct LatencyReport {
  double seconds = 0.0;  // median wall time over repeats
  std::size_t params = 0;
  double h5_ratio = 0.0;  // vs. teacher; filled by the report stage
  int repeats = 0;
};

// Median wall time to produce the full ranked list (training items excluded)
// for every user.
LatencyReport bench_latency(const Model& m, const InteractionDataset& ds,
                            int repeats);

// `method,phi,metric,cutoff,repeat,value` rows.
void write_eval_csv(const std::string& path, const std::string& method,
                    double phi, const EvalReport& report);
// `user,repeat,position` rows.
void write_hits_csv(const std::string& path, const EvalReport& report);

}  // namespace derrd
