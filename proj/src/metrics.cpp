#include "derrd/metrics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>

#include "derrd/errors.hpp"
#include "derrd/stats.hpp"

namespace derrd {

RankMetrics rank_metrics(int position, int cutoff) {
  RankMetrics r;
  if (position >= 1 && position <= cutoff) {
    r.hit = 1.0;
    r.mrr = 1.0 / position;
    r.ndcg = std::log(2.0) / std::log(position + 1.0);
  }
  return r;
}

double EvalReport::mean(int cutoff, char metric) const {
  for (std::size_t c = 0; c < kCutoffs.size(); ++c) {
    if (kCutoffs[c] != cutoff) continue;
    for (std::size_t m = 0; m < kMetrics.size(); ++m) {
      if (kMetrics[m] != metric) continue;
      const auto& v = per_repeat[c][m];
      return std::accumulate(v.begin(), v.end(), 0.0) / v.size();
    }
  }
  throw std::invalid_argument("unknown cutoff/metric");
}

std::vector<double> EvalReport::per_user_hit(int cutoff) const {
  std::vector<double> out(hit_positions.size(), 0.0);
  for (std::size_t u = 0; u < hit_positions.size(); ++u) {
    for (int p : hit_positions[u])
      out[u] += rank_metrics(p, cutoff).hit;
    out[u] /= static_cast<double>(hit_positions[u].size());
  }
  return out;
}

EvalReport evaluate(const Model& m, const InteractionDataset& ds,
                    const NegativePool& pool, EvalPhase phase) {
  EvalReport report;
  report.phase = phase;
  report.repeats = NegativePool::kRepeats;
  report.hit_positions.assign(ds.num_users,
                              std::vector<int>(report.repeats, 0));

  // sums[repeat][cutoff][metric]
  std::vector<std::array<std::array<double, 3>, 3>> sums(report.repeats);
  std::vector<double> scores;
  for (int u = 0; u < ds.num_users; ++u) {
    const int target =
        phase == EvalPhase::validation ? ds.val_item[u] : ds.test_item[u];
    m.scores_for_user(u, scores);
    const double ts = scores[target];
    for (int r = 0; r < report.repeats; ++r) {
      // 1-based rank among {target} + negatives, id tie break.
      int position = 1;
      for (int neg : pool.draws[u][r]) {
        const double ns = scores[neg];
        if (ns > ts || (ns == ts && neg < target)) ++position;
      }
      report.hit_positions[u][r] = position;
      for (std::size_t c = 0; c < EvalReport::kCutoffs.size(); ++c) {
        const RankMetrics rm = rank_metrics(position, EvalReport::kCutoffs[c]);
        sums[r][c][0] += rm.hit;
        sums[r][c][1] += rm.mrr;
        sums[r][c][2] += rm.ndcg;
      }
    }
  }
  for (int r = 0; r < report.repeats; ++r)
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t k = 0; k < 3; ++k)
        report.per_repeat[c][k].push_back(sums[r][c][k] / ds.num_users);
  return report;
}

EarlyStopDecision early_stop(std::span<const double> history, int patience) {
  EarlyStopDecision d;
  if (history.empty()) return d;
  d.best_epoch = 1;
  d.best_value = history[0];
  for (std::size_t e = 2; e <= history.size(); ++e) {
    if (history[e - 1] > d.best_value) {
      d.best_value = history[e - 1];
      d.best_epoch = static_cast<int>(e);
    }
    if (static_cast<int>(e) - d.best_epoch >= patience) {
      d.stop = true;
      return d;
    }
  }
  return d;
}

double paired_ttest(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2)
    throw std::invalid_argument("paired_ttest: need equal lengths >= 2");
  const std::size_t n = a.size();
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += a[i] - b[i];
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i] - mean;
    var += d * d;
  }
  var /= static_cast<double>(n - 1);
  if (var <= 0.0) {
    if (mean == 0.0) return 1.0;
    std::cerr << "[warn] paired t-test with zero variance and nonzero mean\n";
    return 0.0;
  }
  const double t = mean / std::sqrt(var / static_cast<double>(n));
  return student_t_two_sided_p(t, static_cast<double>(n - 1));
}

LatencyReport bench_latency(const Model& m, const InteractionDataset& ds,
                            int repeats) {
  LatencyReport report;
  report.repeats = repeats;
  report.params = param_count(m);

  volatile long long sink = 0;  // keep the ranking work observable
  std::vector<double> times(repeats);
  for (int r = 0; r < repeats; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    for (int u = 0; u < ds.num_users; ++u) {
      const std::vector<int> ranked = full_ranking(m, u, ds.train[u]);
      sink += ranked.front();
    }
    const auto t1 = std::chrono::steady_clock::now();
    times[r] = std::chrono::duration<double>(t1 - t0).count();
  }
  std::sort(times.begin(), times.end());
  report.seconds = times[times.size() / 2];
  return report;
}

void write_eval_csv(const std::string& path, const std::string& method,
                    double phi, const EvalReport& report) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  out << "method,phi,metric,cutoff,repeat,value\n";
  out.precision(10);
  for (std::size_t c = 0; c < EvalReport::kCutoffs.size(); ++c)
    for (std::size_t k = 0; k < EvalReport::kMetrics.size(); ++k)
      for (int r = 0; r < report.repeats; ++r)
        out << method << "," << phi << "," << EvalReport::kMetrics[k] << ","
            << EvalReport::kCutoffs[c] << "," << r << ","
            << report.per_repeat[c][k][r] << "\n";
}

void write_hits_csv(const std::string& path, const EvalReport& report) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  out << "user,repeat,position\n";
  for (std::size_t u = 0; u < report.hit_positions.size(); ++u)
    for (std::size_t r = 0; r < report.hit_positions[u].size(); ++r)
      out << u << "," << r << "," << report.hit_positions[u][r] << "\n";
}

}  // namespace derrd
