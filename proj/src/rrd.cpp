#include "derrd/rrd.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <stdexcept>
#include <unordered_set>

#include "derrd/rng.hpp"
#include "derrd/sampling.hpp"

namespace derrd {

std::vector<int> sample_interesting(const TeacherSnapshot& snap, int user,
                                    const RrdConfig& cfg,
                                    std::mt19937_64& rng) {
  const auto& ranked = snap.top_items[user];
  if (cfg.num_interesting > static_cast<int>(ranked.size()))
    throw std::invalid_argument(
        "sample_interesting: cached list shorter than K (cache too small)");
  const std::vector<int> positions =
      sample_rank_exponential(static_cast<int>(ranked.size()),
                              cfg.num_interesting, cfg.position_temp, rng);
  std::vector<int> out;
  out.reserve(positions.size());
  for (int p : positions) out.push_back(ranked[p]);  // ascending = teacher order
  return out;
}

std::vector<int> sample_uninteresting(const TeacherSnapshot& snap, int user,
                                      std::span<const int> interesting,
                                      const RrdConfig& cfg,
                                      std::mt19937_64& rng,
                                      const InteractionDataset& ds) {
  if (cfg.num_uninteresting == 0) return {};
  const auto& ranked = snap.top_items[user];
  // Worst (largest) cached rank among the sampled interesting items.
  int worst = 0;
  {
    std::unordered_set<int> chosen(interesting.begin(), interesting.end());
    for (int k = 0; k < static_cast<int>(ranked.size()); ++k)
      if (chosen.count(ranked[k])) worst = k + 1;
  }

  // Eligible: cached items ranked strictly below `worst`, plus every
  // unobserved item outside the cache (those rank below the top-C cutoff by
  // construction).
  std::vector<int> eligible(ranked.begin() + worst, ranked.end());
  if (static_cast<int>(ranked.size()) == snap.cache_size) {
    std::unordered_set<int> cached(ranked.begin(), ranked.end());
    for (int i = 0; i < ds.num_items; ++i)
      if (!ds.in_train(user, i) && !cached.count(i)) eligible.push_back(i);
  }

  if (static_cast<int>(eligible.size()) < cfg.num_uninteresting)
    std::cerr << "[warn] user " << user << ": only " << eligible.size()
              << " items rank below the sampled interesting items; shrinking L\n";

  // Sample indices and keep the eligible-list order (teacher rank, then
  // beyond-cache items); the full_ranking ablation needs that order.
  std::vector<int> indices(eligible.size());
  for (std::size_t i = 0; i < indices.size(); ++i) indices[i] = static_cast<int>(i);
  std::vector<int> picked =
      sample_distinct_uniform(std::move(indices), cfg.num_uninteresting, rng);
  std::sort(picked.begin(), picked.end());
  std::vector<int> out;
  out.reserve(picked.size());
  for (int idx : picked) out.push_back(eligible[idx]);
  return out;
}

std::vector<DistillSample> resample_epoch(const TeacherSnapshot& snap,
                                          const InteractionDataset& ds,
                                          const RrdConfig& cfg, int epoch,
                                          std::uint64_t seed) {
  std::vector<DistillSample> samples(ds.num_users);
  for (int u = 0; u < ds.num_users; ++u) {
    auto rng = make_rng(derive_seed(seed, "rrd",
                                    static_cast<std::uint64_t>(epoch),
                                    static_cast<std::uint64_t>(u)));
    DistillSample& s = samples[u];
    s.user = u;
    s.epoch = epoch;
    s.interesting = sample_interesting(snap, u, cfg, rng);
    s.uninteresting =
        sample_uninteresting(snap, u, s.interesting, cfg, rng, ds);
  }
  return samples;
}

namespace {

// Plackett-Luce negative log-likelihood over an ordered score list, with
// gradient dL/dr written into dr.
double pl_loss(std::span<const double> r, std::span<double> dr) {
  const int n = static_cast<int>(r.size());
  if (n == 0) return 0.0;
  const double m = *std::max_element(r.begin(), r.end());
  // suffix[k] = sum_{i>=k} e^{r_i - m}
  std::vector<double> suffix(n + 1, 0.0);
  for (int k = n - 1; k >= 0; --k) suffix[k] = suffix[k + 1] + std::exp(r[k] - m);

  double loss = 0.0;
  double inv_acc = 0.0;  // sum over k' <= current of 1 / suffix[k']
  for (int k = 0; k < n; ++k) {
    loss -= r[k] - m - std::log(suffix[k]);
    inv_acc += 1.0 / suffix[k];
    dr[k] = -1.0 + std::exp(r[k] - m) * inv_acc;
  }
  return loss;
}

// Relaxed variant: ordered interesting scores ri, unordered uninteresting
// scores ru entering every denominator.
double relaxed_loss(std::span<const double> ri, std::span<const double> ru,
                    std::span<double> dri, std::span<double> dru) {
  const int k_n = static_cast<int>(ri.size());
  double m = ri.empty() ? 0.0 : *std::max_element(ri.begin(), ri.end());
  for (double v : ru) m = std::max(m, v);

  double unint = 0.0;
  for (double v : ru) unint += std::exp(v - m);

  std::vector<double> suffix(k_n + 1, 0.0);
  for (int k = k_n - 1; k >= 0; --k)
    suffix[k] = suffix[k + 1] + std::exp(ri[k] - m);

  double loss = 0.0;
  double inv_acc = 0.0;
  std::vector<double> inv(k_n);
  for (int k = 0; k < k_n; ++k) {
    const double denom = suffix[k] + unint;
    loss -= ri[k] - m - std::log(denom);
    inv[k] = 1.0 / denom;
    inv_acc += inv[k];
    dri[k] = -1.0 + std::exp(ri[k] - m) * inv_acc;
  }
  for (std::size_t j = 0; j < ru.size(); ++j)
    dru[j] = std::exp(ru[j] - m) * inv_acc;
  return loss;
}

}  // namespace

double rrd_loss(Model& student, std::span<const DistillSample> samples,
                RrdMode mode, double grad_scale) {
  if (samples.empty()) return 0.0;
  const double inv_b = 1.0 / static_cast<double>(samples.size());

  double total = 0.0;
  for (const auto& s : samples) {
    // Canonical order for the uninteresting set keeps the loss bitwise
    // independent of the sampled order.
    std::vector<int> unint(s.uninteresting.begin(), s.uninteresting.end());
    std::sort(unint.begin(), unint.end());

    std::vector<double> ri(s.interesting.size());
    for (std::size_t k = 0; k < ri.size(); ++k)
      ri[k] = student.score(s.user, s.interesting[k]);

    if (mode == RrdMode::relaxed) {
      std::vector<double> ru(unint.size());
      for (std::size_t j = 0; j < ru.size(); ++j)
        ru[j] = student.score(s.user, unint[j]);
      std::vector<double> dri(ri.size()), dru(ru.size());
      total += relaxed_loss(ri, ru, dri, dru);
      for (std::size_t k = 0; k < ri.size(); ++k)
        student.add_score_grad(s.user, s.interesting[k],
                               dri[k] * inv_b * grad_scale);
      for (std::size_t j = 0; j < ru.size(); ++j)
        student.add_score_grad(s.user, unint[j], dru[j] * inv_b * grad_scale);
      continue;
    }

    std::vector<int> items(s.interesting.begin(), s.interesting.end());
    if (mode == RrdMode::full_ranking) {
      // Uninteresting items enter the ordered product as sampled (teacher
      // order); all of them rank below every interesting item by construction.
      items.insert(items.end(), s.uninteresting.begin(), s.uninteresting.end());
    }
    std::vector<double> r(items.size()), dr(items.size());
    for (std::size_t k = 0; k < items.size(); ++k)
      r[k] = k < ri.size() ? ri[k] : student.score(s.user, items[k]);
    total += pl_loss(r, dr);
    for (std::size_t k = 0; k < items.size(); ++k)
      student.add_score_grad(s.user, items[k], dr[k] * inv_b * grad_scale);
  }
  return total * inv_b;
}

}  // namespace derrd
