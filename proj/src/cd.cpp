#include "derrd/cd.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "derrd/mathutil.hpp"
#include "derrd/sampling.hpp"

namespace derrd {

std::vector<int> cd_sample(const TeacherSnapshot& snap, int user,
                           const CdConfig& cfg, std::mt19937_64& rng) {
  const auto& ranked = snap.top_items[user];
  if (cfg.top_k > static_cast<int>(ranked.size()))
    throw std::invalid_argument("cd_sample: K exceeds cached candidates");
  const std::vector<int> positions = sample_rank_exponential(
      static_cast<int>(ranked.size()), cfg.top_k, cfg.position_temp, rng);
  std::vector<int> out;
  out.reserve(positions.size());
  for (int p : positions) out.push_back(ranked[p]);
  return out;
}

std::vector<double> cd_targets(const TeacherSnapshot& snap, int user,
                               std::span<const int> items) {
  std::vector<double> q(items.size());
  if (snap.base() == BaseKind::neumf) {
    for (std::size_t k = 0; k < items.size(); ++k)
      q[k] = sigmoid(snap.model->score(user, items[k]));
    return q;
  }
  // BPR scores are unbounded; map the cached list's score range onto [0, 1].
  const auto& scores = snap.top_scores[user];
  const auto [lo_it, hi_it] = std::minmax_element(scores.begin(), scores.end());
  const double lo = *lo_it, hi = *hi_it;
  for (std::size_t k = 0; k < items.size(); ++k) {
    const double s = snap.model->score(user, items[k]);
    q[k] = hi - lo > 1e-12 ? std::clamp((s - lo) / (hi - lo), 0.0, 1.0) : 0.5;
  }
  return q;
}

double cd_loss(Model& student, int user, std::span<const int> items,
               std::span<const double> targets, double grad_scale) {
  double loss = 0.0;
  for (std::size_t k = 0; k < items.size(); ++k) {
    const double s = student.score(user, items[k]);
    const double q = targets[k];
    // q log sigma(s) + (1-q) log(1 - sigma(s)), negated
    loss += q * softplus(-s) + (1.0 - q) * softplus(s);
    student.add_score_grad(user, items[k], (sigmoid(s) - q) * grad_scale);
  }
  return loss;
}

}  // namespace derrd
