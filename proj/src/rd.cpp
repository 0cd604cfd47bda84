#include "derrd/rd.hpp"

#include <cmath>
#include <stdexcept>

#include "derrd/mathutil.hpp"

namespace derrd {

std::vector<double> rd_weights(const Model& student,
                               const InteractionDataset& ds, int user,
                               std::span<const int> top_k, const RdConfig& cfg,
                               int epoch, std::mt19937_64& rng) {
  const int k = static_cast<int>(top_k.size());
  std::vector<double> a(k);
  double total = 0.0;
  for (int i = 0; i < k; ++i) {
    a[i] = std::exp(-(i + 1.0) / cfg.position_temp);
    total += a[i];
  }
  for (double& v : a) v /= total;

  if (epoch <= cfg.warmup_epochs) return a;

  // Ranking discrepancy: items the student already ranks high need little
  // pushing, items it ranks low need more.
  std::vector<double> neg_scores(cfg.dyn_negatives);
  const std::vector<int> negs =
      sample_train_negatives(ds, user, cfg.dyn_negatives, rng);
  for (int j = 0; j < cfg.dyn_negatives; ++j)
    neg_scores[j] = student.score(user, negs[j]);

  std::vector<double> b(k);
  double mean_b = 0.0;
  for (int i = 0; i < k; ++i) {
    const double s = student.score(user, top_k[i]);
    int est_rank = 1;
    for (double ns : neg_scores)
      if (ns > s) ++est_rank;
    b[i] = static_cast<double>(est_rank);
    mean_b += b[i];
  }
  mean_b /= k;
  for (int i = 0; i < k; ++i) a[i] *= b[i] / mean_b;
  return a;
}

double rd_loss_with_weights(Model& student, int user,
                            std::span<const int> top_k,
                            std::span<const double> weights,
                            double grad_scale) {
  if (top_k.empty()) throw std::invalid_argument("rd_loss: empty ranked list");
  double loss = 0.0;
  for (std::size_t i = 0; i < top_k.size(); ++i) {
    const double s = student.score(user, top_k[i]);
    loss -= weights[i] * log_sigmoid(s);
    // d(-log sigma(s))/ds = sigma(s) - 1
    student.add_score_grad(user, top_k[i],
                           weights[i] * (sigmoid(s) - 1.0) * grad_scale);
  }
  return loss;
}

double rd_loss(Model& student, const InteractionDataset& ds, int user,
               std::span<const int> top_k, const RdConfig& cfg, int epoch,
               std::mt19937_64& rng, double grad_scale) {
  const std::vector<double> w =
      rd_weights(student, ds, user, top_k, cfg, epoch, rng);
  return rd_loss_with_weights(student, user, top_k, w, grad_scale);
}

}  // namespace derrd
