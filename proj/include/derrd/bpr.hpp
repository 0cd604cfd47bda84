#pragma once

#include <random>
#include <span>

#include "derrd/model.hpp"

namespace derrd {

// Matrix factorization scored by dot(U[u], V[i]). The last hidden layer is
// the embedding itself, so the taps are the embedding rows.
class BprModel final : public Model {
 public:
  BprModel(int num_users, int num_items, int dim, std::mt19937_64& init_rng);

  BaseKind kind() const override { return BaseKind::bpr; }
  TapKind tap_kind() const override { return TapKind::separate; }
  int num_users() const override { return num_users_; }
  int num_items() const override { return num_items_; }
  int tap_width() const override { return dim_; }
  int dim() const { return dim_; }

  double score(int user, int item) const override;
  void scores_for_user(int user, std::vector<double>& out) const override;
  void add_score_grad(int user, int item, double dscore) override;

  void user_tap(int user, std::span<double> out) const override;
  void item_tap(int item, std::span<double> out) const override;
  void add_user_tap_grad(int user, std::span<const double> dtap) override;
  void add_item_tap_grad(int item, std::span<const double> dtap) override;

  std::unique_ptr<Model> clone() const override;

  std::span<const double> user_row(int u) const;
  std::span<const double> item_row(int i) const;

 private:
  BprModel(int num_users, int num_items, int dim);

  int num_users_, num_items_, dim_;
  Tensor* user_emb_ = nullptr;
  Tensor* item_emb_ = nullptr;
};

struct BprTriple {
  int user;
  int pos;
  int neg;
};

// Mean over triples of -log sigma(score(u, pos) - score(u, neg)) plus an L2
// term on the three touched embedding rows. Gradients are accumulated scaled
// by grad_scale; the returned loss is unscaled.
double bpr_loss(BprModel& m, std::span<const BprTriple> triples, double l2_reg,
                double grad_scale);

}  // namespace derrd
