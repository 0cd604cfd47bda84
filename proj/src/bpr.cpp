#include "derrd/bpr.hpp"

#include <stdexcept>

#include "derrd/mathutil.hpp"

namespace derrd {

BprModel::BprModel(int num_users, int num_items, int dim)
    : num_users_(num_users), num_items_(num_items), dim_(dim) {
  user_emb_ = &store_.add("user_emb", {static_cast<std::size_t>(num_users),
                                       static_cast<std::size_t>(dim)});
  item_emb_ = &store_.add("item_emb", {static_cast<std::size_t>(num_items),
                                       static_cast<std::size_t>(dim)});
}

BprModel::BprModel(int num_users, int num_items, int dim,
                   std::mt19937_64& init_rng)
    : BprModel(num_users, num_items, dim) {
  std::normal_distribution<double> init(0.0, 0.01);
  for (double& v : user_emb_->values) v = init(init_rng);
  for (double& v : item_emb_->values) v = init(init_rng);
}

std::span<const double> BprModel::user_row(int u) const {
  return {user_emb_->values.data() + static_cast<std::size_t>(u) * dim_,
          static_cast<std::size_t>(dim_)};
}

std::span<const double> BprModel::item_row(int i) const {
  return {item_emb_->values.data() + static_cast<std::size_t>(i) * dim_,
          static_cast<std::size_t>(dim_)};
}

double BprModel::score(int user, int item) const {
  return dot(user_row(user), item_row(item));
}

void BprModel::scores_for_user(int user, std::vector<double>& out) const {
  out.resize(num_items_);
  const auto u = user_row(user);
  for (int i = 0; i < num_items_; ++i) out[i] = dot(u, item_row(i));
}

void BprModel::add_score_grad(int user, int item, double dscore) {
  double* gu = user_emb_->grad.data() + static_cast<std::size_t>(user) * dim_;
  double* gi = item_emb_->grad.data() + static_cast<std::size_t>(item) * dim_;
  const auto u = user_row(user);
  const auto v = item_row(item);
  for (int d = 0; d < dim_; ++d) {
    gu[d] += dscore * v[d];
    gi[d] += dscore * u[d];
  }
}

void BprModel::user_tap(int user, std::span<double> out) const {
  const auto u = user_row(user);
  std::copy(u.begin(), u.end(), out.begin());
}

void BprModel::item_tap(int item, std::span<double> out) const {
  const auto v = item_row(item);
  std::copy(v.begin(), v.end(), out.begin());
}

void BprModel::add_user_tap_grad(int user, std::span<const double> dtap) {
  double* g = user_emb_->grad.data() + static_cast<std::size_t>(user) * dim_;
  for (int d = 0; d < dim_; ++d) g[d] += dtap[d];
}

void BprModel::add_item_tap_grad(int item, std::span<const double> dtap) {
  double* g = item_emb_->grad.data() + static_cast<std::size_t>(item) * dim_;
  for (int d = 0; d < dim_; ++d) g[d] += dtap[d];
}

std::unique_ptr<Model> BprModel::clone() const {
  auto copy = std::unique_ptr<BprModel>(
      new BprModel(num_users_, num_items_, dim_));
  copy->user_emb_->values = user_emb_->values;
  copy->item_emb_->values = item_emb_->values;
  return copy;
}

double bpr_loss(BprModel& m, std::span<const BprTriple> triples, double l2_reg,
                double grad_scale) {
  if (triples.empty()) return 0.0;
  const double inv_n = 1.0 / static_cast<double>(triples.size());
  const int dim = m.dim();
  double loss = 0.0;
  for (const auto& t : triples) {
    const double x = m.score(t.user, t.pos) - m.score(t.user, t.neg);
    loss += softplus(-x);
    // d(-log sigma(x))/dx = sigma(x) - 1
    const double dx = (sigmoid(x) - 1.0) * inv_n * grad_scale;
    m.add_score_grad(t.user, t.pos, dx);
    m.add_score_grad(t.user, t.neg, -dx);

    if (l2_reg > 0.0) {
      const auto u = m.user_row(t.user);
      const auto p = m.item_row(t.pos);
      const auto n = m.item_row(t.neg);
      loss += 0.5 * l2_reg * (squared_norm(u) + squared_norm(p) + squared_norm(n));
      std::vector<double> du(dim), dp(dim), dn(dim);
      const double c = l2_reg * inv_n * grad_scale;
      for (int d = 0; d < dim; ++d) {
        du[d] = c * u[d];
        dp[d] = c * p[d];
        dn[d] = c * n[d];
      }
      m.add_user_tap_grad(t.user, du);
      m.add_item_tap_grad(t.pos, dp);
      m.add_item_tap_grad(t.neg, dn);
    }
  }
  return loss * inv_n;
}

}  // namespace derrd
