#pragma once

#include <random>
#include <span>

#include "derrd/model.hpp"

namespace derrd {

// Widths derived from the joint tap width D and the tower depth: the GMF
// vector takes ceil(D/2), the MLP top layer the rest, and the tower halves at
// every layer down from 2 * mlp_emb_dim.
struct NeumfDims {
  int joint_dim = 0;  // D = gmf_dim + tower.back()
  int gmf_dim = 0;
  int mlp_emb_dim = 0;
  std::vector<int> tower;  // layer output widths, tower.size() == n_layers

  static NeumfDims from(int joint_dim, int n_layers);
};

// NeuMF: GMF (elementwise product of embeddings) next to an MLP tower over
// concatenated embeddings, combined by a single output weight vector. The
// score is the pre-sigmoid logit; the joint tap is the concatenation
// [gmf_vector; mlp_top] that feeds the output weight.
class NeumfModel final : public Model {
 public:
  NeumfModel(int num_users, int num_items, int joint_dim, int n_layers,
             std::mt19937_64& init_rng);

  BaseKind kind() const override { return BaseKind::neumf; }
  TapKind tap_kind() const override { return TapKind::joint; }
  int num_users() const override { return num_users_; }
  int num_items() const override { return num_items_; }
  int tap_width() const override { return dims_.joint_dim; }
  const NeumfDims& dims() const { return dims_; }
  int n_layers() const { return static_cast<int>(dims_.tower.size()); }

  double score(int user, int item) const override;
  void scores_for_user(int user, std::vector<double>& out) const override;
  void add_score_grad(int user, int item, double dscore) override;

  void pair_tap(int user, int item, std::span<double> out) const override;
  void add_pair_tap_grad(int user, int item, std::span<const double> dtap) override;

  std::unique_ptr<Model> clone() const override;

  // Forward caching the activations needed for backward.
  struct Acts {
    std::vector<std::vector<double>> z;  // z[0] = concat embeddings, z[k] post-relu
    std::vector<double> tap;             // [gmf; z.back()]
    double logit = 0.0;
  };
  double forward(int user, int item, Acts& acts) const;
  // dlogit and dtap (nullable) carry the full upstream scaling.
  void backward(int user, int item, const Acts& acts, double dlogit,
                std::span<const double> dtap);

  // 0.5 * l2 * sum of squares over tower weights and the output weight, with
  // matching gradient contribution scaled by grad_scale.
  double dense_l2(double l2_reg, double grad_scale);
  // Same for the four embedding rows of one (user, item) pair.
  double embedding_l2(int user, int item, double l2_reg, double grad_scale);

 private:
  NeumfModel(int num_users, int num_items, NeumfDims dims);

  int num_users_, num_items_;
  NeumfDims dims_;
  Tensor *gmf_user_ = nullptr, *gmf_item_ = nullptr;
  Tensor *mlp_user_ = nullptr, *mlp_item_ = nullptr;
  std::vector<Tensor*> w_, b_;
  Tensor* out_w_ = nullptr;
};

struct LabeledPair {
  int user;
  int item;
  double label;  // 1 observed, 0 sampled negative
};

// Mean binary cross-entropy over the pairs with logits clamped to [-40, 40],
// plus sparse L2 on touched embeddings and one L2 term on the dense weights.
double neumf_bce_loss(NeumfModel& m, std::span<const LabeledPair> pairs,
                      double l2_reg, double grad_scale);

}  // namespace derrd
