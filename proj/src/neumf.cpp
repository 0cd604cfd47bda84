#include "derrd/neumf.hpp"

#include <cmath>
#include <stdexcept>

#include "derrd/errors.hpp"
#include "derrd/mathutil.hpp"

namespace derrd {

NeumfDims NeumfDims::from(int joint_dim, int n_layers) {
  if (joint_dim < 2)
    throw ConfigError("NeuMF joint width must be at least 2");
  if (n_layers < 1 || n_layers > 4)
    throw ConfigError("NeuMF tower depth must be in {1,2,3,4}");
  NeumfDims d;
  d.joint_dim = joint_dim;
  const int top = joint_dim / 2;
  d.gmf_dim = joint_dim - top;
  d.mlp_emb_dim = top << (n_layers - 1);
  d.tower.resize(n_layers);
  for (int k = 0; k < n_layers; ++k)
    d.tower[k] = top << (n_layers - 1 - k);
  return d;
}

namespace {
std::size_t sz(int v) { return static_cast<std::size_t>(v); }
}  // namespace

NeumfModel::NeumfModel(int num_users, int num_items, NeumfDims dims)
    : num_users_(num_users), num_items_(num_items), dims_(std::move(dims)) {
  gmf_user_ = &store_.add("gmf_user_emb", {sz(num_users), sz(dims_.gmf_dim)});
  gmf_item_ = &store_.add("gmf_item_emb", {sz(num_items), sz(dims_.gmf_dim)});
  mlp_user_ = &store_.add("mlp_user_emb", {sz(num_users), sz(dims_.mlp_emb_dim)});
  mlp_item_ = &store_.add("mlp_item_emb", {sz(num_items), sz(dims_.mlp_emb_dim)});
  int in = 2 * dims_.mlp_emb_dim;
  for (std::size_t k = 0; k < dims_.tower.size(); ++k) {
    const int out = dims_.tower[k];
    w_.push_back(&store_.add("mlp_w" + std::to_string(k + 1), {sz(out), sz(in)}));
    b_.push_back(&store_.add("mlp_b" + std::to_string(k + 1), {sz(out)}));
    in = out;
  }
  out_w_ = &store_.add("out_w", {sz(dims_.joint_dim)});
}

NeumfModel::NeumfModel(int num_users, int num_items, int joint_dim,
                       int n_layers, std::mt19937_64& init_rng)
    : NeumfModel(num_users, num_items, NeumfDims::from(joint_dim, n_layers)) {
  std::normal_distribution<double> emb(0.0, 0.01);
  for (Tensor* t : {gmf_user_, gmf_item_, mlp_user_, mlp_item_})
    for (double& v : t->values) v = emb(init_rng);
  for (std::size_t k = 0; k < w_.size(); ++k) {
    const double fan_in = static_cast<double>(w_[k]->shape[1]);
    const double fan_out = static_cast<double>(w_[k]->shape[0]);
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    std::uniform_real_distribution<double> glorot(-bound, bound);
    for (double& v : w_[k]->values) v = glorot(init_rng);
  }
  const double bound = std::sqrt(6.0 / (dims_.joint_dim + 1.0));
  std::uniform_real_distribution<double> glorot(-bound, bound);
  for (double& v : out_w_->values) v = glorot(init_rng);
}

double NeumfModel::forward(int user, int item, Acts& acts) const {
  const int dg = dims_.gmf_dim;
  const int dm = dims_.mlp_emb_dim;
  const double* gu = gmf_user_->values.data() + sz(user) * dg;
  const double* gi = gmf_item_->values.data() + sz(item) * dg;
  const double* mu = mlp_user_->values.data() + sz(user) * dm;
  const double* mi = mlp_item_->values.data() + sz(item) * dm;

  acts.z.resize(dims_.tower.size() + 1);
  acts.z[0].resize(2 * dm);
  for (int d = 0; d < dm; ++d) acts.z[0][d] = mu[d];
  for (int d = 0; d < dm; ++d) acts.z[0][dm + d] = mi[d];

  for (std::size_t k = 0; k < dims_.tower.size(); ++k) {
    const auto& in = acts.z[k];
    auto& out = acts.z[k + 1];
    const int rows = dims_.tower[k];
    const int cols = static_cast<int>(in.size());
    out.assign(rows, 0.0);
    const double* wv = w_[k]->values.data();
    const double* bv = b_[k]->values.data();
    for (int r = 0; r < rows; ++r) {
      double acc = bv[r];
      const double* row = wv + sz(r) * cols;
      for (int c = 0; c < cols; ++c) acc += row[c] * in[c];
      out[r] = acc > 0.0 ? acc : 0.0;
    }
  }

  acts.tap.resize(dims_.joint_dim);
  for (int d = 0; d < dg; ++d) acts.tap[d] = gu[d] * gi[d];
  const auto& top = acts.z.back();
  for (std::size_t d = 0; d < top.size(); ++d) acts.tap[dg + d] = top[d];
  acts.logit = dot(acts.tap, {out_w_->values.data(), sz(dims_.joint_dim)});
  return acts.logit;
}

void NeumfModel::backward(int user, int item, const Acts& acts, double dlogit,
                          std::span<const double> dtap) {
  const int dg = dims_.gmf_dim;
  const int dm = dims_.mlp_emb_dim;
  const int joint = dims_.joint_dim;

  std::vector<double> dh(joint, 0.0);
  if (dlogit != 0.0) {
    const double* ow = out_w_->values.data();
    double* gow = out_w_->grad.data();
    for (int d = 0; d < joint; ++d) {
      dh[d] = dlogit * ow[d];
      gow[d] += dlogit * acts.tap[d];
    }
  }
  if (!dtap.empty())
    for (int d = 0; d < joint; ++d) dh[d] += dtap[d];

  // GMF side
  const double* gu = gmf_user_->values.data() + sz(user) * dg;
  const double* gi = gmf_item_->values.data() + sz(item) * dg;
  double* ggu = gmf_user_->grad.data() + sz(user) * dg;
  double* ggi = gmf_item_->grad.data() + sz(item) * dg;
  for (int d = 0; d < dg; ++d) {
    ggu[d] += dh[d] * gi[d];
    ggi[d] += dh[d] * gu[d];
  }

  // Tower, top down
  std::vector<double> dz(acts.z.back().size());
  for (std::size_t d = 0; d < dz.size(); ++d) dz[d] = dh[dg + d];
  for (int k = static_cast<int>(dims_.tower.size()) - 1; k >= 0; --k) {
    const auto& in = acts.z[k];
    const auto& out = acts.z[k + 1];
    const int rows = static_cast<int>(out.size());
    const int cols = static_cast<int>(in.size());
    const double* wv = w_[k]->values.data();
    double* gw = w_[k]->grad.data();
    double* gb = b_[k]->grad.data();
    std::vector<double> din(cols, 0.0);
    for (int r = 0; r < rows; ++r) {
      if (out[r] <= 0.0) continue;  // relu gate
      const double dpre = dz[r];
      gb[r] += dpre;
      const double* row = wv + sz(r) * cols;
      double* grow = gw + sz(r) * cols;
      for (int c = 0; c < cols; ++c) {
        grow[c] += dpre * in[c];
        din[c] += dpre * row[c];
      }
    }
    dz = std::move(din);
  }

  double* gmu = mlp_user_->grad.data() + sz(user) * dm;
  double* gmi = mlp_item_->grad.data() + sz(item) * dm;
  for (int d = 0; d < dm; ++d) {
    gmu[d] += dz[d];
    gmi[d] += dz[dm + d];
  }
}

double NeumfModel::score(int user, int item) const {
  Acts acts;
  return forward(user, item, acts);
}

void NeumfModel::scores_for_user(int user, std::vector<double>& out) const {
  out.resize(num_items_);
  Acts acts;
  for (int i = 0; i < num_items_; ++i) out[i] = forward(user, i, acts);
}

void NeumfModel::add_score_grad(int user, int item, double dscore) {
  Acts acts;
  forward(user, item, acts);
  backward(user, item, acts, dscore, {});
}

void NeumfModel::pair_tap(int user, int item, std::span<double> out) const {
  Acts acts;
  forward(user, item, acts);
  std::copy(acts.tap.begin(), acts.tap.end(), out.begin());
}

void NeumfModel::add_pair_tap_grad(int user, int item,
                                   std::span<const double> dtap) {
  Acts acts;
  forward(user, item, acts);
  backward(user, item, acts, 0.0, dtap);
}

std::unique_ptr<Model> NeumfModel::clone() const {
  auto copy = std::unique_ptr<NeumfModel>(
      new NeumfModel(num_users_, num_items_, dims_));
  for (auto& [name, t] : copy->store_.tensors())
    t.values = store_.at(name).values;
  return copy;
}

double NeumfModel::dense_l2(double l2_reg, double grad_scale) {
  if (l2_reg <= 0.0) return 0.0;
  double loss = 0.0;
  std::vector<Tensor*> dense = w_;
  dense.push_back(out_w_);
  for (Tensor* t : dense) {
    loss += 0.5 * l2_reg * squared_norm(t->values);
    for (std::size_t i = 0; i < t->size(); ++i)
      t->grad[i] += grad_scale * l2_reg * t->values[i];
  }
  return loss;
}

double NeumfModel::embedding_l2(int user, int item, double l2_reg,
                                double grad_scale) {
  if (l2_reg <= 0.0) return 0.0;
  const int dg = dims_.gmf_dim;
  const int dm = dims_.mlp_emb_dim;
  double loss = 0.0;
  auto touch = [&](Tensor* t, int row, int width) {
    const double* v = t->values.data() + sz(row) * width;
    double* g = t->grad.data() + sz(row) * width;
    for (int d = 0; d < width; ++d) {
      loss += 0.5 * l2_reg * v[d] * v[d];
      g[d] += grad_scale * l2_reg * v[d];
    }
  };
  touch(gmf_user_, user, dg);
  touch(gmf_item_, item, dg);
  touch(mlp_user_, user, dm);
  touch(mlp_item_, item, dm);
  return loss;
}

double neumf_bce_loss(NeumfModel& m, std::span<const LabeledPair> pairs,
                      double l2_reg, double grad_scale) {
  if (pairs.empty()) return 0.0;
  const double inv_n = 1.0 / static_cast<double>(pairs.size());
  double loss = 0.0;
  NeumfModel::Acts acts;
  for (const auto& p : pairs) {
    const double raw = m.forward(p.user, p.item, acts);
    const double logit = std::clamp(raw, -40.0, 40.0);
    loss += p.label > 0.5 ? softplus(-logit) : softplus(logit);
    double dlogit = (sigmoid(logit) - p.label) * inv_n * grad_scale;
    if (raw < -40.0 || raw > 40.0) dlogit = 0.0;  // flat outside the clamp
    m.backward(p.user, p.item, acts, dlogit, {});
    loss += m.embedding_l2(p.user, p.item, l2_reg, inv_n * grad_scale) ;
  }
  loss *= inv_n;
  loss += m.dense_l2(l2_reg, grad_scale);
  return loss;
}

}  // namespace derrd
