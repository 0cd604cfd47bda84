#include "derrd/experts.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <stdexcept>

#include "derrd/errors.hpp"
#include "derrd/mathutil.hpp"
#include "derrd/rng.hpp"

namespace derrd {

double TemperatureSchedule::at(int epoch) const {
  if (epoch < 0) throw std::invalid_argument("negative epoch");
  if (epoch > total_epochs) {
    std::cerr << "[warn] temperature requested past the schedule (epoch "
              << epoch << " > " << total_epochs << "); clamped\n";
    return tauP;
  }
  if (epoch == 0) return tau0;
  if (epoch == total_epochs) return tauP;
  return tau0 * std::pow(tauP / tau0,
                         static_cast<double>(epoch) / total_epochs);
}

std::vector<double> relaxed_selection(std::span<const double> alpha,
                                      std::span<const double> g, double tau) {
  if (tau <= 0.0) throw std::invalid_argument("temperature must be positive");
  std::vector<double> s(alpha.size());
  for (std::size_t m = 0; m < alpha.size(); ++m)
    s[m] = (std::log(alpha[m]) + g[m]) / tau;
  softmax_inplace(s);
  return s;
}

namespace {
std::size_t sz(int v) { return static_cast<std::size_t>(v); }

void glorot_fill(Tensor& t, int fan_in, int fan_out, std::mt19937_64& rng) {
  const double bound = std::sqrt(6.0 / (fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (double& v : t.values) v = dist(rng);
}
}  // namespace

ExpertBank::ExpertBank(ParamStore& store, std::string prefix,
                       const DeConfig& cfg, int d_s, int d_t,
                       std::mt19937_64& init_rng)
    : store_(&store),
      prefix_(std::move(prefix)),
      m_(cfg.ablation == DeAblation::one_expert_small ? 1 : cfg.num_experts),
      ds_(d_s),
      dt_(d_t),
      dh_(static_cast<int>(std::lround((d_s + d_t) / 2.0))),
      abl_(cfg.ablation) {
  if (m_ < 1) throw ConfigError("expert bank needs at least one expert");
  for (int m = 0; m < m_; ++m) {
    const std::string e = prefix_ + ".e" + std::to_string(m);
    w1_.push_back(&store_->add(e + ".w1", {sz(dh_), sz(ds_)}));
    b1_.push_back(&store_->add(e + ".b1", {sz(dh_)}));
    w2_.push_back(&store_->add(e + ".w2", {sz(dt_), sz(dh_)}));
    b2_.push_back(&store_->add(e + ".b2", {sz(dt_)}));
    glorot_fill(*w1_.back(), ds_, dh_, init_rng);
    glorot_fill(*w2_.back(), dh_, dt_, init_rng);
  }
  sel_w_ = &store_->add(prefix_ + ".sel.w", {sz(m_), sz(dt_)});
  sel_b_ = &store_->add(prefix_ + ".sel.b", {sz(m_)});
  glorot_fill(*sel_w_, dt_, m_, init_rng);
}

std::vector<double> ExpertBank::alpha(std::span<const double> h_t) const {
  std::vector<double> e(m_);
  const double* wv = sel_w_->values.data();
  for (int m = 0; m < m_; ++m) {
    double acc = sel_b_->values[m];
    const double* row = wv + sz(m) * dt_;
    for (int d = 0; d < dt_; ++d) acc += row[d] * h_t[d];
    e[m] = acc;
  }
  softmax_inplace(e);
  return e;
}

struct ExpertBank::Forward {
  SelectionOutcome sel;
  std::vector<double> hidden;      // M x d_h, post-relu
  std::vector<double> expert_out;  // M x d_t
  std::vector<double> recon;       // d_t
};

void ExpertBank::run_forward(std::span<const double> h_t,
                             std::span<const double> h_s, double tau,
                             std::mt19937_64& gumbel_rng, Forward& f) const {
  f.sel.alpha = alpha(h_t);
  f.sel.g.assign(m_, 0.0);
  switch (abl_) {
    case DeAblation::none:
      for (double& g : f.sel.g) g = gumbel(gumbel_rng);
      f.sel.s = relaxed_selection(f.sel.alpha, f.sel.g, tau);
      break;
    case DeAblation::attention:
      f.sel.s = f.sel.alpha;
      break;
    case DeAblation::one_expert_large:
      f.sel.s.assign(m_, 1.0 / m_);
      break;
    case DeAblation::one_expert_small:
      f.sel.s.assign(1, 1.0);
      break;
  }

  f.hidden.assign(sz(m_) * dh_, 0.0);
  f.expert_out.assign(sz(m_) * dt_, 0.0);
  f.recon.assign(dt_, 0.0);
  for (int m = 0; m < m_; ++m) {
    double* hid = f.hidden.data() + sz(m) * dh_;
    const double* w1 = w1_[m]->values.data();
    for (int r = 0; r < dh_; ++r) {
      double acc = b1_[m]->values[r];
      const double* row = w1 + sz(r) * ds_;
      for (int c = 0; c < ds_; ++c) acc += row[c] * h_s[c];
      hid[r] = acc > 0.0 ? acc : 0.0;
    }
    double* out = f.expert_out.data() + sz(m) * dt_;
    const double* w2 = w2_[m]->values.data();
    for (int r = 0; r < dt_; ++r) {
      double acc = b2_[m]->values[r];
      const double* row = w2 + sz(r) * dh_;
      for (int c = 0; c < dh_; ++c) acc += row[c] * hid[c];
      out[r] = acc;
      f.recon[r] += f.sel.s[m] * acc;
    }
  }
}

void ExpertBank::select_and_reconstruct(std::span<const double> h_t,
                                        std::span<const double> h_s, double tau,
                                        std::mt19937_64& gumbel_rng,
                                        std::span<double> reconstruction,
                                        SelectionOutcome& outcome) const {
  Forward f;
  run_forward(h_t, h_s, tau, gumbel_rng, f);
  std::copy(f.recon.begin(), f.recon.end(), reconstruction.begin());
  outcome = std::move(f.sel);
}

double ExpertBank::entity_loss(std::span<const double> h_t,
                               std::span<const double> h_s, double tau,
                               bool squared, std::mt19937_64& gumbel_rng,
                               double grad_scale,
                               std::span<double> dh_s_out) const {
  Forward f;
  run_forward(h_t, h_s, tau, gumbel_rng, f);

  std::vector<double> diff(dt_);
  double sq = 0.0;
  for (int d = 0; d < dt_; ++d) {
    diff[d] = h_t[d] - f.recon[d];
    sq += diff[d] * diff[d];
  }
  const double nrm = std::sqrt(sq);
  const double loss = squared ? sq : nrm;

  // d(loss)/d(recon)
  std::vector<double> drecon(dt_);
  if (squared) {
    for (int d = 0; d < dt_; ++d) drecon[d] = -2.0 * diff[d] * grad_scale;
  } else if (nrm > 1e-300) {
    for (int d = 0; d < dt_; ++d) drecon[d] = -diff[d] / nrm * grad_scale;
  }  // at the (non-differentiable) zero of the norm the subgradient is 0

  std::vector<double> ds(m_, 0.0);
  std::vector<double> dhid(dh_), dpre(dh_);
  for (int m = 0; m < m_; ++m) {
    const double sm = f.sel.s[m];
    const double* out = f.expert_out.data() + sz(m) * dt_;
    const double* hid = f.hidden.data() + sz(m) * dh_;
    double* gw2 = w2_[m]->grad.data();
    double* gb2 = b2_[m]->grad.data();
    std::fill(dhid.begin(), dhid.end(), 0.0);
    for (int r = 0; r < dt_; ++r) {
      ds[m] += drecon[r] * out[r];
      const double dout = sm * drecon[r];
      if (dout == 0.0) continue;
      gb2[r] += dout;
      const double* row = w2_[m]->values.data() + sz(r) * dh_;
      double* grow = gw2 + sz(r) * dh_;
      for (int c = 0; c < dh_; ++c) {
        grow[c] += dout * hid[c];
        dhid[c] += dout * row[c];
      }
    }
    double* gw1 = w1_[m]->grad.data();
    double* gb1 = b1_[m]->grad.data();
    for (int r = 0; r < dh_; ++r) {
      dpre[r] = hid[r] > 0.0 ? dhid[r] : 0.0;
      if (dpre[r] == 0.0) continue;
      gb1[r] += dpre[r];
      const double* row = w1_[m]->values.data() + sz(r) * ds_;
      double* grow = gw1 + sz(r) * ds_;
      for (int c = 0; c < ds_; ++c) {
        grow[c] += dpre[r] * h_s[c];
        dh_s_out[c] += dpre[r] * row[c];
      }
    }
  }

  // Selection network gradients (teacher side receives none).
  std::vector<double> dalpha;
  switch (abl_) {
    case DeAblation::none: {
      const std::vector<double> dy = softmax_backward(f.sel.s, ds);
      dalpha.resize(m_);
      for (int m = 0; m < m_; ++m)
        dalpha[m] = dy[m] / (tau * f.sel.alpha[m]);
      break;
    }
    case DeAblation::attention:
      dalpha.assign(ds.begin(), ds.end());
      break;
    case DeAblation::one_expert_large:
    case DeAblation::one_expert_small:
      return loss;  // fixed selection, nothing to train
  }
  const std::vector<double> de = softmax_backward(f.sel.alpha, dalpha);
  double* gw = sel_w_->grad.data();
  for (int m = 0; m < m_; ++m) {
    sel_b_->grad[m] += de[m];
    double* grow = gw + sz(m) * dt_;
    for (int d = 0; d < dt_; ++d) grow[d] += de[m] * h_t[d];
  }
  return loss;
}

double de_loss_separate(const ExpertBank& user_bank, const ExpertBank& item_bank,
                        const TeacherSnapshot& teacher, Model& student,
                        std::span<const int> user_entities,
                        std::span<const int> item_entities, double tau,
                        bool squared, std::mt19937_64& gumbel_rng,
                        double grad_scale) {
  const std::size_t n = user_entities.size() + item_entities.size();
  if (n == 0) return 0.0;
  const double scale = grad_scale / static_cast<double>(n);
  const int dt = teacher.d_t();
  const int ds = student.tap_width();
  std::vector<double> h_t(dt), h_s(ds), dh_s(ds);

  double total = 0.0;
  for (int u : user_entities) {
    teacher.user_tap(u, h_t);
    student.user_tap(u, h_s);
    std::fill(dh_s.begin(), dh_s.end(), 0.0);
    total += user_bank.entity_loss(h_t, h_s, tau, squared, gumbel_rng, scale, dh_s);
    student.add_user_tap_grad(u, dh_s);
  }
  for (int i : item_entities) {
    teacher.item_tap(i, h_t);
    student.item_tap(i, h_s);
    std::fill(dh_s.begin(), dh_s.end(), 0.0);
    total += item_bank.entity_loss(h_t, h_s, tau, squared, gumbel_rng, scale, dh_s);
    student.add_item_tap_grad(i, dh_s);
  }
  return total / static_cast<double>(n);
}

double de_loss_joint(const ExpertBank& bank, const TeacherSnapshot& teacher,
                     Model& student,
                     std::span<const std::pair<int, int>> pairs, double tau,
                     bool squared, std::mt19937_64& gumbel_rng,
                     double grad_scale) {
  if (pairs.empty()) return 0.0;
  const double scale = grad_scale / static_cast<double>(pairs.size());
  const int dt = teacher.d_t();
  const int ds = student.tap_width();
  std::vector<double> h_t(dt), h_s(ds), dh_s(ds);

  double total = 0.0;
  for (const auto& [u, i] : pairs) {
    teacher.pair_tap(u, i, h_t);
    student.pair_tap(u, i, h_s);
    std::fill(dh_s.begin(), dh_s.end(), 0.0);
    total += bank.entity_loss(h_t, h_s, tau, squared, gumbel_rng, scale, dh_s);
    student.add_pair_tap_grad(u, i, dh_s);
  }
  return total / static_cast<double>(pairs.size());
}

std::vector<ExpertAssignment> export_expert_assignments(
    const ExpertBank& bank, const TeacherSnapshot& teacher,
    const std::string& entity_type) {
  std::vector<double> h_t(teacher.d_t());
  std::vector<ExpertAssignment> rows;
  const auto emit = [&](int id) {
    ExpertAssignment row;
    row.entity_type = entity_type;
    row.entity_id = id;
    row.alpha = bank.alpha(h_t);
    row.expert = static_cast<int>(
        std::max_element(row.alpha.begin(), row.alpha.end()) - row.alpha.begin());
    rows.push_back(std::move(row));
  };
  if (entity_type == "user") {
    for (int u = 0; u < teacher.model->num_users(); ++u) {
      teacher.user_tap(u, h_t);
      emit(u);
    }
  } else if (entity_type == "item") {
    for (int i = 0; i < teacher.model->num_items(); ++i) {
      teacher.item_tap(i, h_t);
      emit(i);
    }
  } else if (entity_type == "pair") {
    // Joint taps are per (user, item); one row per user through the user's
    // top-ranked cached item.
    for (int u = 0; u < teacher.model->num_users(); ++u) {
      teacher.pair_tap(u, teacher.top_items[u][0], h_t);
      emit(u);
    }
  } else {
    throw std::invalid_argument("unknown entity type: " + entity_type);
  }
  return rows;
}

void write_expert_assignment_csv(const std::string& path,
                                 std::span<const ExpertAssignment> rows,
                                 int num_experts) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  out << "entity_type,entity_id,expert";
  for (int m = 0; m < num_experts; ++m) out << ",alpha_" << m;
  out << "\n";
  out.precision(10);
  for (const auto& r : rows) {
    out << r.entity_type << "," << r.entity_id << "," << r.expert;
    for (double a : r.alpha) out << "," << a;
    out << "\n";
  }
}

}  // namespace derrd
