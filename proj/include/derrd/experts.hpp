#pragma once

#include <random>
#include <span>
#include <string>
#include <vector>

#include "derrd/model.hpp"
#include "derrd/teacher_cache.hpp"

namespace derrd {

enum class DeAblation {
  none,              // Gumbel-Softmax expert selection
  attention,         // s = alpha (softmax attention over experts)
  one_expert_large,  // M experts, fixed uniform average pooling
  one_expert_small,  // single expert
};

struct DeConfig {
  int num_experts = 10;  // M
  DeAblation ablation = DeAblation::none;
  bool squared_norm = false;  // reconstruction error as ||.||^2 instead of ||.||
};

// Geometric decay from tau0 at epoch 0 to tauP at epoch P.
struct TemperatureSchedule {
  double tau0 = 1.0;
  double tauP = 1e-10;
  int total_epochs = 1000;  // P

  // tau(p) = tau0 * (tauP / tau0)^(p / P); epochs past P clamp to tauP with
  // a warning.
  double at(int epoch) const;
};

struct SelectionOutcome {
  std::vector<double> alpha;  // normalized specialization scores, sums to 1
  std::vector<double> s;      // relaxed one-hot selection, sums to 1
  std::vector<double> g;      // Gumbel noise used (zeros for ablations)
};

// softmax((log alpha + g) / tau), log-sum-exp stabilized. tau must be > 0.
std::vector<double> relaxed_selection(std::span<const double> alpha,
                                      std::span<const double> g, double tau);

// M two-layer reconstruction networks d_s -> (d_s+d_t)/2 -> d_t with ReLU
// after the first layer, plus a linear selection network d_t -> M. All
// parameters live in the shared store under `prefix`.
class ExpertBank {
 public:
  ExpertBank(ParamStore& store, std::string prefix, const DeConfig& cfg,
             int d_s, int d_t, std::mt19937_64& init_rng);

  int num_experts() const { return m_; }
  int d_s() const { return ds_; }
  int d_t() const { return dt_; }
  int hidden_dim() const { return dh_; }
  DeAblation ablation() const { return abl_; }
  const std::string& prefix() const { return prefix_; }

  // Specialization scores from the teacher-side representation only.
  std::vector<double> alpha(std::span<const double> h_t) const;

  // Forward pass: selection from h_t, reconstruction of h_t from h_s through
  // the selected experts. No gradients.
  void select_and_reconstruct(std::span<const double> h_t,
                              std::span<const double> h_s, double tau,
                              std::mt19937_64& gumbel_rng,
                              std::span<double> reconstruction,
                              SelectionOutcome& outcome) const;

  // Reconstruction error for one entity with gradients accumulated into the
  // experts, the selection network and dh_s (caller routes dh_s into the
  // student). Gradients never flow into h_t. Returns the unscaled error.
  double entity_loss(std::span<const double> h_t, std::span<const double> h_s,
                     double tau, bool squared, std::mt19937_64& gumbel_rng,
                     double grad_scale, std::span<double> dh_s_out) const;

 private:
  struct Forward;
  void run_forward(std::span<const double> h_t, std::span<const double> h_s,
                   double tau, std::mt19937_64& gumbel_rng, Forward& f) const;

  ParamStore* store_;
  std::string prefix_;
  int m_, ds_, dt_, dh_;
  DeAblation abl_;
  std::vector<Tensor*> w1_, b1_, w2_, b2_;
  Tensor *sel_w_ = nullptr, *sel_b_ = nullptr;
};

// Mean reconstruction error over user and item entities, routed to the
// side-specific banks (separate-tap base models).
double de_loss_separate(const ExpertBank& user_bank, const ExpertBank& item_bank,
                        const TeacherSnapshot& teacher, Model& student,
                        std::span<const int> user_entities,
                        std::span<const int> item_entities, double tau,
                        bool squared, std::mt19937_64& gumbel_rng,
                        double grad_scale);

// Mean reconstruction error over (user, item) pair entities (joint-tap base
// models).
double de_loss_joint(const ExpertBank& bank, const TeacherSnapshot& teacher,
                     Model& student,
                     std::span<const std::pair<int, int>> pairs, double tau,
                     bool squared, std::mt19937_64& gumbel_rng,
                     double grad_scale);

struct ExpertAssignment {
  std::string entity_type;
  int entity_id = 0;
  int expert = 0;
  std::vector<double> alpha;
};

// Deterministic assignment table (argmax of alpha, no Gumbel noise) for every
// entity whose teacher tap the bank distills.
std::vector<ExpertAssignment> export_expert_assignments(
    const ExpertBank& bank, const TeacherSnapshot& teacher,
    const std::string& entity_type);

void write_expert_assignment_csv(const std::string& path,
                                 std::span<const ExpertAssignment> rows,
                                 int num_experts);

}  // namespace derrd
