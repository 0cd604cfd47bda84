#pragma once

#include <cmath>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "derrd/param_store.hpp"

namespace derrd {

enum class BaseKind { bpr, neumf };

// Where the last-hidden tap lives: separate user/item vectors (BPR) or one
// joint vector per (user, item) pair (NeuMF).
enum class TapKind { separate, joint };

std::string to_string(BaseKind k);
BaseKind base_kind_from_string(const std::string& s);

struct ModelConfig {
  BaseKind base_model = BaseKind::bpr;
  double phi = 1.0;       // size ratio: student width = round(phi * teacher_dim)
  int teacher_dim = 200;  // last-hidden width of the teacher (d_t)
  int neumf_layers = 2;   // MLP tower depth, 1..4
  int epochs = 1000;
  int batch_size = 512;
  double learning_rate = 0.01;
  double l2_reg = 1e-4;

  int student_dim() const {
    const int d = static_cast<int>(std::lround(phi * teacher_dim));
    return d < 1 ? 1 : d;
  }
};

// A recommender with hand-derived gradients. Scoring on a frozen instance is
// const and thread-safe; gradient accumulation mutates the owning store and
// belongs to a single training loop.
class Model {
 public:
  virtual ~Model() = default;

  virtual BaseKind kind() const = 0;
  virtual TapKind tap_kind() const = 0;
  virtual int num_users() const = 0;
  virtual int num_items() const = 0;
  virtual int tap_width() const = 0;

  virtual double score(int user, int item) const = 0;
  virtual void scores_for_user(int user, std::vector<double>& out) const = 0;

  // Accumulates dscore * d(score)/d(theta) into the gradient slots.
  virtual void add_score_grad(int user, int item, double dscore) = 0;

  // Separate taps (BPR). Joint-tap models throw.
  virtual void user_tap(int user, std::span<double> out) const;
  virtual void item_tap(int item, std::span<double> out) const;
  virtual void add_user_tap_grad(int user, std::span<const double> dtap);
  virtual void add_item_tap_grad(int item, std::span<const double> dtap);

  // Joint tap (NeuMF). Separate-tap models throw.
  virtual void pair_tap(int user, int item, std::span<double> out) const;
  virtual void add_pair_tap_grad(int user, int item, std::span<const double> dtap);

  // Fresh copy with identical parameters, for frozen snapshots.
  virtual std::unique_ptr<Model> clone() const = 0;

  ParamStore& params() { return store_; }
  const ParamStore& params() const { return store_; }

 protected:
  ParamStore store_;
};

// Exact count of learnable scalars.
std::size_t param_count(const Model& m);

// Items outside `exclude_sorted` ordered by descending score, ties broken by
// ascending item id.
std::vector<int> full_ranking(const Model& m, int user,
                              std::span<const int> exclude_sorted);

}  // namespace derrd
