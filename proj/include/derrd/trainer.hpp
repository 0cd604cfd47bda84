#pragma once

#include <memory>
#include <vector>

#include "derrd/adam.hpp"
#include "derrd/config.hpp"
#include "derrd/dataset.hpp"
#include "derrd/experts.hpp"
#include "derrd/metrics.hpp"
#include "derrd/snapshot.hpp"
#include "derrd/teacher_cache.hpp"

namespace derrd {

struct EpochLog {
  int epoch = 0;
  double tau = 0.0;
  double total_loss = 0.0;  // base + weighted KD terms, mean over batches
  double base_loss = 0.0;   // unweighted epoch means below
  double de_loss = 0.0;
  double rrd_loss = 0.0;
  double kd_loss = 0.0;     // rd / cd term
  double ratio_de = 0.0;    // |lambda_de * de| / base, the balance diagnostic
  double ratio_rrd = 0.0;
  double ratio_kd = 0.0;
  double val_h5 = 0.0;
};

struct TrainResult {
  int best_epoch = 0;
  double best_val_h5 = 0.0;
  int stopped_epoch = 0;
  std::vector<EpochLog> epochs;
};

// One experiment: either a teacher run (base loss only, full width) or a
// student run with the selected distillation terms. Owns the model, the
// optimizer state and every random stream.
class Trainer {
 public:
  Trainer(const ExperimentConfig& cfg, const InteractionDataset& ds);

  TrainResult train_teacher();
  // teacher may be null only for method = none.
  TrainResult distill(const TeacherSnapshot* teacher);

  Model& model() { return *model_; }
  const Model& model() const { return *model_; }
  const NegativePool& pool() const { return pool_; }
  const ExperimentConfig& config() const { return cfg_; }

  // After train_teacher: the frozen model plus cached top-C lists.
  TeacherSnapshot build_cache() const;

  bool has_expert_banks() const { return joint_bank_ || user_bank_; }
  const ParamStore& de_params() const { return de_store_; }
  ParamStore& de_params() { return de_store_; }
  const ExpertBank* user_bank() const { return user_bank_.get(); }
  const ExpertBank* item_bank() const { return item_bank_.get(); }
  const ExpertBank* joint_bank() const { return joint_bank_.get(); }

  SnapshotMeta snapshot_meta(const std::string& method_label,
                             int best_epoch) const;

 private:
  TrainResult run(bool is_teacher, const TeacherSnapshot* teacher);
  void build_model(bool is_teacher);

  ExperimentConfig cfg_;
  const InteractionDataset& ds_;
  NegativePool pool_;
  std::unique_ptr<Model> model_;
  ParamStore de_store_;
  std::unique_ptr<ExpertBank> user_bank_, item_bank_, joint_bank_;
};

void write_train_log_csv(const std::string& path,
                         const std::vector<EpochLog>& epochs);

}  // namespace derrd
