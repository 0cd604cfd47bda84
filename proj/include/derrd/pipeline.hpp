#pragma once

#include <string>

#include "derrd/config.hpp"

namespace derrd {

// Artifact names inside a run directory.
struct RunPaths {
  std::string dir;
  std::string config() const { return dir + "/config.txt"; }
  std::string manifest() const { return dir + "/manifest.txt"; }
  std::string snapshot() const { return dir + "/model.snap"; }
  std::string teacher_cache() const { return dir + "/teacher.cache"; }
  std::string expert_bank() const { return dir + "/experts.bank"; }
  std::string train_log() const { return dir + "/train_log.csv"; }
  std::string eval_csv(const std::string& phase) const {
    return dir + "/eval_" + phase + ".csv";
  }
  std::string hits_csv(const std::string& phase) const {
    return dir + "/hits_" + phase + ".csv";
  }
  std::string latency_csv() const { return dir + "/latency.csv"; }
  std::string expert_assignments() const {
    return dir + "/expert_assignments.csv";
  }
};

void run_prepare_data(const ExperimentConfig& cfg);
void run_train_teacher(const ExperimentConfig& cfg);
void run_distill(const ExperimentConfig& cfg, const std::string& teacher_dir);
void run_evaluate(const std::string& snapshot_path, const std::string& dataset,
                  int min_user_interactions, const std::string& output_dir);
void run_bench_latency(const std::string& snapshot_path,
                       const std::string& dataset, int min_user_interactions,
                       int repeats, const std::string& output_dir);
void run_export_experts(const std::string& teacher_dir,
                        const std::string& bank_path,
                        const std::string& dataset, int min_user_interactions,
                        const std::string& out_csv);

}  // namespace derrd
