#pragma once

#include <cstdint>
#include <set>
#include <string>

#include "derrd/experts.hpp"
#include "derrd/model.hpp"
#include "derrd/rd.hpp"
#include "derrd/rrd.hpp"

namespace derrd {

enum class Method { none, rd, cd, de, rrd, de_rrd };

std::string to_string(Method m);
Method method_from_string(const std::string& s);

// Flat key=value experiment description. Keys may come from a config file
// and/or command-line flags; unknown keys are errors, and method-specific
// keys are accepted only when the method that owns them is selected.
struct ExperimentConfig {
  std::string dataset;
  int min_user_interactions = 5;
  BaseKind base_model = BaseKind::bpr;
  double phi = 1.0;
  Method method = Method::none;

  // KD weights; lambda_de / lambda_rrd fall back to base-model defaults.
  double lambda_kd = 0.1;
  double lambda_de = -1.0;
  double lambda_rrd = -1.0;

  std::uint64_t seed = 1;
  int epochs = 1000;
  int batch_size = 512;
  double learning_rate = 0.01;
  double l2_reg = 1e-4;
  int teacher_dim = -1;  // default 200 (BPR) / 128 (NeuMF)
  int neumf_layers = 2;

  int num_experts = 10;
  DeAblation de_ablation = DeAblation::none;
  bool de_squared_norm = false;

  int top_k = 10;              // K (RD, CD, RRD)
  int num_uninteresting = -1;  // L, defaults to K
  double position_temp = 10.0; // T
  RrdMode rrd_ablation = RrdMode::relaxed;

  int cache_size = 500;  // teacher top-C
  int rd_warmup_epochs = 30;
  int rd_dyn_negatives = 50;

  std::string output_dir;

  // ---- derived views ----
  int resolved_teacher_dim() const;
  double resolved_lambda_de() const;
  double resolved_lambda_rrd() const;
  ModelConfig model_config(bool teacher) const;
  RdConfig rd_config() const;
  RrdConfig rrd_config() const;
  DeConfig de_config() const;
  bool uses_de() const { return method == Method::de || method == Method::de_rrd; }
  bool uses_rrd() const { return method == Method::rrd || method == Method::de_rrd; }
};

class ConfigParser {
 public:
  // key=value lines; '#' starts a comment; blank lines ignored.
  void load_file(const std::string& path);
  // a single assignment, e.g. from a CLI flag
  void set(const std::string& key, const std::string& value);
  bool is_set(const std::string& key) const { return explicit_keys_.count(key) != 0; }

  // Applies defaults, checks method/key ownership and the lambda grid.
  ExperimentConfig finish() const;

  // The resolved config echoed back as key=value text.
  static std::string echo(const ExperimentConfig& cfg);

 private:
  ExperimentConfig cfg_;
  std::set<std::string> explicit_keys_;
};

}  // namespace derrd
