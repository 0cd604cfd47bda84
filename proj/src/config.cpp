#include "derrd/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "derrd/errors.hpp"

namespace derrd {

std::string to_string(Method m) {
  switch (m) {
    case Method::none: return "none";
    case Method::rd: return "rd";
    case Method::cd: return "cd";
    case Method::de: return "de";
    case Method::rrd: return "rrd";
    case Method::de_rrd: return "de-rrd";
  }
  return "none";
}

Method method_from_string(const std::string& s) {
  if (s == "none") return Method::none;
  if (s == "rd") return Method::rd;
  if (s == "cd") return Method::cd;
  if (s == "de") return Method::de;
  if (s == "rrd") return Method::rrd;
  if (s == "de-rrd") return Method::de_rrd;
  throw ConfigError("unknown method '" + s + "'");
}

namespace {

DeAblation de_ablation_from_string(const std::string& s) {
  if (s == "none") return DeAblation::none;
  if (s == "attention") return DeAblation::attention;
  if (s == "one_expert_large") return DeAblation::one_expert_large;
  if (s == "one_expert_small") return DeAblation::one_expert_small;
  throw ConfigError("unknown de_ablation '" + s + "'");
}

std::string to_string(DeAblation a) {
  switch (a) {
    case DeAblation::none: return "none";
    case DeAblation::attention: return "attention";
    case DeAblation::one_expert_large: return "one_expert_large";
    case DeAblation::one_expert_small: return "one_expert_small";
  }
  return "none";
}

RrdMode rrd_mode_from_string(const std::string& s) {
  if (s == "none" || s == "relaxed") return RrdMode::relaxed;
  if (s == "full_ranking") return RrdMode::full_ranking;
  if (s == "interesting_only") return RrdMode::interesting_only;
  throw ConfigError("unknown rrd_ablation '" + s + "'");
}

std::string to_string(RrdMode m) {
  switch (m) {
    case RrdMode::relaxed: return "relaxed";
    case RrdMode::full_ranking: return "full_ranking";
    case RrdMode::interesting_only: return "interesting_only";
  }
  return "relaxed";
}

int parse_int(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const int x = std::stoi(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': not an integer: '" + v + "'");
  }
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': not a number: '" + v + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("key '" + key + "': not a bool: '" + v + "'");
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const std::uint64_t x = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': not an unsigned integer: '" + v + "'");
  }
}

// KD weights live on the grid {1, 1e-1, ..., 1e-5}; 0 is accepted so reduction
// checks can switch a term off without changing the method.
void check_lambda_grid(const std::string& key, double v) {
  if (v == 0.0) return;
  for (int e = 0; e <= 5; ++e) {
    const double grid = std::pow(10.0, -e);
    if (std::abs(v - grid) <= 1e-12 * grid) return;
  }
  throw ConfigError("key '" + key + "': value " + std::to_string(v) +
                    " is not in {0, 1, 1e-1, ..., 1e-5}");
}

}  // namespace

int ExperimentConfig::resolved_teacher_dim() const {
  if (teacher_dim > 0) return teacher_dim;
  return base_model == BaseKind::bpr ? 200 : 128;
}

double ExperimentConfig::resolved_lambda_de() const {
  if (lambda_de >= 0.0) return lambda_de;
  return base_model == BaseKind::bpr ? 1e-2 : 1e-4;
}

double ExperimentConfig::resolved_lambda_rrd() const {
  if (lambda_rrd >= 0.0) return lambda_rrd;
  return base_model == BaseKind::bpr ? 1e-3 : 1e-1;
}

ModelConfig ExperimentConfig::model_config(bool teacher) const {
  ModelConfig mc;
  mc.base_model = base_model;
  mc.phi = teacher ? 1.0 : phi;
  mc.teacher_dim = resolved_teacher_dim();
  mc.neumf_layers = neumf_layers;
  mc.epochs = epochs;
  mc.batch_size = batch_size;
  mc.learning_rate = learning_rate;
  mc.l2_reg = l2_reg;
  return mc;
}

RdConfig ExperimentConfig::rd_config() const {
  RdConfig c;
  c.top_k = top_k;
  c.position_temp = position_temp;
  c.warmup_epochs = rd_warmup_epochs;
  c.dyn_negatives = rd_dyn_negatives;
  return c;
}

RrdConfig ExperimentConfig::rrd_config() const {
  RrdConfig c;
  c.num_interesting = top_k;
  c.num_uninteresting = num_uninteresting >= 0 ? num_uninteresting : top_k;
  c.position_temp = position_temp;
  c.mode = rrd_ablation;
  return c;
}

DeConfig ExperimentConfig::de_config() const {
  DeConfig c;
  c.num_experts = num_experts;
  c.ablation = de_ablation;
  c.squared_norm = de_squared_norm;
  return c;
}

void ConfigParser::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const auto notspace = [](unsigned char c) { return !std::isspace(c); };
    line.erase(line.begin(), std::find_if(line.begin(), line.end(), notspace));
    line.erase(std::find_if(line.rbegin(), line.rend(), notspace).base(), line.end());
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(lineno) +
                        ": expected key=value");
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    key.erase(std::find_if(key.rbegin(), key.rend(), notspace).base(), key.end());
    value.erase(value.begin(), std::find_if(value.begin(), value.end(), notspace));
    set(key, value);
  }
}

void ConfigParser::set(const std::string& key, const std::string& value) {
  ExperimentConfig& c = cfg_;
  if (key == "dataset") c.dataset = value;
  else if (key == "min_user_interactions") c.min_user_interactions = parse_int(key, value);
  else if (key == "base_model") c.base_model = base_kind_from_string(value);
  else if (key == "phi") c.phi = parse_double(key, value);
  else if (key == "method") c.method = method_from_string(value);
  else if (key == "lambda") c.lambda_kd = parse_double(key, value);
  else if (key == "lambda_de") c.lambda_de = parse_double(key, value);
  else if (key == "lambda_rrd") c.lambda_rrd = parse_double(key, value);
  else if (key == "seed") c.seed = parse_u64(key, value);
  else if (key == "epochs") c.epochs = parse_int(key, value);
  else if (key == "batch_size") c.batch_size = parse_int(key, value);
  else if (key == "learning_rate") c.learning_rate = parse_double(key, value);
  else if (key == "l2_reg") c.l2_reg = parse_double(key, value);
  else if (key == "teacher_dim") c.teacher_dim = parse_int(key, value);
  else if (key == "neumf_layers") c.neumf_layers = parse_int(key, value);
  else if (key == "num_experts") c.num_experts = parse_int(key, value);
  else if (key == "de_ablation") c.de_ablation = de_ablation_from_string(value);
  else if (key == "de_squared_norm") c.de_squared_norm = parse_bool(key, value);
  else if (key == "top_k") c.top_k = parse_int(key, value);
  else if (key == "num_uninteresting") c.num_uninteresting = parse_int(key, value);
  else if (key == "position_temp") c.position_temp = parse_double(key, value);
  else if (key == "rrd_ablation") c.rrd_ablation = rrd_mode_from_string(value);
  else if (key == "cache_size") c.cache_size = parse_int(key, value);
  else if (key == "rd_warmup_epochs") c.rd_warmup_epochs = parse_int(key, value);
  else if (key == "rd_dyn_negatives") c.rd_dyn_negatives = parse_int(key, value);
  else if (key == "output_dir") c.output_dir = value;
  else throw ConfigError("unknown config key '" + key + "'");
  explicit_keys_.insert(key);
}

ExperimentConfig ConfigParser::finish() const {
  const ExperimentConfig& c = cfg_;

  static const std::map<std::string, std::set<Method>> owners = {
      {"lambda", {Method::rd, Method::cd}},
      {"rd_warmup_epochs", {Method::rd}},
      {"rd_dyn_negatives", {Method::rd}},
      {"lambda_de", {Method::de, Method::de_rrd}},
      {"num_experts", {Method::de, Method::de_rrd}},
      {"de_ablation", {Method::de, Method::de_rrd}},
      {"de_squared_norm", {Method::de, Method::de_rrd}},
      {"lambda_rrd", {Method::rrd, Method::de_rrd}},
      {"num_uninteresting", {Method::rrd, Method::de_rrd}},
      {"rrd_ablation", {Method::rrd, Method::de_rrd}},
      {"top_k", {Method::rd, Method::cd, Method::rrd, Method::de_rrd}},
      {"position_temp", {Method::rd, Method::cd, Method::rrd, Method::de_rrd}},
  };
  for (const std::string& key : explicit_keys_) {
    const auto it = owners.find(key);
    if (it != owners.end() && !it->second.count(c.method))
      throw ConfigError("key '" + key + "' does not apply to method '" +
                        to_string(c.method) + "'");
  }

  check_lambda_grid("lambda", c.lambda_kd);
  if (c.lambda_de >= 0.0) check_lambda_grid("lambda_de", c.lambda_de);
  if (c.lambda_rrd >= 0.0) check_lambda_grid("lambda_rrd", c.lambda_rrd);

  if (c.phi <= 0.0 || c.phi > 1.0)
    throw ConfigError("phi must be in (0, 1]");
  if (c.epochs < 1 || c.batch_size < 1)
    throw ConfigError("epochs and batch_size must be positive");
  if (c.method == Method::rd && c.rd_warmup_epochs >= c.epochs)
    throw ConfigError("rd_warmup_epochs must be below epochs");
  if (c.top_k < 1) throw ConfigError("top_k must be >= 1");
  if (c.top_k > c.cache_size)
    throw ConfigError("top_k cannot exceed cache_size");
  if (c.position_temp <= 0.0) throw ConfigError("position_temp must be > 0");
  return c;
}

std::string ConfigParser::echo(const ExperimentConfig& c) {
  std::ostringstream out;
  out.precision(12);
  out << "dataset = " << c.dataset << "\n"
      << "min_user_interactions = " << c.min_user_interactions << "\n"
      << "base_model = " << to_string(c.base_model) << "\n"
      << "phi = " << c.phi << "\n"
      << "method = " << to_string(c.method) << "\n"
      << "lambda = " << c.lambda_kd << "\n"
      << "lambda_de = " << c.resolved_lambda_de() << "\n"
      << "lambda_rrd = " << c.resolved_lambda_rrd() << "\n"
      << "seed = " << c.seed << "\n"
      << "epochs = " << c.epochs << "\n"
      << "batch_size = " << c.batch_size << "\n"
      << "learning_rate = " << c.learning_rate << "\n"
      << "l2_reg = " << c.l2_reg << "\n"
      << "teacher_dim = " << c.resolved_teacher_dim() << "\n"
      << "neumf_layers = " << c.neumf_layers << "\n"
      << "num_experts = " << c.num_experts << "\n"
      << "de_ablation = " << to_string(c.de_ablation) << "\n"
      << "de_squared_norm = " << (c.de_squared_norm ? "true" : "false") << "\n"
      << "top_k = " << c.top_k << "\n"
      << "num_uninteresting = " << c.rrd_config().num_uninteresting << "\n"
      << "position_temp = " << c.position_temp << "\n"
      << "rrd_ablation = " << to_string(c.rrd_ablation) << "\n"
      << "cache_size = " << c.cache_size << "\n"
      << "rd_warmup_epochs = " << c.rd_warmup_epochs << "\n"
      << "rd_dyn_negatives = " << c.rd_dyn_negatives << "\n"
      << "output_dir = " << c.output_dir << "\n";
  return out.str();
}

}  // namespace derrd
