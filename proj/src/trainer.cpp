#include "derrd/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>

#include "derrd/bpr.hpp"
#include "derrd/cd.hpp"
#include "derrd/errors.hpp"
#include "derrd/neumf.hpp"
#include "derrd/rd.hpp"
#include "derrd/rng.hpp"
#include "derrd/rrd.hpp"

namespace derrd {

Trainer::Trainer(const ExperimentConfig& cfg, const InteractionDataset& ds)
    : cfg_(cfg), ds_(ds), pool_(build_negative_pool(ds, cfg.seed)) {}

void Trainer::build_model(bool is_teacher) {
  const ModelConfig mc = cfg_.model_config(is_teacher);
  auto rng = make_rng(
      derive_seed(cfg_.seed, is_teacher ? "init_teacher" : "init_student"));
  const int dim = mc.student_dim();
  if (cfg_.base_model == BaseKind::bpr) {
    model_ = std::make_unique<BprModel>(ds_.num_users, ds_.num_items, dim, rng);
  } else {
    const int joint = std::max(dim, 2);
    if (joint != dim)
      std::cerr << "[warn] NeuMF joint width raised to 2 (phi too small)\n";
    model_ = std::make_unique<NeumfModel>(ds_.num_users, ds_.num_items, joint,
                                          cfg_.neumf_layers, rng);
  }
}

TrainResult Trainer::train_teacher() {
  build_model(true);
  return run(true, nullptr);
}

TrainResult Trainer::distill(const TeacherSnapshot* teacher) {
  if (cfg_.method != Method::none) {
    if (!teacher) throw ConfigError("method '" + to_string(cfg_.method) +
                                    "' needs a teacher snapshot");
    if (teacher->dataset_checksum != ds_.split_checksum())
      throw ConfigError("teacher cache was built on a different dataset");
    if (teacher->base() != cfg_.base_model)
      throw ConfigError("teacher snapshot base model does not match the config");
    if (teacher->d_t() != cfg_.model_config(true).student_dim())
      throw ConfigError("teacher_dim does not match the teacher snapshot");
  }
  build_model(false);

  if (cfg_.uses_de()) {
    auto rng = make_rng(derive_seed(cfg_.seed, "init_experts"));
    const DeConfig de = cfg_.de_config();
    const int dt = teacher->d_t();
    const int dsw = model_->tap_width();
    if (model_->tap_kind() == TapKind::separate) {
      user_bank_ = std::make_unique<ExpertBank>(de_store_, "de.u", de, dsw, dt, rng);
      item_bank_ = std::make_unique<ExpertBank>(de_store_, "de.i", de, dsw, dt, rng);
    } else {
      joint_bank_ = std::make_unique<ExpertBank>(de_store_, "de.j", de, dsw, dt, rng);
    }
  }
  return run(false, teacher);
}

TrainResult Trainer::run(bool is_teacher, const TeacherSnapshot* teacher) {
  const ModelConfig mc = cfg_.model_config(is_teacher);
  const bool use_de = !is_teacher && cfg_.uses_de();
  const bool use_rrd = !is_teacher && cfg_.uses_rrd();
  const bool use_rd = !is_teacher && cfg_.method == Method::rd;
  const bool use_cd = !is_teacher && cfg_.method == Method::cd;
  const double lambda_de = cfg_.resolved_lambda_de();
  const double lambda_rrd = cfg_.resolved_lambda_rrd();
  const RrdConfig rrd_cfg = cfg_.rrd_config();
  const RdConfig rd_cfg = cfg_.rd_config();
  const CdConfig cd_cfg{cfg_.top_k, cfg_.position_temp};
  const TemperatureSchedule schedule{1.0, 1e-10, cfg_.epochs};

  auto rng_neg = make_rng(derive_seed(cfg_.seed, "train_negatives"));
  auto rng_shuffle = make_rng(derive_seed(cfg_.seed, "batch_shuffle"));
  auto rng_gumbel = make_rng(derive_seed(cfg_.seed, "gumbel"));

  AdamState opt;
  opt.learning_rate = mc.learning_rate;
  AdamState de_opt;
  de_opt.learning_rate = mc.learning_rate;

  // All (user, positive) interactions; reshuffled every epoch.
  std::vector<std::pair<int, int>> positives;
  positives.reserve(ds_.train_interactions());
  for (int u = 0; u < ds_.num_users; ++u)
    for (int i : ds_.train[u]) positives.emplace_back(u, i);

  auto* bpr = dynamic_cast<BprModel*>(model_.get());
  auto* neumf = dynamic_cast<NeumfModel*>(model_.get());

  TrainResult result;
  std::vector<double> val_history;
  std::map<std::string, std::vector<double>> best_params, best_de_params;

  for (int epoch = 1; epoch <= cfg_.epochs; ++epoch) {
    const double tau = use_de ? schedule.at(epoch - 1) : 0.0;

    std::vector<DistillSample> rrd_samples;
    if (use_rrd)
      rrd_samples = resample_epoch(*teacher, ds_, rrd_cfg, epoch, cfg_.seed);
    // CD resamples its lists every epoch as well, lazily per user.
    std::map<int, std::pair<std::vector<int>, std::vector<double>>> cd_cache;

    std::shuffle(positives.begin(), positives.end(), rng_shuffle);

    EpochLog log;
    log.epoch = epoch;
    log.tau = tau;
    int batches = 0;

    for (std::size_t start = 0; start < positives.size();
         start += cfg_.batch_size) {
      const std::size_t stop =
          std::min(positives.size(), start + cfg_.batch_size);

      std::vector<BprTriple> triples;
      std::vector<LabeledPair> pairs;
      std::vector<int> batch_users, batch_pos, batch_neg;
      std::vector<std::pair<int, int>> batch_pairs;
      std::vector<int> distinct_users;
      for (std::size_t k = start; k < stop; ++k) {
        const auto [u, pos] = positives[k];
        const int neg = sample_train_negatives(ds_, u, 1, rng_neg)[0];
        if (bpr) {
          triples.push_back({u, pos, neg});
        } else {
          pairs.push_back({u, pos, 1.0});
          pairs.push_back({u, neg, 0.0});
        }
        batch_users.push_back(u);
        batch_pos.push_back(pos);
        batch_neg.push_back(neg);
        if (distinct_users.empty() ||
            std::find(distinct_users.begin(), distinct_users.end(), u) ==
                distinct_users.end())
          distinct_users.push_back(u);
        batch_pairs.emplace_back(u, pos);
        batch_pairs.emplace_back(u, neg);
      }

      model_->params().zero_grads();
      de_store_.zero_grads();

      double base = 0.0;
      if (bpr)
        base = bpr_loss(*bpr, triples, mc.l2_reg, 1.0);
      else
        base = neumf_bce_loss(*neumf, pairs, mc.l2_reg, 1.0);

      double de_term = 0.0, rrd_term = 0.0, kd_term = 0.0;
      if (use_de) {
        if (model_->tap_kind() == TapKind::separate) {
          std::vector<int> item_entities = batch_pos;
          item_entities.insert(item_entities.end(), batch_neg.begin(),
                               batch_neg.end());
          de_term = de_loss_separate(*user_bank_, *item_bank_, *teacher,
                                     *model_, batch_users, item_entities, tau,
                                     cfg_.de_squared_norm, rng_gumbel, lambda_de);
        } else {
          de_term = de_loss_joint(*joint_bank_, *teacher, *model_, batch_pairs,
                                  tau, cfg_.de_squared_norm, rng_gumbel,
                                  lambda_de);
        }
      }
      if (use_rrd) {
        std::vector<DistillSample> batch_samples;
        batch_samples.reserve(distinct_users.size());
        for (int u : distinct_users) batch_samples.push_back(rrd_samples[u]);
        rrd_term = rrd_loss(*model_, batch_samples, rrd_cfg.mode, lambda_rrd);
      }
      if (use_rd) {
        const double inv_u = 1.0 / static_cast<double>(distinct_users.size());
        for (int u : distinct_users) {
          auto rng = make_rng(derive_seed(cfg_.seed, "rd_dyn",
                                          static_cast<std::uint64_t>(epoch),
                                          static_cast<std::uint64_t>(u)));
          std::span<const int> top(teacher->top_items[u].data(),
                                   std::min<std::size_t>(
                                       rd_cfg.top_k,
                                       teacher->top_items[u].size()));
          kd_term += inv_u * rd_loss(*model_, ds_, u, top, rd_cfg, epoch, rng,
                                     cfg_.lambda_kd * inv_u);
        }
      }
      if (use_cd) {
        const double inv_u = 1.0 / static_cast<double>(distinct_users.size());
        for (int u : distinct_users) {
          auto it = cd_cache.find(u);
          if (it == cd_cache.end()) {
            auto rng = make_rng(derive_seed(cfg_.seed, "cd",
                                            static_cast<std::uint64_t>(epoch),
                                            static_cast<std::uint64_t>(u)));
            auto items = cd_sample(*teacher, u, cd_cfg, rng);
            auto targets = cd_targets(*teacher, u, items);
            it = cd_cache.emplace(u, std::make_pair(std::move(items),
                                                    std::move(targets)))
                     .first;
          }
          kd_term += inv_u * cd_loss(*model_, u, it->second.first,
                                     it->second.second, cfg_.lambda_kd * inv_u);
        }
      }

      const double total = base + lambda_de * de_term + lambda_rrd * rrd_term +
                           cfg_.lambda_kd * kd_term;
      if (!std::isfinite(total))
        throw NumericError("non-finite loss at epoch " + std::to_string(epoch));

      adam_step(model_->params(), opt);
      if (use_de) adam_step(de_store_, de_opt);

      log.total_loss += total;
      log.base_loss += base;
      log.de_loss += de_term;
      log.rrd_loss += rrd_term;
      log.kd_loss += kd_term;
      ++batches;
    }

    if (batches > 0) {
      log.total_loss /= batches;
      log.base_loss /= batches;
      log.de_loss /= batches;
      log.rrd_loss /= batches;
      log.kd_loss /= batches;
      if (log.base_loss > 0.0) {
        log.ratio_de = std::abs(lambda_de * log.de_loss) / log.base_loss;
        log.ratio_rrd = std::abs(lambda_rrd * log.rrd_loss) / log.base_loss;
        log.ratio_kd = std::abs(cfg_.lambda_kd * log.kd_loss) / log.base_loss;
      }
    }

    const EvalReport val = evaluate(*model_, ds_, pool_, EvalPhase::validation);
    log.val_h5 = val.mean(5, 'H');
    val_history.push_back(log.val_h5);
    result.epochs.push_back(log);

    const EarlyStopDecision es = early_stop(val_history);
    if (es.best_epoch == epoch) {
      best_params.clear();
      for (const auto& [name, t] : model_->params().tensors())
        best_params[name] = t.values;
      best_de_params.clear();
      for (const auto& [name, t] : de_store_.tensors())
        best_de_params[name] = t.values;
    }
    result.best_epoch = es.best_epoch;
    result.best_val_h5 = es.best_value;
    result.stopped_epoch = epoch;
    if (es.stop) break;
  }

  // Best-epoch weights, snapped to the float32 grid used by snapshots.
  for (auto& [name, t] : model_->params().tensors())
    t.values = best_params.at(name);
  for (auto& [name, t] : de_store_.tensors())
    t.values = best_de_params.at(name);
  model_->params().quantize_f32();
  de_store_.quantize_f32();
  return result;
}

TeacherSnapshot Trainer::build_cache() const {
  return build_teacher_cache(*model_, ds_, cfg_.cache_size, cfg_.seed);
}

SnapshotMeta Trainer::snapshot_meta(const std::string& method_label,
                                    int best_epoch) const {
  SnapshotMeta meta;
  meta.base_model = to_string(cfg_.base_model);
  meta.num_users = ds_.num_users;
  meta.num_items = ds_.num_items;
  meta.dim = model_->tap_width();
  meta.neumf_layers =
      cfg_.base_model == BaseKind::neumf ? cfg_.neumf_layers : 0;
  meta.dataset_checksum = ds_.split_checksum();
  meta.seed = cfg_.seed;
  meta.best_epoch = best_epoch;
  meta.method = method_label;
  meta.phi = method_label == "teacher" ? 1.0 : cfg_.phi;
  return meta;
}

void write_train_log_csv(const std::string& path,
                         const std::vector<EpochLog>& epochs) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  out << "epoch,tau,total_loss,base_loss,de_loss,rrd_loss,kd_loss,"
         "ratio_de,ratio_rrd,ratio_kd,val_h5\n";
  out.precision(10);
  for (const auto& e : epochs)
    out << e.epoch << "," << e.tau << "," << e.total_loss << "," << e.base_loss
        << "," << e.de_loss << "," << e.rrd_loss << "," << e.kd_loss << ","
        << e.ratio_de << "," << e.ratio_rrd << "," << e.ratio_kd << ","
        << e.val_h5 << "\n";
}

}  // namespace derrd
