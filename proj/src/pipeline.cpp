#include "derrd/pipeline.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>

#include "derrd/errors.hpp"
#include "derrd/rng.hpp"
#include "derrd/trainer.hpp"

namespace derrd {

namespace {

void ensure_dir(const std::string& dir) {
  if (dir.empty()) throw ConfigError("output_dir is required");
  std::filesystem::create_directories(dir);
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  out << text;
}

void evaluate_and_write(const Model& m, const InteractionDataset& ds,
                        const NegativePool& pool, const std::string& method,
                        double phi, const RunPaths& paths) {
  const EvalReport val = evaluate(m, ds, pool, EvalPhase::validation);
  const EvalReport test = evaluate(m, ds, pool, EvalPhase::test);
  write_eval_csv(paths.eval_csv("validation"), method, phi, val);
  write_eval_csv(paths.eval_csv("test"), method, phi, test);
  write_hits_csv(paths.hits_csv("validation"), val);
  write_hits_csv(paths.hits_csv("test"), test);
  std::cout << method << " (phi=" << phi << "): test H@5 " << test.mean(5, 'H')
            << ", N@5 " << test.mean(5, 'N') << ", M@5 " << test.mean(5, 'M')
            << "\n";
}

// The teacher run dir holds the frozen teacher; students validate against it.
TeacherSnapshot load_teacher_dir(const std::string& teacher_dir,
                                 const InteractionDataset& ds) {
  const RunPaths paths{teacher_dir};
  SnapshotMeta meta;
  auto model = load_snapshot(paths.snapshot(), &meta, ds.split_checksum());
  return load_teacher_cache(paths.teacher_cache(), std::move(model),
                            ds.split_checksum());
}

}  // namespace

void run_prepare_data(const ExperimentConfig& cfg) {
  ensure_dir(cfg.output_dir);
  const InteractionDataset ds =
      load_interactions(cfg.dataset, cfg.min_user_interactions);
  const RunPaths paths{cfg.output_dir};
  write_text(paths.manifest(), dataset_manifest(ds));
  std::cout << dataset_manifest(ds);
}

void run_train_teacher(const ExperimentConfig& cfg) {
  ensure_dir(cfg.output_dir);
  const InteractionDataset ds =
      load_interactions(cfg.dataset, cfg.min_user_interactions);
  const RunPaths paths{cfg.output_dir};
  write_text(paths.config(), ConfigParser::echo(cfg));

  Trainer trainer(cfg, ds);
  const TrainResult result = trainer.train_teacher();
  std::cout << "teacher trained: best epoch " << result.best_epoch
            << " (val H@5 " << result.best_val_h5 << "), stopped at epoch "
            << result.stopped_epoch << "\n";

  save_snapshot(paths.snapshot(), trainer.snapshot_meta("teacher", result.best_epoch),
                trainer.model().params());
  const TeacherSnapshot cache = trainer.build_cache();
  save_teacher_cache(paths.teacher_cache(), cache);
  write_train_log_csv(paths.train_log(), result.epochs);
  evaluate_and_write(trainer.model(), ds, trainer.pool(), "teacher", 1.0, paths);
}

void run_distill(const ExperimentConfig& cfg, const std::string& teacher_dir) {
  ensure_dir(cfg.output_dir);
  const InteractionDataset ds =
      load_interactions(cfg.dataset, cfg.min_user_interactions);
  const RunPaths paths{cfg.output_dir};
  write_text(paths.config(), ConfigParser::echo(cfg));

  TeacherSnapshot teacher;
  const bool needs_teacher = cfg.method != Method::none;
  if (needs_teacher) teacher = load_teacher_dir(teacher_dir, ds);

  Trainer trainer(cfg, ds);
  const TrainResult result =
      trainer.distill(needs_teacher ? &teacher : nullptr);
  const std::string label =
      cfg.method == Method::none ? "student" : to_string(cfg.method);
  std::cout << label << " trained: best epoch " << result.best_epoch
            << " (val H@5 " << result.best_val_h5 << "), stopped at epoch "
            << result.stopped_epoch << "\n";

  // The experts and selection network are training-time machinery; the model
  // snapshot carries the student parameters only.
  save_snapshot(paths.snapshot(), trainer.snapshot_meta(label, result.best_epoch),
                trainer.model().params());
  if (trainer.has_expert_banks())
    save_param_blob(paths.expert_bank(), "expert_bank",
                    trainer.snapshot_meta(label, result.best_epoch),
                    trainer.de_params());
  write_train_log_csv(paths.train_log(), result.epochs);
  evaluate_and_write(trainer.model(), ds, trainer.pool(), label, cfg.phi, paths);
}

void run_evaluate(const std::string& snapshot_path, const std::string& dataset,
                  int min_user_interactions, const std::string& output_dir) {
  ensure_dir(output_dir);
  const InteractionDataset ds = load_interactions(dataset, min_user_interactions);
  SnapshotMeta meta;
  const auto model = load_snapshot(snapshot_path, &meta, ds.split_checksum());
  const NegativePool pool = build_negative_pool(ds, meta.seed);
  evaluate_and_write(*model, ds, pool, meta.method, meta.phi,
                     RunPaths{output_dir});
}

void run_bench_latency(const std::string& snapshot_path,
                       const std::string& dataset, int min_user_interactions,
                       int repeats, const std::string& output_dir) {
  ensure_dir(output_dir);
  const InteractionDataset ds = load_interactions(dataset, min_user_interactions);
  SnapshotMeta meta;
  const auto model = load_snapshot(snapshot_path, &meta, ds.split_checksum());
  const LatencyReport report = bench_latency(*model, ds, repeats);

  const RunPaths paths{output_dir};
  std::ofstream out(paths.latency_csv());
  if (!out) throw ConfigError("cannot write " + paths.latency_csv());
  out.precision(10);
  out << "method,phi,repeats,median_seconds,param_count\n"
      << meta.method << "," << meta.phi << "," << report.repeats << ","
      << report.seconds << "," << report.params << "\n";
  std::cout << meta.method << " (phi=" << meta.phi << "): " << report.seconds
            << "s for full ranking of " << ds.num_users << " users, "
            << report.params << " params\n";
}

void run_export_experts(const std::string& teacher_dir,
                        const std::string& bank_path,
                        const std::string& dataset, int min_user_interactions,
                        const std::string& out_csv) {
  const InteractionDataset ds = load_interactions(dataset, min_user_interactions);
  const TeacherSnapshot teacher = load_teacher_dir(teacher_dir, ds);

  // Rebuild banks with the shapes declared in the bank file, then load the
  // trained parameters into them.
  const std::vector<TensorSpec> specs = peek_tensors(bank_path);
  std::vector<std::pair<std::string, std::string>> sides;  // prefix, entity type
  DeConfig de;
  int d_s = 0, d_t = 0;
  for (const auto& spec : specs) {
    if (spec.name == "de.j.e0.w1") sides = {{"de.j", "pair"}};
    if (spec.name == "de.u.e0.w1")
      sides = {{"de.u", "user"}, {"de.i", "item"}};
    if (spec.name.ends_with(".sel.w")) {
      de.num_experts = static_cast<int>(spec.shape[0]);
      d_t = static_cast<int>(spec.shape[1]);
    }
    if (spec.name.ends_with(".e0.w1")) d_s = static_cast<int>(spec.shape[1]);
  }
  if (sides.empty() || d_s == 0 || d_t == 0)
    throw ConfigError(bank_path + " does not look like an expert bank");

  ParamStore store;
  auto rng = make_rng(0);  // overwritten by the stored values
  std::vector<std::unique_ptr<ExpertBank>> banks;
  for (const auto& [prefix, type] : sides)
    banks.push_back(std::make_unique<ExpertBank>(store, prefix, de, d_s, d_t, rng));
  load_param_blob(bank_path, "expert_bank", store);

  std::vector<ExpertAssignment> rows;
  for (std::size_t b = 0; b < banks.size(); ++b) {
    auto part = export_expert_assignments(*banks[b], teacher, sides[b].second);
    rows.insert(rows.end(), part.begin(), part.end());
  }
  write_expert_assignment_csv(out_csv, rows, de.num_experts);
  std::cout << "wrote " << rows.size() << " expert assignments to " << out_csv
            << "\n";
}

}  // namespace derrd
