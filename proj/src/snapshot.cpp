#include "derrd/snapshot.hpp"

#include <cstdio>
#include <fstream>

#include "derrd/bpr.hpp"
#include "derrd/errors.hpp"
#include "derrd/neumf.hpp"
#include "derrd/rng.hpp"
#include "json.hpp"

namespace derrd {

namespace {

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

nlohmann::json header_json(const std::string& kind, const SnapshotMeta& meta,
                           const ParamStore& params) {
  nlohmann::json h;
  h["format_version"] = meta.format_version;
  h["kind"] = kind;
  h["base_model"] = meta.base_model;
  h["num_users"] = meta.num_users;
  h["num_items"] = meta.num_items;
  h["dim"] = meta.dim;
  h["neumf_layers"] = meta.neumf_layers;
  h["dataset_checksum"] = hex64(meta.dataset_checksum);
  h["seed"] = meta.seed;
  h["best_epoch"] = meta.best_epoch;
  h["method"] = meta.method;
  h["phi"] = meta.phi;
  nlohmann::json tensors = nlohmann::json::array();
  for (const auto& [name, t] : params.tensors()) {
    nlohmann::json entry;
    entry["name"] = name;
    entry["shape"] = t.shape;
    tensors.push_back(entry);
  }
  h["tensors"] = tensors;
  return h;
}

void write_blob(std::ofstream& out, const ParamStore& params) {
  for (const auto& [name, t] : params.tensors())
    for (double v : t.values) {
      const float f = static_cast<float>(v);
      out.write(reinterpret_cast<const char*>(&f), sizeof f);
    }
}

SnapshotMeta parse_meta(const nlohmann::json& h) {
  SnapshotMeta meta;
  meta.format_version = h.at("format_version").get<int>();
  meta.base_model = h.at("base_model").get<std::string>();
  meta.num_users = h.at("num_users").get<int>();
  meta.num_items = h.at("num_items").get<int>();
  meta.dim = h.at("dim").get<int>();
  meta.neumf_layers = h.at("neumf_layers").get<int>();
  meta.dataset_checksum =
      std::stoull(h.at("dataset_checksum").get<std::string>(), nullptr, 16);
  meta.seed = h.at("seed").get<std::uint64_t>();
  meta.best_epoch = h.at("best_epoch").get<int>();
  meta.method = h.at("method").get<std::string>();
  meta.phi = h.at("phi").get<double>();
  return meta;
}

void read_blob(std::ifstream& in, const nlohmann::json& h, ParamStore& params,
               const std::string& path) {
  for (const auto& entry : h.at("tensors")) {
    const std::string name = entry.at("name").get<std::string>();
    if (!params.has(name))
      throw ConfigError(path + ": unexpected tensor '" + name + "'");
    Tensor& t = params.at(name);
    const auto shape = entry.at("shape").get<std::vector<std::size_t>>();
    if (shape != t.shape)
      throw ConfigError(path + ": shape mismatch for tensor '" + name + "'");
    for (double& v : t.values) {
      float f = 0.0f;
      in.read(reinterpret_cast<char*>(&f), sizeof f);
      if (!in) throw ConfigError(path + ": truncated tensor data");
      v = static_cast<double>(f);
    }
  }
}

}  // namespace

void save_param_blob(const std::string& path, const std::string& kind,
                     const SnapshotMeta& meta, const ParamStore& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write snapshot: " + path);
  out << header_json(kind, meta, params).dump() << "\n";
  write_blob(out, params);
}

SnapshotMeta load_param_blob(const std::string& path, const std::string& kind,
                             ParamStore& params) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read snapshot: " + path);
  std::string line;
  std::getline(in, line);
  const nlohmann::json h = nlohmann::json::parse(line);
  if (h.value("kind", "") != kind)
    throw ConfigError(path + ": expected a '" + kind + "' file");
  read_blob(in, h, params, path);
  return parse_meta(h);
}

std::vector<TensorSpec> peek_tensors(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read snapshot: " + path);
  std::string line;
  std::getline(in, line);
  const nlohmann::json h = nlohmann::json::parse(line);
  std::vector<TensorSpec> specs;
  for (const auto& entry : h.at("tensors"))
    specs.push_back({entry.at("name").get<std::string>(),
                     entry.at("shape").get<std::vector<std::size_t>>()});
  return specs;
}

void save_snapshot(const std::string& path, const SnapshotMeta& meta,
                   const ParamStore& params) {
  save_param_blob(path, "model", meta, params);
}

std::unique_ptr<Model> load_snapshot(const std::string& path,
                                     SnapshotMeta* meta_out,
                                     std::optional<std::uint64_t> expect_checksum) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read snapshot: " + path);
  std::string line;
  std::getline(in, line);
  const nlohmann::json h = nlohmann::json::parse(line);
  if (h.value("kind", "") != "model")
    throw ConfigError(path + ": not a model snapshot");
  SnapshotMeta meta = parse_meta(h);
  if (expect_checksum && meta.dataset_checksum != *expect_checksum)
    throw ConfigError(path + ": snapshot checksum does not match the dataset");

  auto rng = make_rng(0);  // values are overwritten below
  std::unique_ptr<Model> model;
  if (meta.base_model == "bpr")
    model = std::make_unique<BprModel>(meta.num_users, meta.num_items,
                                       meta.dim, rng);
  else if (meta.base_model == "neumf")
    model = std::make_unique<NeumfModel>(meta.num_users, meta.num_items,
                                         meta.dim, meta.neumf_layers, rng);
  else
    throw ConfigError(path + ": unknown base model '" + meta.base_model + "'");

  read_blob(in, h, model->params(), path);
  if (meta_out) *meta_out = meta;
  return model;
}

}  // namespace derrd
