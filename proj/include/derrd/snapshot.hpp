#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>

#include "derrd/model.hpp"

namespace derrd {

struct SnapshotMeta {
  int format_version = 1;
  std::string base_model;  // "bpr" | "neumf"
  int num_users = 0;
  int num_items = 0;
  int dim = 0;        // BPR embedding width / NeuMF joint width
  int neumf_layers = 0;  // 0 for BPR
  std::uint64_t dataset_checksum = 0;
  std::uint64_t seed = 0;
  int best_epoch = 0;
  std::string method;  // "teacher", "student", "rd", ...
  double phi = 1.0;
};

// One-line JSON header followed by the named tensors as little-endian 32-bit
// reals in header-declared (name-sorted) order. Values are expected to be on
// the float32 grid already (training quantizes at the end), which makes
// load(save(m)) byte-identical and score-identical.
void save_snapshot(const std::string& path, const SnapshotMeta& meta,
                   const ParamStore& params);

// Rebuilds the model described by the header and fills its parameters.
// Refuses to load when expect_checksum is given and does not match.
std::unique_ptr<Model> load_snapshot(
    const std::string& path, SnapshotMeta* meta_out = nullptr,
    std::optional<std::uint64_t> expect_checksum = std::nullopt);

// Expert-bank parameters ride the same container with their own meta tag.
void save_param_blob(const std::string& path, const std::string& kind,
                     const SnapshotMeta& meta, const ParamStore& params);
SnapshotMeta load_param_blob(const std::string& path, const std::string& kind,
                             ParamStore& params);

// Tensor names and shapes declared by a snapshot header, without the data.
struct TensorSpec {
  std::string name;
  std::vector<std::size_t> shape;
};
std::vector<TensorSpec> peek_tensors(const std::string& path);

}  // namespace derrd
