#include "derrd/teacher_cache.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include "derrd/errors.hpp"
#include "json.hpp"

namespace derrd {

TeacherSnapshot build_teacher_cache(const Model& teacher,
                                    const InteractionDataset& ds,
                                    int cache_size, std::uint64_t seed) {
  TeacherSnapshot snap;
  snap.model = teacher.clone();
  snap.cache_size = cache_size;
  snap.dataset_checksum = ds.split_checksum();
  snap.seed = seed;
  snap.top_items.resize(ds.num_users);
  snap.top_scores.resize(ds.num_users);

  std::vector<double> scores;
  for (int u = 0; u < ds.num_users; ++u) {
    const std::vector<int> ranked = full_ranking(teacher, u, ds.train[u]);
    if (ranked.empty())
      throw ConfigError("user " + std::to_string(u) +
                        " has no unobserved items to cache");
    teacher.scores_for_user(u, scores);
    const int keep = std::min<int>(cache_size, static_cast<int>(ranked.size()));
    snap.top_items[u].assign(ranked.begin(), ranked.begin() + keep);
    snap.top_scores[u].resize(keep);
    for (int k = 0; k < keep; ++k) snap.top_scores[u][k] = scores[ranked[k]];
  }
  return snap;
}

void save_teacher_cache(const std::string& path, const TeacherSnapshot& snap) {
  nlohmann::json header;
  header["format_version"] = 1;
  header["kind"] = "teacher_cache";
  header["base_model"] = to_string(snap.base());
  header["d_t"] = snap.d_t();
  header["num_users"] = snap.model->num_users();
  header["num_items"] = snap.model->num_items();
  header["cache_size"] = snap.cache_size;
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(snap.dataset_checksum));
  header["dataset_checksum"] = buf;
  header["seed"] = snap.seed;

  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write teacher cache: " + path);
  out << header.dump() << "\n";
  for (std::size_t u = 0; u < snap.top_items.size(); ++u) {
    const auto& items = snap.top_items[u];
    const auto& scores = snap.top_scores[u];
    const std::uint32_t n = static_cast<std::uint32_t>(items.size());
    out.write(reinterpret_cast<const char*>(&n), sizeof n);
    for (std::uint32_t k = 0; k < n; ++k) {
      const std::uint32_t item = static_cast<std::uint32_t>(items[k]);
      out.write(reinterpret_cast<const char*>(&item), sizeof item);
      out.write(reinterpret_cast<const char*>(&scores[k]), sizeof(double));
    }
  }
}

TeacherSnapshot load_teacher_cache(const std::string& path,
                                   std::unique_ptr<Model> model,
                                   std::uint64_t expect_checksum) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read teacher cache: " + path);
  std::string line;
  std::getline(in, line);
  nlohmann::json header = nlohmann::json::parse(line);
  if (header.value("kind", "") != "teacher_cache")
    throw ConfigError(path + " is not a teacher cache file");

  TeacherSnapshot snap;
  snap.dataset_checksum =
      std::stoull(header.at("dataset_checksum").get<std::string>(), nullptr, 16);
  if (snap.dataset_checksum != expect_checksum)
    throw ConfigError("teacher cache checksum does not match the dataset");
  if (header.at("base_model").get<std::string>() != to_string(model->kind()) ||
      header.at("d_t").get<int>() != model->tap_width() ||
      header.at("num_users").get<int>() != model->num_users() ||
      header.at("num_items").get<int>() != model->num_items())
    throw ConfigError("teacher cache does not match the teacher snapshot");
  snap.cache_size = header.at("cache_size").get<int>();
  snap.seed = header.at("seed").get<std::uint64_t>();

  const int nu = model->num_users();
  snap.model = std::move(model);
  snap.top_items.resize(nu);
  snap.top_scores.resize(nu);
  for (int u = 0; u < nu; ++u) {
    std::uint32_t n = 0;
    in.read(reinterpret_cast<char*>(&n), sizeof n);
    if (!in) throw ConfigError("truncated teacher cache: " + path);
    snap.top_items[u].resize(n);
    snap.top_scores[u].resize(n);
    for (std::uint32_t k = 0; k < n; ++k) {
      std::uint32_t item = 0;
      in.read(reinterpret_cast<char*>(&item), sizeof item);
      in.read(reinterpret_cast<char*>(&snap.top_scores[u][k]), sizeof(double));
      snap.top_items[u][k] = static_cast<int>(item);
    }
  }
  return snap;
}

}  // namespace derrd
