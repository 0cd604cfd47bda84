#include "derrd/model.hpp"

#include <algorithm>

#include "derrd/errors.hpp"

namespace derrd {

std::string to_string(BaseKind k) {
  return k == BaseKind::bpr ? "bpr" : "neumf";
}

BaseKind base_kind_from_string(const std::string& s) {
  if (s == "bpr") return BaseKind::bpr;
  if (s == "neumf") return BaseKind::neumf;
  throw ConfigError("unknown base model '" + s + "' (expected bpr|neumf)");
}

void Model::user_tap(int, std::span<double>) const {
  throw std::logic_error("model has no separate user tap");
}
void Model::item_tap(int, std::span<double>) const {
  throw std::logic_error("model has no separate item tap");
}
void Model::add_user_tap_grad(int, std::span<const double>) {
  throw std::logic_error("model has no separate user tap");
}
void Model::add_item_tap_grad(int, std::span<const double>) {
  throw std::logic_error("model has no separate item tap");
}
void Model::pair_tap(int, int, std::span<double>) const {
  throw std::logic_error("model has no joint tap");
}
void Model::add_pair_tap_grad(int, int, std::span<const double>) {
  throw std::logic_error("model has no joint tap");
}

std::size_t param_count(const Model& m) { return m.params().param_count(); }

std::vector<int> full_ranking(const Model& m, int user,
                              std::span<const int> exclude_sorted) {
  std::vector<double> scores;
  m.scores_for_user(user, scores);
  std::vector<int> items;
  items.reserve(scores.size() - exclude_sorted.size());
  for (int i = 0; i < static_cast<int>(scores.size()); ++i)
    if (!std::binary_search(exclude_sorted.begin(), exclude_sorted.end(), i))
      items.push_back(i);
  std::sort(items.begin(), items.end(), [&](int a, int b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  });
  return items;
}

}  // namespace derrd
