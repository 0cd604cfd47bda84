#include "derrd/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "derrd/errors.hpp"
#include "derrd/rng.hpp"

namespace derrd {

bool InteractionDataset::in_train(int user, int item) const {
  const auto& v = train[user];
  return std::binary_search(v.begin(), v.end(), item);
}

bool InteractionDataset::is_eval_negative_candidate(int user, int item) const {
  return item != val_item[user] && item != test_item[user] && !in_train(user, item);
}

std::size_t InteractionDataset::train_interactions() const {
  std::size_t n = 0;
  for (const auto& v : train) n += v.size();
  return n;
}

std::uint64_t InteractionDataset::split_checksum() const {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
  pairs.reserve(train_interactions() + 2 * num_users);
  for (int u = 0; u < num_users; ++u) {
    for (int i : train[u]) pairs.emplace_back(u, i);
    pairs.emplace_back(u, val_item[u]);
    pairs.emplace_back(u, test_item[u]);
  }
  std::sort(pairs.begin(), pairs.end());
  std::uint64_t h = 14695981039346656037ULL;
  for (const auto& [u, i] : pairs) {
    std::uint8_t buf[8] = {
        static_cast<std::uint8_t>(u),       static_cast<std::uint8_t>(u >> 8),
        static_cast<std::uint8_t>(u >> 16), static_cast<std::uint8_t>(u >> 24),
        static_cast<std::uint8_t>(i),       static_cast<std::uint8_t>(i >> 8),
        static_cast<std::uint8_t>(i >> 16), static_cast<std::uint8_t>(i >> 24)};
    h = fnv1a64(buf, 8, h);
  }
  return h;
}

namespace {

struct RawLog {
  // per user: distinct items in first-seen file order
  std::vector<std::string> users;  // first-seen order
  std::vector<std::string> items;
  std::map<std::string, std::size_t> user_of;
  std::map<std::string, std::size_t> item_of;
  std::vector<std::vector<std::size_t>> events;  // user -> item indices, file order
};

RawLog parse_tsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open interaction file: " + path);
  RawLog log;
  std::set<std::pair<std::size_t, std::size_t>> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string u, i;
    if (!(ss >> u >> i))
      throw ConfigError(path + ":" + std::to_string(lineno) +
                        ": expected `user<TAB>item`");
    auto uit = log.user_of.emplace(u, log.users.size());
    if (uit.second) {
      log.users.push_back(u);
      log.events.emplace_back();
    }
    auto iit = log.item_of.emplace(i, log.items.size());
    if (iit.second) log.items.push_back(i);
    const std::size_t uid = uit.first->second;
    const std::size_t iid = iit.first->second;
    if (seen.emplace(uid, iid).second) log.events[uid].push_back(iid);
  }
  return log;
}

}  // namespace

InteractionDataset load_interactions(const std::string& path,
                                     int min_user_interactions) {
  RawLog log = parse_tsv(path);

  const std::size_t nu = log.users.size();
  const std::size_t ni = log.items.size();
  std::vector<char> user_alive(nu, 1), item_alive(ni, 1);

  // Iterate the user-count filter and the empty-item prune to a fixpoint.
  bool changed = true;
  while (changed) {
    changed = false;
    std::vector<std::size_t> item_count(ni, 0);
    for (std::size_t u = 0; u < nu; ++u) {
      if (!user_alive[u]) continue;
      std::size_t cnt = 0;
      for (std::size_t i : log.events[u])
        if (item_alive[i]) ++cnt;
      if (cnt < static_cast<std::size_t>(min_user_interactions)) {
        user_alive[u] = 0;
        changed = true;
      } else {
        for (std::size_t i : log.events[u])
          if (item_alive[i]) ++item_count[i];
      }
    }
    for (std::size_t i = 0; i < ni; ++i) {
      if (item_alive[i] && item_count[i] == 0) {
        item_alive[i] = 0;
        changed = true;
      }
    }
  }

  // A split needs train + val + test: drop users with fewer than 3 items.
  std::size_t rejected = 0;
  for (std::size_t u = 0; u < nu; ++u) {
    if (!user_alive[u]) continue;
    std::size_t cnt = 0;
    for (std::size_t i : log.events[u])
      if (item_alive[i]) ++cnt;
    if (cnt < 3) {
      user_alive[u] = 0;
      ++rejected;
      std::cerr << "[warn] user '" << log.users[u]
                << "' has fewer than 3 distinct items; rejected\n";
    }
  }
  if (rejected) {
    std::vector<std::size_t> item_count(ni, 0);
    for (std::size_t u = 0; u < nu; ++u)
      if (user_alive[u])
        for (std::size_t i : log.events[u])
          if (item_alive[i]) ++item_count[i];
    for (std::size_t i = 0; i < ni; ++i)
      if (item_alive[i] && item_count[i] == 0) item_alive[i] = 0;
  }

  InteractionDataset ds;
  std::vector<int> user_dense(nu, -1), item_dense(ni, -1);
  for (std::size_t u = 0; u < nu; ++u) {
    if (!user_alive[u]) continue;
    user_dense[u] = ds.num_users++;
    ds.user_raw.push_back(log.users[u]);
    ds.user_index[log.users[u]] = user_dense[u];
  }
  if (ds.num_users == 0) throw ConfigError("empty dataset after filtering: " + path);

  // RawLog keeps items in first-seen file order; dense ids follow it.
  ds.train.resize(ds.num_users);
  ds.val_item.assign(ds.num_users, -1);
  ds.test_item.assign(ds.num_users, -1);
  for (std::size_t i = 0; i < ni; ++i) {
    if (!item_alive[i]) continue;
    item_dense[i] = ds.num_items++;
    ds.item_raw.push_back(log.items[i]);
    ds.item_index[log.items[i]] = item_dense[i];
  }
  for (std::size_t u = 0; u < nu; ++u) {
    if (!user_alive[u]) continue;
    std::vector<int> kept;
    for (std::size_t i : log.events[u])
      if (item_alive[i]) kept.push_back(item_dense[i]);
    const int du = user_dense[u];
    ds.test_item[du] = kept[kept.size() - 1];
    ds.val_item[du] = kept[kept.size() - 2];
    kept.resize(kept.size() - 2);
    std::sort(kept.begin(), kept.end());
    ds.train[du] = std::move(kept);
  }
  return ds;
}

std::vector<int> sample_train_negatives(const InteractionDataset& ds, int user,
                                        int n, std::mt19937_64& rng) {
  const std::size_t observed = ds.train[user].size() + 2;
  if (observed >= static_cast<std::size_t>(ds.num_items))
    throw ConfigError("user " + std::to_string(user) +
                      " has no unobserved items to sample");
  std::vector<int> out;
  out.reserve(n);
  std::uniform_int_distribution<int> pick(0, ds.num_items - 1);
  while (static_cast<int>(out.size()) < n) {
    const int item = pick(rng);
    if (ds.is_eval_negative_candidate(user, item)) out.push_back(item);
  }
  return out;
}

std::vector<int> sample_eval_negatives(const InteractionDataset& ds,
                                       std::uint64_t seed, int user,
                                       int repeat) {
  std::vector<int> pool;
  pool.reserve(ds.num_items);
  for (int i = 0; i < ds.num_items; ++i)
    if (ds.is_eval_negative_candidate(user, i)) pool.push_back(i);

  auto rng = make_rng(derive_seed(seed, "eval_pool", static_cast<std::uint64_t>(user),
                                  static_cast<std::uint64_t>(repeat)));
  const std::size_t want =
      std::min<std::size_t>(NegativePool::kDrawSize, pool.size());
  for (std::size_t k = 0; k < want; ++k) {
    std::uniform_int_distribution<std::size_t> pick(k, pool.size() - 1);
    std::swap(pool[k], pool[pick(rng)]);
  }
  pool.resize(want);
  return pool;
}

NegativePool build_negative_pool(const InteractionDataset& ds,
                                 std::uint64_t seed) {
  NegativePool pool;
  pool.seed = seed;
  pool.draws.resize(ds.num_users);
  int shrunk = 0;
  for (int u = 0; u < ds.num_users; ++u) {
    bool user_shrunk = false;
    for (int r = 0; r < NegativePool::kRepeats; ++r) {
      pool.draws[u][r] = sample_eval_negatives(ds, seed, u, r);
      user_shrunk |= pool.draws[u][r].size() <
                     static_cast<std::size_t>(NegativePool::kDrawSize);
    }
    if (user_shrunk) ++shrunk;
  }
  if (shrunk > 0)
    std::cerr << "[warn] " << shrunk << "/" << ds.num_users
              << " users have fewer than " << NegativePool::kDrawSize
              << " unobserved items; their draws were shrunk\n";
  return pool;
}

std::string dataset_manifest(const InteractionDataset& ds) {
  std::ostringstream out;
  out << "users " << ds.num_users << "\n"
      << "items " << ds.num_items << "\n"
      << "train_interactions " << ds.train_interactions() << "\n"
      << "total_interactions " << ds.train_interactions() + 2 * ds.num_users << "\n"
      << "split_checksum " << std::hex << ds.split_checksum() << std::dec << "\n";
  return out.str();
}

}  // namespace derrd
