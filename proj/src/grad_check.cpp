#include "derrd/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

namespace derrd {

namespace {
constexpr double kStep = 1e-4;
}

GradCheckReport finite_diff_check(const std::function<double()>& loss,
                                  ParamStore& params, double tol,
                                  std::mt19937_64& rng,
                                  std::size_t max_coords) {
  GradCheckReport report;

  params.zero_grads();
  const double base = loss();
  if (!std::isfinite(base)) return report;  // pass = false

  // Freeze the analytic gradients before we start perturbing.
  std::map<std::string, std::vector<double>> analytic;
  std::size_t total = 0;
  for (const auto& [name, t] : params.tensors()) {
    analytic[name] = t.grad;
    total += t.size();
  }

  // Pick coordinates: everything when small, otherwise a uniform sample.
  std::vector<std::pair<std::string, std::size_t>> coords;
  if (total <= max_coords) {
    for (const auto& [name, t] : params.tensors())
      for (std::size_t i = 0; i < t.size(); ++i) coords.emplace_back(name, i);
  } else {
    std::vector<std::pair<std::string, std::size_t>> all;
    all.reserve(total);
    for (const auto& [name, t] : params.tensors())
      for (std::size_t i = 0; i < t.size(); ++i) all.emplace_back(name, i);
    for (std::size_t k = 0; k < max_coords; ++k) {
      std::uniform_int_distribution<std::size_t> pick(k, all.size() - 1);
      std::swap(all[k], all[pick(rng)]);
      coords.push_back(all[k]);
    }
  }

  for (const auto& [name, idx] : coords) {
    double& v = params.at(name).values[idx];
    const double saved = v;

    v = saved + kStep;
    params.zero_grads();
    const double up = loss();
    v = saved - kStep;
    params.zero_grads();
    const double down = loss();
    v = saved;

    if (!std::isfinite(up) || !std::isfinite(down)) {
      ++report.skipped;
      continue;
    }
    const double fd = (up - down) / (2.0 * kStep);
    const double rel = std::abs(analytic[name][idx] - fd) / std::max(1.0, std::abs(fd));
    ++report.checked;
    if (rel > report.max_rel_err) {
      report.max_rel_err = rel;
      report.worst_tensor = name;
      report.worst_index = idx;
    }
  }

  report.pass = report.checked > 0 && report.max_rel_err <= tol;

  // Leave the store in the state the caller handed it over: analytic grads.
  params.zero_grads();
  loss();
  return report;
}

}  // namespace derrd
