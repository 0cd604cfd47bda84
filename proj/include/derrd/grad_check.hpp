#pragma once

#include <functional>
#include <random>
#include <string>

#include "derrd/param_store.hpp"

namespace derrd {

struct GradCheckReport {
  bool pass = false;
  double max_rel_err = 0.0;
  std::string worst_tensor;
  std::size_t worst_index = 0;
  std::size_t checked = 0;
  std::size_t skipped = 0;  // coordinates where a perturbed loss was non-finite
};

// Central-difference gradient check. `loss` must recompute the loss for the
// current parameter values and accumulate analytic gradients into the store's
// grad slots (the harness zeroes them before each call). The loss has to be
// deterministic across calls: closures with internal randomness must reset
// their rng on entry.
//
// Relative error per coordinate is |g_analytic - g_fd| / max(1, |g_fd|);
// the check passes iff the maximum over sampled coordinates is <= tol.
// At most `max_coords` coordinates are sampled (all of them if the store is
// small enough); h = 1e-4 on 64-bit reals.
GradCheckReport finite_diff_check(const std::function<double()>& loss,
                                  ParamStore& params, double tol,
                                  std::mt19937_64& rng,
                                  std::size_t max_coords = 400);

}  // namespace derrd
