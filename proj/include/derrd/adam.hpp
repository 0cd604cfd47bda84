#pragma once

#include <map>
#include <string>
#include <vector>

#include "derrd/param_store.hpp"

namespace derrd {

struct AdamState {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  struct Moments {
    std::vector<double> m;
    std::vector<double> v;
  };
  std::map<std::string, Moments> moments;
};

// Bias-corrected Adam update over every tensor in the store. Increments the
// store's global step; gradients are left untouched (the caller zeroes).
// Throws NumericError naming the offending tensor on a non-finite gradient.
void adam_step(ParamStore& params, AdamState& state);

}  // namespace derrd
