#include "derrd/adam.hpp"

#include <cmath>

#include "derrd/errors.hpp"

namespace derrd {

void adam_step(ParamStore& params, AdamState& state) {
  const std::string bad = params.first_nonfinite_grad();
  if (!bad.empty())
    throw NumericError("non-finite gradient in tensor '" + bad + "'");

  params.step += 1;
  const double t = static_cast<double>(params.step);
  const double bc1 = 1.0 - std::pow(state.beta1, t);
  const double bc2 = 1.0 - std::pow(state.beta2, t);

  for (auto& [name, tensor] : params.tensors()) {
    auto& mom = state.moments[name];
    if (mom.m.empty()) {
      mom.m.assign(tensor.size(), 0.0);
      mom.v.assign(tensor.size(), 0.0);
    }
    for (std::size_t i = 0; i < tensor.size(); ++i) {
      const double g = tensor.grad[i];
      mom.m[i] = state.beta1 * mom.m[i] + (1.0 - state.beta1) * g;
      mom.v[i] = state.beta2 * mom.v[i] + (1.0 - state.beta2) * g * g;
      const double mhat = mom.m[i] / bc1;
      const double vhat = mom.v[i] / bc2;
      tensor.values[i] -= state.learning_rate * mhat / (std::sqrt(vhat) + state.eps);
    }
  }
}

}  // namespace derrd
