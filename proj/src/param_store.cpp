#include "derrd/param_store.hpp"

#include <cmath>
#include <stdexcept>

namespace derrd {

Tensor& ParamStore::add(const std::string& name, std::vector<std::size_t> shape) {
  if (tensors_.count(name))
    throw std::logic_error("duplicate tensor name: " + name);
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  Tensor t;
  t.shape = std::move(shape);
  t.values.assign(n, 0.0);
  t.grad.assign(n, 0.0);
  return tensors_.emplace(name, std::move(t)).first->second;
}

Tensor& ParamStore::at(const std::string& name) {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) throw std::logic_error("no tensor named " + name);
  return it->second;
}

const Tensor& ParamStore::at(const std::string& name) const {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) throw std::logic_error("no tensor named " + name);
  return it->second;
}

bool ParamStore::has(const std::string& name) const {
  return tensors_.count(name) != 0;
}

void ParamStore::zero_grads() {
  for (auto& [name, t] : tensors_)
    std::fill(t.grad.begin(), t.grad.end(), 0.0);
}

std::size_t ParamStore::param_count() const {
  std::size_t n = 0;
  for (const auto& [name, t] : tensors_) n += t.size();
  return n;
}

void ParamStore::quantize_f32() {
  for (auto& [name, t] : tensors_)
    for (double& v : t.values) v = static_cast<double>(static_cast<float>(v));
}

std::string ParamStore::first_nonfinite_grad() const {
  for (const auto& [name, t] : tensors_)
    for (double g : t.grad)
      if (!std::isfinite(g)) return name;
  return {};
}

}  // namespace derrd
