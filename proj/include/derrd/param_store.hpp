#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace derrd {

struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> values;
  std::vector<double> grad;

  std::size_t size() const { return values.size(); }
};

// Named dense tensors with gradient slots. A store is exclusively owned by
// one training loop; frozen copies may be shared read-only across threads.
class ParamStore {
 public:
  Tensor& add(const std::string& name, std::vector<std::size_t> shape);
  Tensor& at(const std::string& name);
  const Tensor& at(const std::string& name) const;
  bool has(const std::string& name) const;

  void zero_grads();
  std::size_t param_count() const;

  // Snap every value to the nearest float32. Called once at the end of
  // training so the in-memory model and its stored snapshot score
  // identically.
  void quantize_f32();

  // Name of the first tensor holding a non-finite value/grad, or empty.
  std::string first_nonfinite_grad() const;

  std::map<std::string, Tensor>& tensors() { return tensors_; }
  const std::map<std::string, Tensor>& tensors() const { return tensors_; }

  std::uint64_t step = 0;

 private:
  std::map<std::string, Tensor> tensors_;
};

}  // namespace derrd
