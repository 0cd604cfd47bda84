#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

namespace derrd {

inline double sigmoid(double x) {
  if (x >= 0.0) {
    const double z = std::exp(-x);
    return 1.0 / (1.0 + z);
  }
  const double z = std::exp(x);
  return z / (1.0 + z);
}

// log(1 + e^x) without overflow.
inline double softplus(double x) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

// log sigma(x) = -softplus(-x)
inline double log_sigmoid(double x) { return -softplus(-x); }

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double squared_norm(std::span<const double> a) {
  double s = 0.0;
  for (double v : a) s += v * v;
  return s;
}

// In-place log-sum-exp stabilized softmax.
inline void softmax_inplace(std::span<double> x) {
  const double m = *std::max_element(x.begin(), x.end());
  double sum = 0.0;
  for (double& v : x) {
    v = std::exp(v - m);
    sum += v;
  }
  for (double& v : x) v /= sum;
}

// Backprop through y = softmax(x): given dL/dy, returns dL/dx.
inline std::vector<double> softmax_backward(std::span<const double> y,
                                            std::span<const double> dy) {
  double inner = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) inner += y[i] * dy[i];
  std::vector<double> dx(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) dx[i] = y[i] * (dy[i] - inner);
  return dx;
}

}  // namespace derrd
