#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace gazerisk {

/// Dense row-major f64 tensor. Shapes are explicit and checked; there is no
/// broadcasting and no implicit reshaping.
struct Tensor {
  std::vector<int> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
    data.assign(element_count(shape), 0.0);
  }
  Tensor(std::vector<int> s, std::vector<double> d)
      : shape(std::move(s)), data(std::move(d)) {
    if (data.size() != element_count(shape))
      throw std::invalid_argument("Tensor: data length does not match shape");
  }

  static std::size_t element_count(const std::vector<int>& s) {
    std::size_t n = 1;
    for (int d : s) {
      if (d <= 0) throw std::invalid_argument("Tensor: nonpositive dimension");
      n *= static_cast<std::size_t>(d);
    }
    return n;
  }

  std::size_t size() const { return data.size(); }

  double& operator[](std::size_t i) { return data[i]; }
  double operator[](std::size_t i) const { return data[i]; }

  // 2-D accessors (rows, cols)
  double& at(int r, int c) { return data[static_cast<std::size_t>(r) * shape[1] + c]; }
  double at(int r, int c) const { return data[static_cast<std::size_t>(r) * shape[1] + c]; }

  void fill(double v) { std::fill(data.begin(), data.end(), v); }

  void zero() { fill(0.0); }
};

inline void ensure_finite(std::span<const double> xs, const char* what) {
  for (double x : xs)
    if (!std::isfinite(x))
      throw std::runtime_error(std::string("non-finite value in ") + what);
}

inline void ensure_finite(const Tensor& t, const char* what) {
  ensure_finite(t.data, what);
}

/// Learnable tensor together with its accumulated gradient.
struct Parameter {
  Tensor value;
  Tensor grad;

  Parameter() = default;
  explicit Parameter(std::vector<int> shape) : value(shape), grad(std::move(shape)) {}

  void zero_grad() { grad.zero(); }
};

}  // namespace gazerisk
