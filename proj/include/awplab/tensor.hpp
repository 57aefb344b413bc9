// Copyright (c) 2026 awplab contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace awplab {

/// Error type for all structured failures (shape mismatches, format
/// violations, non-finite values).
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Dense row-major tensor of 64-bit floats. Immutable by convention once
/// produced by an op; helpers that mutate do so on freshly owned storage.
struct Tensor {
  std::vector<int> shape;
  std::vector<double> data;

  Tensor() = default;
  Tensor(std::vector<int> s, std::vector<double> d)
      : shape(std::move(s)), data(std::move(d)) {
    if (static_cast<std::int64_t>(data.size()) != numel_of(shape)) {
      throw Error("tensor: data length " + std::to_string(data.size()) +
                  " does not match shape product " +
                  std::to_string(numel_of(shape)));
    }
  }

  static std::int64_t numel_of(const std::vector<int>& s) {
    std::int64_t n = 1;
    for (int d : s) {
      if (d <= 0) throw Error("tensor: non-positive dimension " + std::to_string(d));
      n *= d;
    }
    return n;
  }

  static Tensor zeros(std::vector<int> s) {
    auto n = numel_of(s);
    return Tensor(std::move(s), std::vector<double>(static_cast<size_t>(n), 0.0));
  }

  static Tensor full(std::vector<int> s, double v) {
    auto n = numel_of(s);
    return Tensor(std::move(s), std::vector<double>(static_cast<size_t>(n), v));
  }

  static Tensor scalar(double v) { return Tensor({1}, {v}); }

  std::int64_t numel() const { return static_cast<std::int64_t>(data.size()); }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }

  double item() const {
    if (data.size() != 1) throw Error("tensor: item() on non-scalar");
    return data[0];
  }

  void check_finite(const char* where) const {
    for (double v : data) {
      if (!std::isfinite(v)) {
        throw Error(std::string("non-finite value in ") + where);
      }
    }
  }
};

std::string shape_str(const std::vector<int>& s);

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double l2_norm(const std::vector<double>& a) {
  return std::sqrt(dot(a, a));
}

inline double l1_norm(const std::vector<double>& a) {
  double s = 0.0;
  for (double v : a) s += std::fabs(v);
  return s;
}

}  // namespace awplab
