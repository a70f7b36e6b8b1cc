// Copyright 2026 The cswin-ref Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace cswin {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes do not agree (matmul inner dims, elementwise shapes, ...).
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A spatial layout is impossible: stripe width does not divide the map,
/// a convolution would produce an empty grid, odd sizes before a stride-2 conv.
class GeometryError : public Error {
 public:
  using Error::Error;
};

/// Malformed serialized data (bad magic, unknown version, truncated payload,
/// config with unknown keys).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Invalid model or layer configuration (odd head count, channels not
/// divisible by heads, unknown variant name, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// File system failures.
class IoError : public Error {
 public:
  using Error::Error;
};

using Shape = std::vector<std::size_t>;

std::string shape_to_string(std::span<const std::size_t> shape);
std::size_t shape_numel(std::span<const std::size_t> shape);

/// Dense row-major tensor of doubles.
///
/// Value type: copies are deep. Every dimension is positive and
/// `numel() == product(shape())` always holds.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }
  static Tensor full(Shape shape, double value);
  /// Builds a 2-D tensor from nested rows; all rows must have equal length.
  static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows);
  static Tensor vector(std::initializer_list<double> values);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t numel() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  const std::vector<double>& values() const noexcept { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  double& at(std::size_t i, std::size_t j) { return data_[i * shape_[1] + j]; }
  double at(std::size_t i, std::size_t j) const { return data_[i * shape_[1] + j]; }
  double& at(std::size_t i, std::size_t j, std::size_t k) {
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }
  double at(std::size_t i, std::size_t j, std::size_t k) const {
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }

  /// Same data, new shape with equal element count.
  Tensor reshaped(Shape shape) const&;
  Tensor reshaped(Shape shape) &&;

  bool all_finite() const noexcept;
  void fill(double value);

  /// Elementwise in-place accumulation; shapes must match exactly.
  Tensor& operator+=(const Tensor& other);

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  Shape shape_;
  std::vector<double> data_;
};

Tensor operator+(Tensor a, const Tensor& b);

/// max |a - b| over all elements; shapes must match.
double max_abs_diff(const Tensor& a, const Tensor& b);

double sum(const Tensor& t);

void require_same_shape(const Tensor& a, const Tensor& b, const char* what);

}  // namespace cswin
