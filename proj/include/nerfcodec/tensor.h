/* Copyright 2026 The nerfcodec Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef NERFCODEC_TENSOR_H_
#define NERFCODEC_TENSOR_H_

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace nerfcodec {

// Raised when arguments violate an operation's preconditions (shape
// mismatches, out-of-range indices, bad configuration).
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Raised when a computation produces NaN or Inf.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised on malformed or corrupt external data (files, bitstreams).
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Shape = std::vector<int64_t>;

int64_t NumElements(const Shape& shape);
std::string ShapeString(const Shape& shape);

// Dense row-major array. The scalar type is float everywhere except in
// finite-difference oracles, which instantiate the same code with double.
template <typename T>
struct Tensor {
  Shape shape;
  std::vector<T> data;

  Tensor() = default;
  explicit Tensor(Shape s, T fill = T(0))
      : shape(std::move(s)), data(NumElements(shape), fill) {}
  Tensor(Shape s, std::vector<T> values)
      : shape(std::move(s)), data(std::move(values)) {
    if (static_cast<int64_t>(data.size()) != NumElements(shape)) {
      throw ContractError("tensor data length " + std::to_string(data.size()) +
                          " does not match shape " + ShapeString(shape));
    }
  }

  static Tensor Scalar(T value) { return Tensor(Shape{}, std::vector<T>{value}); }

  int64_t size() const { return static_cast<int64_t>(data.size()); }
  int rank() const { return static_cast<int>(shape.size()); }
  int64_t dim(int i) const { return shape.at(i < 0 ? shape.size() + i : i); }

  T& operator[](int64_t i) { return data[i]; }
  const T& operator[](int64_t i) const { return data[i]; }

  std::span<T> span() { return data; }
  std::span<const T> span() const { return data; }

  T item() const {
    if (data.size() != 1) {
      throw ContractError("item() on tensor of shape " + ShapeString(shape));
    }
    return data[0];
  }
};

template <typename U, typename T>
Tensor<U> Cast(const Tensor<T>& t) {
  Tensor<U> out;
  out.shape = t.shape;
  out.data.assign(t.data.begin(), t.data.end());
  return out;
}

// True when every element is finite.
template <typename T>
bool AllFinite(std::span<const T> values);

}  // namespace nerfcodec

#endif  // NERFCODEC_TENSOR_H_
