#pragma once

#include <cstddef>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace tcpid {

// Dense row-major float tensor.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<float> data;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> dims)
      : shape(std::move(dims)), data(element_count(shape), 0.0f) {}
  Tensor(std::vector<std::size_t> dims, std::vector<float> values)
      : shape(std::move(dims)), data(std::move(values)) {
    if (data.size() != element_count(shape)) {
      throw std::invalid_argument("tensor data length does not match its shape");
    }
  }

  static std::size_t element_count(const std::vector<std::size_t>& dims) {
    return std::accumulate(dims.begin(), dims.end(), std::size_t{1},
                           std::multiplies<std::size_t>());
  }

  std::size_t size() const { return data.size(); }
  std::size_t rank() const { return shape.size(); }

  float& at(std::size_t row, std::size_t col) { return data[row * shape[1] + col]; }
  float at(std::size_t row, std::size_t col) const { return data[row * shape[1] + col]; }

  bool operator==(const Tensor&) const = default;
};

}  // namespace tcpid
