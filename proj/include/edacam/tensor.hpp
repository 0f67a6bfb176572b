#pragma once

#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <vector>

#include "edacam/errors.hpp"

namespace edacam {

// Dense row-major tensor over a flat buffer. Shape is dynamic; rank is
// whatever the caller passes. Indexing is unchecked in release builds.
template <typename S = float>
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(std::vector<std::size_t> shape)
      : shape_(std::move(shape)), data_(numel(shape_), S(0)) {}

  Tensor(std::initializer_list<std::size_t> shape)
      : Tensor(std::vector<std::size_t>(shape)) {}

  static std::size_t numel(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return shape.empty() ? 0 : n;
  }

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t i) const { return shape_[i]; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  S* data() { return data_.data(); }
  const S* data() const { return data_.data(); }
  std::vector<S>& flat() { return data_; }
  const std::vector<S>& flat() const { return data_; }

  S& operator[](std::size_t i) { return data_[i]; }
  const S& operator[](std::size_t i) const { return data_[i]; }

  template <typename... Ix>
  S& operator()(Ix... ix) {
    return data_[offset(ix...)];
  }
  template <typename... Ix>
  const S& operator()(Ix... ix) const {
    return data_[offset(ix...)];
  }

  void fill(S v) { std::fill(data_.begin(), data_.end(), v); }

  // Same element count, new shape.
  void reshape(std::vector<std::size_t> shape) {
    if (numel(shape) != data_.size())
      throw InputError("reshape: element count mismatch");
    shape_ = std::move(shape);
  }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

 private:
  template <typename... Ix>
  std::size_t offset(Ix... ix) const {
    const std::size_t idx[] = {static_cast<std::size_t>(ix)...};
    std::size_t off = 0;
    for (std::size_t d = 0; d < sizeof...(Ix); ++d) off = off * shape_[d] + idx[d];
    return off;
  }

  std::vector<std::size_t> shape_;
  std::vector<S> data_;
};

}  // namespace edacam
