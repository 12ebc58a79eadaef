#pragma once

#include <cassert>
#include <cstddef>
#include <span>
#include <vector>

#include "ete/error.hpp"

namespace ete {

// Dense row-major matrix of points: rows() points of dims() coordinates.
template <typename T>
class PointSet {
 public:
  using value_type = T;

  PointSet() = default;
  PointSet(std::size_t rows, std::size_t dims) : rows_(rows), dims_(dims), data_(rows * dims) {}
  PointSet(std::size_t rows, std::size_t dims, std::vector<T> data)
      : rows_(rows), dims_(dims), data_(std::move(data)) {
    if (data_.size() != rows_ * dims_) {
      throw Error(ErrorCode::ShapeMismatch, "point data size does not match rows * dims");
    }
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t dims() const noexcept { return dims_; }

  std::span<const T> row(std::size_t i) const noexcept {
    return std::span<const T>(data_).subspan(i * dims_, dims_);
  }
  std::span<T> row(std::size_t i) noexcept { return std::span<T>(data_).subspan(i * dims_, dims_); }

  T operator()(std::size_t i, std::size_t d) const noexcept { return data_[i * dims_ + d]; }
  T& operator()(std::size_t i, std::size_t d) noexcept { return data_[i * dims_ + d]; }

  const T* data() const noexcept { return data_.data(); }
  std::span<const T> flat() const noexcept { return data_; }

  // Keeps the listed columns, in the listed order.
  PointSet project(std::span<const std::size_t> columns) const {
    PointSet out(rows_, columns.size());
    for (std::size_t i = 0; i < rows_; ++i) {
      for (std::size_t c = 0; c < columns.size(); ++c) {
        assert(columns[c] < dims_);
        out(i, c) = (*this)(i, columns[c]);
      }
    }
    return out;
  }

  template <typename U>
  PointSet<U> cast() const {
    PointSet<U> out(rows_, dims_);
    for (std::size_t i = 0; i < data_.size(); ++i) out.flat_mut()[i] = static_cast<U>(data_[i]);
    return out;
  }

  std::span<T> flat_mut() noexcept { return data_; }

  friend bool operator==(const PointSet&, const PointSet&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t dims_ = 0;
  std::vector<T> data_;
};

}  // namespace ete
