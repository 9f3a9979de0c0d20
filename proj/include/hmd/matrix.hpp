#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "hmd/errors.hpp"

namespace hmd {

/// Dense row-major matrix of per-user feature rows.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), values_(rows * cols, 0.0) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  std::span<double> row(std::size_t i) { return {values_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const { return {values_.data() + i * cols_, cols_}; }
  double& operator()(std::size_t i, std::size_t j) { return values_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return values_[i * cols_ + j]; }

  void append_row(std::span<const double> values) {
    if (rows_ == 0) cols_ = values.size();
    if (values.size() != cols_) {
      throw Error(ErrorKind::kDimensionMismatch, "row has " + std::to_string(values.size()) +
                                                     " values, expected " + std::to_string(cols_));
    }
    ++rows_;
    values_.insert(values_.end(), values.begin(), values.end());
  }

  /// Subset of rows in the given order.
  FeatureMatrix select_rows(std::span<const std::size_t> indices) const {
    FeatureMatrix out(indices.size(), cols_);
    out.names = names;
    for (std::size_t i = 0; i < indices.size(); ++i) {
      const auto src = row(indices[i]);
      std::copy(src.begin(), src.end(), out.row(i).begin());
    }
    return out;
  }

  std::vector<std::string> names;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

}  // namespace hmd
