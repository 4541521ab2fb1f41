#ifndef VLNLAB_NUMCORE_TENSOR_HPP
#define VLNLAB_NUMCORE_TENSOR_HPP

#include <cmath>
#include <string>
#include <vector>

#include "common/errors.hpp"

namespace vlnlab::num {

// Dense row-major matrix of 64-bit reals. Everything in this project is
// rank <= 2; vectors are 1xN rows.
class Tensor {
 public:
  Tensor() : rows_(0), cols_(0) {}

  Tensor(int rows, int cols, double fill = 0.0)
      : rows_(rows), cols_(cols),
        data_(static_cast<std::size_t>(rows) * cols, fill) {
    if (rows < 0 || cols < 0)
      throw ShapeError("tensor dimensions must be non-negative");
  }

  static Tensor row(std::vector<double> values) {
    Tensor t;
    t.rows_ = 1;
    t.cols_ = static_cast<int>(values.size());
    t.data_ = std::move(values);
    return t;
  }

  static Tensor from_data(int rows, int cols, std::vector<double> values) {
    if (static_cast<std::size_t>(rows) * cols != values.size())
      throw ShapeError("tensor data length does not match shape");
    Tensor t;
    t.rows_ = rows;
    t.cols_ = cols;
    t.data_ = std::move(values);
    return t;
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  double& at(int r, int c) { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
  double at(int r, int c) const { return data_[static_cast<std::size_t>(r) * cols_ + c]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::vector<double>& raw() { return data_; }
  const std::vector<double>& raw() const { return data_; }

  bool same_shape(const Tensor& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  bool all_finite() const {
    for (double v : data_)
      if (!std::isfinite(v)) return false;
    return true;
  }

  void fill(double v) {
    for (double& x : data_) x = v;
  }

  std::string shape_str() const {
    return std::to_string(rows_) + "x" + std::to_string(cols_);
  }

 private:
  int rows_, cols_;
  std::vector<double> data_;
};

inline void require_same_shape(const Tensor& a, const Tensor& b,
                               const char* op) {
  if (!a.same_shape(b))
    throw ShapeError(std::string(op) + ": shapes " + a.shape_str() + " and " +
                     b.shape_str() + " do not match");
}

inline void require_finite(const Tensor& t, const char* op) {
  if (!t.all_finite())
    throw NumericError(std::string(op) + ": non-finite value produced");
}

}  // namespace vlnlab::num

#endif  // VLNLAB_NUMCORE_TENSOR_HPP
