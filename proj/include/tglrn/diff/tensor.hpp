#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <deque>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace tglrn::diff {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<Matrix>;
using ConstMatrixMap = Eigen::Map<const Matrix>;
using Shape = std::vector<std::int64_t>;

std::int64_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

// Dense row-major float64 array. A tensor of shape [a, b, c, ...] is viewed as
// an a x (b*c*...) matrix; a rank-1 tensor [n] is viewed as a 1 x n row.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> values);

  const Shape& shape() const { return shape_; }
  std::int64_t size() const { return static_cast<std::int64_t>(values_.size()); }
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  Eigen::Index view_rows() const;
  Eigen::Index view_cols() const;
  MatrixMap matrix();
  ConstMatrixMap matrix() const;

  bool all_finite() const;

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape_ == b.shape_ && a.values_ == b.values_;
  }

 private:
  Shape shape_;
  std::vector<double> values_;
};

struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
};

using ParamId = int;

// Owns every learnable tensor of a model. Addresses are stable for the
// lifetime of the store; names are unique.
class ParameterStore {
 public:
  ParamId add(const std::string& name, Shape shape);

  int size() const { return static_cast<int>(params_.size()); }
  Parameter& operator[](ParamId id) { return params_.at(static_cast<std::size_t>(id)); }
  const Parameter& operator[](ParamId id) const { return params_.at(static_cast<std::size_t>(id)); }

  // -1 when absent.
  ParamId find(const std::string& name) const;
  std::int64_t total_size() const;
  void zero_grad();

 private:
  std::deque<Parameter> params_;
  std::unordered_map<std::string, ParamId> index_;
};

// Per-parameter gradient accumulator, laid out like the parameter matrix views.
class GradientSet {
 public:
  GradientSet() = default;
  explicit GradientSet(const ParameterStore& store);

  int size() const { return static_cast<int>(grads_.size()); }
  Matrix& operator[](ParamId id) { return grads_.at(static_cast<std::size_t>(id)); }
  const Matrix& operator[](ParamId id) const { return grads_.at(static_cast<std::size_t>(id)); }

  void set_zero();
  GradientSet& operator+=(const GradientSet& other);
  // Copies into Parameter::grad.
  void store_into(ParameterStore& store) const;

 private:
  std::vector<Matrix> grads_;
};

}  // namespace tglrn::diff
