#include "tglrn/diff/tensor.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "tglrn/error.hpp"

namespace tglrn::diff {

std::int64_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::int64_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ']';
  return os.str();
}

Tensor::Tensor(Shape shape, double fill)
    : shape_(std::move(shape)), values_(static_cast<std::size_t>(shape_size(shape_)), fill) {
  for (auto d : shape_)
    if (d <= 0) throw ConfigError("tensor: non-positive dimension in shape " + shape_string(shape_));
}

Tensor::Tensor(Shape shape, std::vector<double> values) : shape_(std::move(shape)), values_(std::move(values)) {
  if (shape_size(shape_) != static_cast<std::int64_t>(values_.size()))
    throw ConfigError("tensor: shape " + shape_string(shape_) + " does not match " +
                      std::to_string(values_.size()) + " values");
}

Eigen::Index Tensor::view_rows() const {
  if (shape_.empty()) return 1;
  return shape_.size() == 1 ? 1 : static_cast<Eigen::Index>(shape_[0]);
}

Eigen::Index Tensor::view_cols() const {
  const auto rows = view_rows();
  return rows == 0 ? 0 : static_cast<Eigen::Index>(size()) / rows;
}

MatrixMap Tensor::matrix() { return MatrixMap(values_.data(), view_rows(), view_cols()); }

ConstMatrixMap Tensor::matrix() const { return ConstMatrixMap(values_.data(), view_rows(), view_cols()); }

bool Tensor::all_finite() const {
  for (double v : values_)
    if (!std::isfinite(v)) return false;
  return true;
}

ParamId ParameterStore::add(const std::string& name, Shape shape) {
  if (index_.count(name)) throw ConfigError("parameter store: duplicate parameter name '" + name + "'");
  Tensor value(shape);
  Tensor grad(std::move(shape));
  params_.push_back(Parameter{name, std::move(value), std::move(grad)});
  const auto id = static_cast<ParamId>(params_.size() - 1);
  index_.emplace(name, id);
  return id;
}

ParamId ParameterStore::find(const std::string& name) const {
  auto it = index_.find(name);
  return it == index_.end() ? -1 : it->second;
}

std::int64_t ParameterStore::total_size() const {
  std::int64_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

void ParameterStore::zero_grad() {
  for (auto& p : params_) p.grad.matrix().setZero();
}

GradientSet::GradientSet(const ParameterStore& store) {
  grads_.reserve(static_cast<std::size_t>(store.size()));
  for (ParamId i = 0; i < store.size(); ++i) {
    const auto& v = store[i].value;
    grads_.emplace_back(Matrix::Zero(v.view_rows(), v.view_cols()));
  }
}

void GradientSet::set_zero() {
  for (auto& g : grads_) g.setZero();
}

GradientSet& GradientSet::operator+=(const GradientSet& other) {
  if (other.grads_.size() != grads_.size()) throw ConfigError("gradient set: size mismatch in accumulation");
  for (std::size_t i = 0; i < grads_.size(); ++i) grads_[i] += other.grads_[i];
  return *this;
}

void GradientSet::store_into(ParameterStore& store) const {
  for (ParamId i = 0; i < size(); ++i) store[i].grad.matrix() = grads_[static_cast<std::size_t>(i)];
}

}  // namespace tglrn::diff
