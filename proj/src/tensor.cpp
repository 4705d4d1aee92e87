#include "ris/tensor.hpp"

#include <cmath>
#include <functional>
#include <numeric>

#include "ris/errors.hpp"

namespace ris::autodiff {

namespace {

std::size_t product(const std::vector<std::size_t>& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::pair<Eigen::Index, Eigen::Index> matrix_dims(const std::vector<std::size_t>& shape) {
  switch (shape.size()) {
    case 0:
      return {1, 1};
    case 1:
      return {1, static_cast<Eigen::Index>(shape[0])};
    case 2:
      return {static_cast<Eigen::Index>(shape[0]), static_cast<Eigen::Index>(shape[1])};
    default:
      throw UsageError("tensor of rank " + std::to_string(shape.size()) + " has no matrix view");
  }
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape) : shape_(std::move(shape)), data_(product(shape_), 0.0) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (data_.size() != product(shape_)) {
    throw ConfigError("tensor data length " + std::to_string(data_.size()) + " does not match shape " +
                      shape_string(shape_));
  }
}

Tensor Tensor::from_matrix(const Matrix& m) {
  Tensor t({static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())});
  t.matrix() = m;
  return t;
}

MatrixMap Tensor::matrix() {
  auto [r, c] = matrix_dims(shape_);
  return MatrixMap(data_.data(), r, c);
}

ConstMatrixMap Tensor::matrix() const {
  auto [r, c] = matrix_dims(shape_);
  return ConstMatrixMap(data_.data(), r, c);
}

void Tensor::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

std::string shape_string(const std::vector<std::size_t>& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

Parameter& ParameterSet::add(std::string name, Tensor value) {
  if (contains(name)) throw ConfigError("duplicate parameter name '" + name + "'");
  Tensor grad(value.shape());
  entries_.push_back(Entry{std::move(name), Parameter{std::move(value), std::move(grad)}});
  return entries_.back().param;
}

Parameter& ParameterSet::at(std::string_view name) {
  for (auto& e : entries_) {
    if (e.name == name) return e.param;
  }
  throw ConfigError("unknown parameter '" + std::string(name) + "'");
}

const Parameter& ParameterSet::at(std::string_view name) const {
  for (const auto& e : entries_) {
    if (e.name == name) return e.param;
  }
  throw ConfigError("unknown parameter '" + std::string(name) + "'");
}

bool ParameterSet::contains(std::string_view name) const {
  return std::any_of(entries_.begin(), entries_.end(), [&](const Entry& e) { return e.name == name; });
}

std::size_t ParameterSet::num_scalars() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.param.value.size();
  return n;
}

void ParameterSet::zero_grad() {
  for (auto& e : entries_) e.param.grad.fill(0.0);
}

ParameterSet ParameterSet::extract_prefix(std::string_view prefix) const {
  ParameterSet out;
  for (const auto& e : entries_) {
    if (e.name.starts_with(prefix)) out.add(e.name.substr(prefix.size()), e.param.value);
  }
  return out;
}

void ParameterSet::append(const ParameterSet& other, std::string_view prefix) {
  for (const auto& e : other) add(std::string(prefix) + e.name, e.param.value);
}

void check_compatible(const ParameterSet& a, const ParameterSet& b, std::string_view context) {
  if (a.size() != b.size()) {
    throw ConfigError(std::string(context) + ": parameter count mismatch (" + std::to_string(a.size()) +
                      " vs " + std::to_string(b.size()) + ")");
  }
  auto ia = a.begin();
  auto ib = b.begin();
  for (; ia != a.end(); ++ia, ++ib) {
    if (ia->name != ib->name) {
      throw ConfigError(std::string(context) + ": parameter name mismatch '" + ia->name + "' vs '" + ib->name +
                        "'");
    }
    if (ia->param.value.shape() != ib->param.value.shape()) {
      throw ConfigError(std::string(context) + ": shape mismatch for '" + ia->name + "' " +
                        shape_string(ia->param.value.shape()) + " vs " + shape_string(ib->param.value.shape()));
    }
  }
}

}  // namespace ris::autodiff
