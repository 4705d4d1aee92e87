#ifndef RIS_TENSOR_HPP_
#define RIS_TENSOR_HPP_

#include <cstddef>
#include <deque>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace ris::autodiff {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<Matrix>;
using ConstMatrixMap = Eigen::Map<const Matrix>;

// Dense row-major array of doubles. Rank 0..2 tensors can be viewed as a
// matrix: rank 0 -> 1x1, rank 1 -> 1xN, rank 2 -> RxC.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape);
  Tensor(std::vector<std::size_t> shape, std::vector<double> data);

  static Tensor from_matrix(const Matrix& m);

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  MatrixMap matrix();
  ConstMatrixMap matrix() const;

  void fill(double value);
  bool all_finite() const;

  bool operator==(const Tensor& other) const = default;

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

std::string shape_string(const std::vector<std::size_t>& shape);

struct Parameter {
  Tensor value;
  Tensor grad;
};

// Named, ordered collection of parameters. Iteration order is insertion
// order. References returned by add()/at() stay valid for the lifetime of the
// set (backed by a deque).
class ParameterSet {
 public:
  struct Entry {
    std::string name;
    Parameter param;
  };

  Parameter& add(std::string name, Tensor value);

  Parameter& at(std::string_view name);
  const Parameter& at(std::string_view name) const;
  bool contains(std::string_view name) const;

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  std::size_t num_scalars() const;

  void zero_grad();

  // Copy of every entry whose name starts with `prefix`, with the prefix removed.
  ParameterSet extract_prefix(std::string_view prefix) const;
  // Appends every entry of `other` under `prefix + name`.
  void append(const ParameterSet& other, std::string_view prefix);

  auto begin() { return entries_.begin(); }
  auto end() { return entries_.end(); }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

 private:
  std::deque<Entry> entries_;
};

// Throws ConfigError unless both sets have identical names, order and shapes.
void check_compatible(const ParameterSet& a, const ParameterSet& b, std::string_view context);

}  // namespace ris::autodiff

#endif  // RIS_TENSOR_HPP_
