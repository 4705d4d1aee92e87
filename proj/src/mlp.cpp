#include "ris/mlp.hpp"

#include <cmath>

#include "ris/errors.hpp"

namespace ris::autodiff {

namespace {

std::string weight_name(std::size_t i) { return "layer" + std::to_string(i) + ".weight"; }
std::string bias_name(std::size_t i) { return "layer" + std::to_string(i) + ".bias"; }

void check_layers(const ParameterSet& params, Eigen::Index input_cols, const std::vector<std::size_t>& hidden) {
  const std::size_t layers = hidden.size() + 1;
  if (params.size() != 2 * layers) {
    throw ConfigError("mlp: expected " + std::to_string(2 * layers) + " tensors, found " +
                      std::to_string(params.size()));
  }
  std::size_t fan_in = static_cast<std::size_t>(input_cols);
  for (std::size_t i = 0; i < layers; ++i) {
    const auto& w = params.at(weight_name(i)).value;
    const auto& b = params.at(bias_name(i)).value;
    if (w.rank() != 2 || w.shape()[0] != fan_in) {
      throw ConfigError("mlp: " + weight_name(i) + " has shape " + shape_string(w.shape()) + ", expected [" +
                        std::to_string(fan_in) + ", *]");
    }
    if (i < hidden.size() && w.shape()[1] != hidden[i]) {
      throw ConfigError("mlp: " + weight_name(i) + " width " + std::to_string(w.shape()[1]) +
                        " does not match hidden size " + std::to_string(hidden[i]));
    }
    if (b.rank() != 1 || b.shape()[0] != w.shape()[1]) {
      throw ConfigError("mlp: " + bias_name(i) + " has shape " + shape_string(b.shape()));
    }
    fan_in = w.shape()[1];
  }
}

}  // namespace

ParameterSet make_mlp(const MlpShape& shape, std::mt19937_64& rng) {
  ParameterSet params;
  std::vector<std::size_t> widths;
  widths.push_back(shape.input);
  widths.insert(widths.end(), shape.hidden.begin(), shape.hidden.end());
  widths.push_back(shape.output);
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    const std::size_t fan_in = widths[i];
    const std::size_t fan_out = widths[i + 1];
    if (fan_in == 0 || fan_out == 0) throw ConfigError("mlp: zero-width layer");
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> u(-bound, bound);
    Tensor w({fan_in, fan_out});
    for (double& x : w.data()) x = u(rng);
    params.add(weight_name(i), std::move(w));
    params.add(bias_name(i), Tensor({fan_out}));
  }
  return params;
}

MlpShape infer_mlp_shape(const ParameterSet& params, Activation activation) {
  if (params.size() < 2 || params.size() % 2 != 0) throw ConfigError("mlp: malformed parameter set");
  MlpShape shape;
  shape.activation = activation;
  const std::size_t layers = params.size() / 2;
  for (std::size_t i = 0; i < layers; ++i) {
    const auto& w = params.at(weight_name(i)).value;
    if (w.rank() != 2) throw ConfigError("mlp: " + weight_name(i) + " is not a matrix");
    if (i == 0) shape.input = w.shape()[0];
    if (i + 1 < layers) {
      shape.hidden.push_back(w.shape()[1]);
    } else {
      shape.output = w.shape()[1];
    }
  }
  check_layers(params, static_cast<Eigen::Index>(shape.input), shape.hidden);
  return shape;
}

Var mlp_forward(Tape& tape, ParameterSet& params, Var input, const std::vector<std::size_t>& hidden_sizes,
                Activation activation, bool trainable) {
  check_layers(params, input.cols(), hidden_sizes);
  Var h = input;
  const std::size_t layers = hidden_sizes.size() + 1;
  for (std::size_t i = 0; i < layers; ++i) {
    Var w = tape.parameter(params.at(weight_name(i)), trainable);
    Var b = tape.parameter(params.at(bias_name(i)), trainable);
    h = add_row(matmul(h, w), b);
    if (i + 1 < layers) h = activation == Activation::ReLU ? relu(h) : tanh(h);
  }
  return h;
}

Matrix mlp_infer(const ParameterSet& params, const Matrix& input, const std::vector<std::size_t>& hidden_sizes,
                 Activation activation) {
  check_layers(params, input.cols(), hidden_sizes);
  Matrix h = input;
  const std::size_t layers = hidden_sizes.size() + 1;
  for (std::size_t i = 0; i < layers; ++i) {
    const auto w = params.at(weight_name(i)).value.matrix();
    const auto b = params.at(bias_name(i)).value.matrix();
    Matrix z = h * w;
    z.rowwise() += b.row(0);
    if (i + 1 < layers) {
      h = activation == Activation::ReLU ? Matrix(z.cwiseMax(0.0)) : Matrix(z.array().tanh());
    } else {
      h = std::move(z);
    }
  }
  return h;
}

}  // namespace ris::autodiff
