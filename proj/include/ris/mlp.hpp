#ifndef RIS_MLP_HPP_
#define RIS_MLP_HPP_

#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include "ris/tape.hpp"
#include "ris/tensor.hpp"

namespace ris::autodiff {

enum class Activation { ReLU, Tanh };

struct MlpShape {
  std::size_t input = 0;
  std::vector<std::size_t> hidden;
  std::size_t output = 0;
  Activation activation = Activation::ReLU;
};

// Parameter names: "layer<i>.weight" with shape {in, out} and "layer<i>.bias"
// with shape {out}. Weights uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)],
// biases zero.
ParameterSet make_mlp(const MlpShape& shape, std::mt19937_64& rng);

// Reconstructs the layer widths stored in `params`; throws ConfigError if the
// set is not a well-formed MLP.
MlpShape infer_mlp_shape(const ParameterSet& params, Activation activation);

// Affine/activation chain on the tape. Frozen parameters pass gradient to
// `input` but never accumulate into their own grad buffers.
Var mlp_forward(Tape& tape, ParameterSet& params, Var input, const std::vector<std::size_t>& hidden_sizes,
                Activation activation, bool trainable = true);

// Graph-free evaluation of the same chain.
Matrix mlp_infer(const ParameterSet& params, const Matrix& input, const std::vector<std::size_t>& hidden_sizes,
                 Activation activation);

}  // namespace ris::autodiff

#endif  // RIS_MLP_HPP_
