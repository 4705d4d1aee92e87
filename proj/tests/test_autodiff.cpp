#include <doctest.h>

#include <cmath>
#include <random>
#include <cstring>
#include <sstream>

#include "ris/checkpoint.hpp"
#include "ris/errors.hpp"
#include "ris/mlp.hpp"
#include "ris/optim.hpp"
#include "support/gradcheck.hpp"

namespace ad = ris::autodiff;
using ad::Matrix;
using ad::Tape;
using ad::Tensor;
using ad::Var;
using ris::testing::check_input_gradient;
using ris::testing::random_matrix;

namespace {

// Sum of the output weighted by fixed random coefficients, so every output
// entry contributes to the gradient.
Var weighted_sum(Var out, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return ad::sum(ad::mul_const(out, random_matrix(out.rows(), out.cols(), rng)));
}

// Independent straight-line evaluation of the MLP.
Matrix naive_mlp(const ad::ParameterSet& p, const Matrix& x, std::size_t layers) {
  Matrix h = x;
  for (std::size_t l = 0; l < layers; ++l) {
    const auto& w = p.at("layer" + std::to_string(l) + ".weight").value;
    const auto& b = p.at("layer" + std::to_string(l) + ".bias").value;
    const std::size_t in = w.shape()[0], out = w.shape()[1];
    Matrix next(h.rows(), static_cast<Eigen::Index>(out));
    for (Eigen::Index r = 0; r < h.rows(); ++r) {
      for (std::size_t j = 0; j < out; ++j) {
        double acc = b.data()[j];
        for (std::size_t i = 0; i < in; ++i) acc += h(r, static_cast<Eigen::Index>(i)) * w.data()[i * out + j];
        next(r, static_cast<Eigen::Index>(j)) = (l + 1 < layers) ? std::max(acc, 0.0) : acc;
      }
    }
    h = next;
  }
  return h;
}

ad::ParameterSet single_param(std::vector<std::size_t> shape, std::vector<double> data) {
  ad::ParameterSet p;
  p.add("w", Tensor(std::move(shape), std::move(data)));
  return p;
}

}  // namespace

TEST_CASE("tensor data length must match shape") {
  CHECK_THROWS_AS(Tensor({2, 3}, std::vector<double>(5)), ris::ConfigError);
  Tensor t({2, 3});
  CHECK(t.size() == 6);
  CHECK(t.matrix().rows() == 2);
  CHECK(t.matrix().cols() == 3);
  Tensor v({4});
  CHECK(v.matrix().rows() == 1);
  CHECK(v.matrix().cols() == 4);
}

TEST_CASE("parameter set keeps insertion order and unique names") {
  ad::ParameterSet p;
  p.add("b", Tensor({1}));
  p.add("a", Tensor({2}));
  CHECK_THROWS_AS(p.add("a", Tensor({1})), ris::ConfigError);
  std::vector<std::string> names;
  for (const auto& e : p) names.push_back(e.name);
  CHECK(names == std::vector<std::string>{"b", "a"});
  CHECK(p.num_scalars() == 3);
  CHECK(p.at("a").grad.shape() == std::vector<std::size_t>{2});
}

TEST_CASE("mlp with zero parameters outputs zeros") {
  std::mt19937_64 rng(1);
  ad::ParameterSet p = ad::make_mlp({3, {5, 4}, 2, ad::Activation::ReLU}, rng);
  for (auto& e : p) e.param.value.fill(0.0);
  Tape tape;
  Var out = ad::mlp_forward(tape, p, tape.constant(random_matrix(6, 3, rng)), {5, 4}, ad::Activation::ReLU);
  CHECK(out.value().isZero(0.0));
}

TEST_CASE("identity 1x1 hidden layer applies relu") {
  ad::ParameterSet p;
  p.add("layer0.weight", Tensor({1, 1}, {1.0}));
  p.add("layer0.bias", Tensor({1}, {0.0}));
  p.add("layer1.weight", Tensor({1, 1}, {1.0}));
  p.add("layer1.bias", Tensor({1}, {0.0}));
  Matrix x(2, 1);
  x << -3.0, 3.0;
  const Matrix y = ad::mlp_infer(p, x, {1}, ad::Activation::ReLU);
  CHECK(y(0, 0) == 0.0);
  CHECK(y(1, 0) == 3.0);
}

TEST_CASE("mlp forward matches a naive evaluation and is deterministic") {
  std::mt19937_64 rng(2);
  ad::ParameterSet p = ad::make_mlp({4, {7, 5}, 3, ad::Activation::ReLU}, rng);
  for (auto& e : p) {
    for (double& v : e.param.value.data()) v = std::uniform_real_distribution<double>(-1, 1)(rng);
  }
  const Matrix x = random_matrix(9, 4, rng);
  Tape tape;
  const Matrix y = ad::mlp_forward(tape, p, tape.constant(x), {7, 5}, ad::Activation::ReLU).value();
  CHECK((y - naive_mlp(p, x, 3)).cwiseAbs().maxCoeff() < 1e-12);
  const Matrix y2 = ad::mlp_infer(p, x, {7, 5}, ad::Activation::ReLU);
  CHECK(y == y2);
  const Matrix y3 = ad::mlp_infer(p, x, {7, 5}, ad::Activation::ReLU);
  CHECK(y2 == y3);
}

TEST_CASE("mlp rejects shape mismatches") {
  std::mt19937_64 rng(3);
  ad::ParameterSet p = ad::make_mlp({4, {8}, 2, ad::Activation::ReLU}, rng);
  Tape tape;
  CHECK_THROWS_AS(ad::mlp_forward(tape, p, tape.constant(Matrix::Zero(2, 5)), {8}, ad::Activation::ReLU),
                  ris::ConfigError);
  CHECK_THROWS_AS(ad::mlp_infer(p, Matrix::Zero(2, 4), {6}, ad::Activation::ReLU), ris::ConfigError);
  const ad::MlpShape s = ad::infer_mlp_shape(p, ad::Activation::ReLU);
  CHECK(s.input == 4);
  CHECK(s.hidden == std::vector<std::size_t>{8});
  CHECK(s.output == 2);
}

TEST_CASE("mlp init is uniform within the fan-in bound with zero biases") {
  std::mt19937_64 rng(4);
  ad::ParameterSet p = ad::make_mlp({16, {32}, 4, ad::Activation::ReLU}, rng);
  const double bound0 = 1.0 / std::sqrt(16.0);
  for (double v : p.at("layer0.weight").value.data()) CHECK(std::abs(v) <= bound0);
  for (double v : p.at("layer0.bias").value.data()) CHECK(v == 0.0);
  const double bound1 = 1.0 / std::sqrt(32.0);
  for (double v : p.at("layer1.weight").value.data()) CHECK(std::abs(v) <= bound1);
}

TEST_CASE("backward of sum(w) is all ones") {
  ad::ParameterSet p = single_param({3}, {0.5, -1.0, 2.0});
  Tape tape;
  tape.backward(ad::sum(tape.parameter(p.at("w"))));
  for (double g : p.at("w").grad.data()) CHECK(g == 1.0);
}

TEST_CASE("backward of sum(w^2) at (1, -2) is (2, -4) and accumulates") {
  ad::ParameterSet p = single_param({2}, {1.0, -2.0});
  for (int call = 1; call <= 2; ++call) {
    Tape tape;
    tape.backward(ad::sum(ad::square(tape.parameter(p.at("w")))));
    CHECK(p.at("w").grad.data()[0] == doctest::Approx(2.0 * call));
    CHECK(p.at("w").grad.data()[1] == doctest::Approx(-4.0 * call));
  }
  p.zero_grad();
  CHECK(p.at("w").grad.data()[0] == 0.0);
}

TEST_CASE("backward requires a scalar loss") {
  Tape tape;
  Var x = tape.variable(Matrix::Ones(2, 2));
  CHECK_THROWS_AS(tape.backward(x), ris::UsageError);
}

TEST_CASE("frozen parameters pass gradient without accumulating") {
  ad::ParameterSet p = single_param({2}, {1.0, 2.0});
  Tape tape;
  Var x = tape.variable(Matrix::Ones(1, 2));
  Var w = tape.parameter(p.at("w"), false);
  tape.backward(ad::sum(ad::mul(x, w)));
  CHECK(p.at("w").grad.data()[0] == 0.0);
  CHECK(tape.grad(x)(0, 1) == 2.0);
}

TEST_CASE("every differentiable op matches central differences at 20 random points") {
  struct OpCase {
    const char* name;
    Eigen::Index rows, cols;
    double lo, hi;
    ris::testing::InputFn f;
  };
  std::mt19937_64 rng(5);
  const Matrix b = random_matrix(4, 3, rng);
  const Matrix row = random_matrix(1, 3, rng);
  const Matrix other = random_matrix(4, 3, rng);
  const Matrix column = random_matrix(4, 1, rng);
  auto wsum = [](Var v) { return weighted_sum(v, 99); };
  const std::vector<OpCase> cases = {
      {"matmul left", 4, 4, -1, 1, [&](Tape& t, Var x) { return wsum(ad::matmul(x, t.constant(b))); }},
      {"matmul right", 4, 3, -1, 1, [&](Tape& t, Var x) { return wsum(ad::matmul(t.constant(other.transpose()), x)); }},
      {"add_row", 4, 3, -1, 1, [&](Tape& t, Var x) { return wsum(ad::add_row(x, t.constant(row))); }},
      {"add_row bias", 1, 3, -1, 1, [&](Tape& t, Var x) { return wsum(ad::add_row(t.constant(other), x)); }},
      {"add", 4, 3, -1, 1, [&](Tape& t, Var x) { return wsum(ad::add(x, ad::square(x)) + t.constant(other)); }},
      {"sub", 4, 3, -1, 1, [&](Tape& t, Var x) { return wsum(ad::sub(t.constant(other), ad::tanh(x))); }},
      {"mul", 4, 3, -1, 1, [&](Tape& t, Var x) { return wsum(ad::mul(x, ad::tanh(x)) * t.constant(other)); }},
      {"minimum", 4, 3, -1, 1, [&](Tape& t, Var x) { return wsum(ad::minimum(x, t.constant(other))); }},
      {"maximum", 4, 3, -1, 1, [&](Tape& t, Var x) { return wsum(ad::maximum(ad::square(x), t.constant(other))); }},
      {"mul_const", 4, 3, -1, 1, [&](Tape&, Var x) { return wsum(ad::mul_const(x, other)); }},
      {"mul_const column", 4, 3, -1, 1, [&](Tape&, Var x) { return wsum(ad::mul_const(x, column)); }},
      {"scale shift neg", 4, 3, -1, 1, [&](Tape&, Var x) { return wsum(-(2.5 * x + 0.75)); }},
      {"relu", 4, 3, -1, 1, [&](Tape&, Var x) { return wsum(ad::relu(x)); }},
      {"tanh", 4, 3, -2, 2, [&](Tape&, Var x) { return wsum(ad::tanh(x)); }},
      {"exp", 4, 3, -2, 2, [&](Tape&, Var x) { return wsum(ad::exp(x)); }},
      {"log", 4, 3, 0.2, 3, [&](Tape&, Var x) { return wsum(ad::log(x)); }},
      {"abs", 4, 3, -1, 1, [&](Tape&, Var x) { return wsum(ad::abs(x)); }},
      {"square", 4, 3, -2, 2, [&](Tape&, Var x) { return wsum(ad::square(x)); }},
      {"atanh", 4, 3, -0.9, 0.9, [&](Tape&, Var x) { return wsum(ad::atanh(x)); }},
      {"clamp", 4, 3, -2, 2, [&](Tape&, Var x) { return wsum(ad::clamp(x, -1.0, 1.0)); }},
      {"concat_cols", 4, 3, -1, 1,
       [&](Tape& t, Var x) { return wsum(ad::concat_cols({ad::square(x), t.constant(column), x})); }},
      {"slice_cols", 4, 3, -1, 1, [&](Tape&, Var x) { return wsum(ad::slice_cols(ad::exp(x), 1, 2)); }},
      {"repeat_rows", 4, 3, -1, 1, [&](Tape&, Var x) { return wsum(ad::repeat_rows(ad::tanh(x), 3)); }},
      {"reshape", 4, 3, -1, 1, [&](Tape&, Var x) { return wsum(ad::reshape(ad::square(x), 2, 6)); }},
      {"row_sum", 4, 3, -1, 1, [&](Tape&, Var x) { return wsum(ad::row_sum(ad::exp(x))); }},
      {"sum", 4, 3, -1, 1, [&](Tape&, Var x) { return ad::sum(ad::square(x)); }},
      {"mean", 4, 3, -1, 1, [&](Tape&, Var x) { return ad::mean(ad::exp(x)); }},
      {"log_mean_exp_eps", 4, 3, -30, 3, [&](Tape&, Var x) { return wsum(ad::log_mean_exp_eps(x, 1e-16)); }},
      {"log_mean_exp_eps floor", 4, 3, -40, -30,
       [&](Tape&, Var x) { return wsum(ad::log_mean_exp_eps(x, 1e-14)); }},
  };
  for (const auto& c : cases) {
    CAPTURE(c.name);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
      Matrix x0 = random_matrix(c.rows, c.cols, rng, c.lo, c.hi);
      worst = std::max(worst, check_input_gradient(c.f, x0));
    }
    CHECK(worst < 1e-4);
  }
}

TEST_CASE("log_mean_exp_eps matches the direct formula") {
  Tape tape;
  Matrix a(2, 3);
  a << 0.1, -0.5, 1.2, -50.0, -60.0, -55.0;
  const Matrix out = ad::log_mean_exp_eps(tape.constant(a), 1e-16).value();
  for (Eigen::Index r = 0; r < 2; ++r) {
    const double direct = std::log(a.row(r).array().exp().mean() + 1e-16);
    CHECK(out(r, 0) == doctest::Approx(direct).epsilon(1e-12));
  }
}

TEST_CASE("adam first step moves each coordinate by lr against the gradient sign") {
  ad::ParameterSet p = single_param({3}, {1.0, 2.0, 3.0});
  ad::AdamState s(p);
  CHECK(s.step() == 0);
  auto g = p.at("w").grad.data();
  g[0] = 0.5;
  g[1] = -3.0;
  g[2] = 1e3;
  ad::adam_step(p, s, {0.01});
  CHECK(s.step() == 1);
  CHECK(std::abs(p.at("w").value.data()[0] - (1.0 - 0.01)) < 1e-6);
  CHECK(std::abs(p.at("w").value.data()[1] - (2.0 + 0.01)) < 1e-6);
  CHECK(std::abs(p.at("w").value.data()[2] - (3.0 - 0.01)) < 1e-6);
}

TEST_CASE("adam with zero gradient leaves parameters unchanged") {
  ad::ParameterSet p = single_param({2}, {1.5, -0.5});
  ad::AdamState s(p);
  for (int i = 0; i < 3; ++i) ad::adam_step(p, s, {0.1});
  CHECK(p.at("w").value.data()[0] == 1.5);
  CHECK(p.at("w").value.data()[1] == -0.5);
  CHECK(s.step() == 3);
}

TEST_CASE("adam two steps with a constant gradient follow the scalar recurrence") {
  ad::ParameterSet p = single_param({1}, {0.3});
  ad::AdamState s(p);
  const ad::AdamConfig cfg{0.05, 0.9, 0.999, 1e-8};
  const double g = 0.7;
  double x = 0.3, m = 0.0, v = 0.0;
  for (int t = 1; t <= 2; ++t) {
    p.at("w").grad.data()[0] = g;
    ad::adam_step(p, s, cfg);
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    const double mhat = m / (1.0 - std::pow(0.9, t));
    const double vhat = v / (1.0 - std::pow(0.999, t));
    x -= 0.05 * mhat / (std::sqrt(vhat) + 1e-8);
  }
  CHECK(std::abs(p.at("w").value.data()[0] - x) < 1e-12);
}

TEST_CASE("adam refuses non-finite gradients without mutating anything") {
  ad::ParameterSet p = single_param({2}, {1.0, 2.0});
  ad::AdamState s(p);
  p.at("w").grad.data()[0] = 1.0;
  p.at("w").grad.data()[1] = std::nan("");
  CHECK_THROWS_AS(ad::adam_step(p, s, {0.1}), ris::NumericalError);
  CHECK(s.step() == 0);
  CHECK(p.at("w").value.data()[0] == 1.0);
  CHECK(s.first_moment()[0].data()[0] == 0.0);
}

TEST_CASE("polyak update boundary values and arithmetic") {
  ad::ParameterSet online = single_param({2}, {2.0, -4.0});
  ad::ParameterSet target = single_param({2}, {0.0, 1.0});
  ad::ParameterSet t0 = target;
  ad::polyak_update(t0, online, 0.0);
  CHECK(t0.at("w").value == target.at("w").value);
  ad::ParameterSet t1 = target;
  ad::polyak_update(t1, online, 1.0);
  CHECK(t1.at("w").value == online.at("w").value);
  ad::ParameterSet th = target;
  ad::polyak_update(th, online, 0.5);
  CHECK(th.at("w").value.data()[0] == 1.0);
  CHECK(th.at("w").value.data()[1] == -1.5);
}

TEST_CASE("polyak update contracts toward the online set by (1 - tau)^k") {
  ad::ParameterSet online = single_param({3}, {0.0, 0.0, 0.0});
  ad::ParameterSet target = single_param({3}, {1.0, -8.0, 4.0});
  for (int k = 1; k <= 10; ++k) {
    ad::polyak_update(target, online, 0.5);
    double gap = 0.0;
    for (double v : target.at("w").value.data()) gap = std::max(gap, std::abs(v));
    CHECK(gap == 8.0 * std::pow(0.5, k));
  }
  ad::ParameterSet online2 = single_param({1}, {1.0});
  ad::ParameterSet target2 = single_param({1}, {-1.0});
  for (int k = 1; k <= 50; ++k) ad::polyak_update(target2, online2, 0.1);
  CHECK(std::abs((1.0 - target2.at("w").value.data()[0]) - 2.0 * std::pow(0.9, 50)) < 1e-12);
}

TEST_CASE("polyak update rejects mismatched sets") {
  ad::ParameterSet a = single_param({2}, {0.0, 0.0});
  ad::ParameterSet b = single_param({3}, {0.0, 0.0, 0.0});
  CHECK_THROWS_AS(ad::polyak_update(a, b, 0.5), ris::ConfigError);
  ad::ParameterSet c;
  c.add("v", Tensor({2}));
  CHECK_THROWS_AS(ad::polyak_update(a, c, 0.5), ris::ConfigError);
}

TEST_CASE("checkpoint layout is little-endian with a RIS1 header") {
  ad::ParameterSet p;
  p.add("ab", Tensor({1, 2}, {1.0, -2.5}));
  std::ostringstream out;
  ad::write_checkpoint(out, p);
  const std::string bytes = out.str();
  REQUIRE(bytes.size() == 4 + 4 + 4 + 2 + 4 + 8 + 16);
  CHECK(bytes.substr(0, 4) == "RIS1");
  auto u32 = [&](std::size_t at) {
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(bytes[at + i]);
    return v;
  };
  CHECK(u32(4) == 1);
  CHECK(u32(8) == 2);
  CHECK(bytes.substr(12, 2) == "ab");
  CHECK(u32(14) == 2);
  CHECK(u32(18) == 1);
  CHECK(u32(22) == 2);
  std::uint64_t bits = 0;
  for (int i = 7; i >= 0; --i) bits = (bits << 8) | static_cast<unsigned char>(bytes[26 + i]);
  double first;
  std::memcpy(&first, &bits, 8);
  CHECK(first == 1.0);
}

TEST_CASE("checkpoint save, load, save is byte-identical") {
  std::mt19937_64 rng(6);
  ad::ParameterSet p = ad::make_mlp({4, {8, 8}, 2, ad::Activation::ReLU}, rng);
  p.add("scalar", Tensor({}, {3.25}));
  std::ostringstream first;
  ad::write_checkpoint(first, p);
  std::istringstream in(first.str());
  const ad::ParameterSet loaded = ad::read_checkpoint(in);
  std::ostringstream second;
  ad::write_checkpoint(second, loaded);
  CHECK(first.str() == second.str());
  std::vector<std::string> names;
  for (const auto& e : loaded) names.push_back(e.name);
  CHECK(names.front() == "layer0.weight");
  CHECK(names.back() == "scalar");
}

TEST_CASE("checkpoint reader rejects bad input") {
  std::istringstream bad_magic(std::string("RIS2\x01\0\0\0", 8));
  CHECK_THROWS_AS(ad::read_checkpoint(bad_magic), ris::ConfigError);
  std::istringstream bad_version(std::string("RIS1\x02\0\0\0", 8));
  CHECK_THROWS_AS(ad::read_checkpoint(bad_version), ris::ConfigError);
  ad::ParameterSet p = single_param({2}, {1.0, 2.0});
  std::ostringstream out;
  ad::write_checkpoint(out, p);
  std::string truncated = out.str();
  truncated.pop_back();
  std::istringstream in(truncated);
  CHECK_THROWS_AS(ad::read_checkpoint(in), ris::ConfigError);
}
