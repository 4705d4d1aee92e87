#ifndef RIS_LOSSES_HPP_
#define RIS_LOSSES_HPP_

#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "ris/mlp.hpp"
#include "ris/tape.hpp"

namespace ris::core {

using autodiff::Matrix;
using autodiff::ParameterSet;
using autodiff::Tape;
using autodiff::Var;
using Vector = Eigen::VectorXd;

inline constexpr double kHighLevelLogScaleMin = -10.0;
inline constexpr double kHighLevelLogScaleMax = 4.0;

// Affine map from maze coordinates to [-1, 1] per axis, applied to states,
// goals and subgoals before they enter a network.
struct Normalizer {
  Vector center;
  Vector half_extent;

  Matrix normalize(const Matrix& x) const;
  Var normalize(Tape& tape, Var x) const;
};

struct NetworkLayout {
  int state_dim = 2;
  int action_dim = 2;
  std::vector<std::size_t> hidden = {256, 256};
  autodiff::Activation activation = autodiff::Activation::ReLU;
};

// Parameters of every network in the agent.
struct Networks {
  ParameterSet policy;
  ParameterSet policy_ema;
  ParameterSet q1;
  ParameterSet q2;
  ParameterSet q1_target;
  ParameterSet q2_target;
  ParameterSet highlevel;
};

Networks make_networks(const NetworkLayout& layout, std::mt19937_64& rng);

// Graph-free policy head: mean and clamped log_std per row.
struct GaussianHead {
  Matrix mean;
  Matrix log_std;
};

GaussianHead policy_head(const ParameterSet& policy, const NetworkLayout& layout, const Normalizer& norm,
                         const Matrix& states, const Matrix& goals);
// tanh(mean + exp(log_std) * noise), kept inside the open action cube.
Matrix squash_sample(const GaussianHead& head, const Matrix& noise);

struct LaplaceHead {
  Matrix loc;        // maze coordinates
  Matrix log_scale;  // log of the per-axis scale in maze units
};

LaplaceHead highlevel_head(const ParameterSet& highlevel, const NetworkLayout& layout, const Normalizer& norm,
                           const Matrix& states, const Matrix& goals);
Matrix laplace_samples(const LaplaceHead& head, const Matrix& uniform_noise);

Matrix q_input(const Normalizer& norm, const Matrix& states, const Matrix& actions, const Matrix& goals);

// min(Q1, Q2)(s, a, g) per row, with a = tanh(mean + std * noise) from the policy.
Vector values(const Networks& nets, const NetworkLayout& layout, const Normalizer& norm, const Matrix& states,
              const Matrix& goals, const Matrix& action_noise);

struct ValueClip {
  double low = -100.0;
  double high = 0.0;
};

// max(|clip V(s, s_g)|, |clip V(s_g, g)|) per row. `action_noise` has 2R rows:
// the first R for the first leg, the rest for the second.
Vector subgoal_costs(const Networks& nets, const NetworkLayout& layout, const Normalizer& norm,
                     const Matrix& states, const Matrix& subgoals, const Matrix& goals, const Matrix& action_noise,
                     const ValueClip& clip);

// mean_j cost(baseline_j) - cost(candidate).
double highlevel_advantage(const std::function<double(const Vector&)>& cost, const std::vector<Vector>& baseline,
                           const Vector& candidate);
// Row-wise version: baseline_costs is R x M, candidate_costs has R entries.
Vector advantages_from_costs(const Matrix& baseline_costs, const Vector& candidate_costs);

// softmax(advantages / lambda) over the batch. Throws NumericalError on
// non-finite input.
Vector softmax_weights(const Vector& advantages, double lambda);

// log((1/I) sum_i exp(log_densities_i) + eps), max-shifted.
double log_mean_exp_eps(std::span<const double> log_densities, double eps);

// ---- Losses. Every random input is explicit so losses are deterministic
// functions of the parameters.

struct BellmanInputs {
  Matrix states;
  Matrix actions;
  Matrix next_states;
  Matrix goals;
  Vector rewards;
  Vector success;  // 1 where bootstrapping stops
  Matrix next_action_noise;
};

// y = r + (1 - success) * gamma * min(Q1', Q2')(s', a', g), a' ~ pi(.|s', g).
Vector bellman_targets(const Networks& nets, const NetworkLayout& layout, const Normalizer& norm,
                       const BellmanInputs& in, double gamma);

// 0.5 * mean((Q(s, a, g) - y)^2) on the tape, Q trainable.
Var critic_loss(Tape& tape, ParameterSet& q, const NetworkLayout& layout, const Normalizer& norm,
                const Matrix& states, const Matrix& actions, const Matrix& goals, const Vector& targets);

enum class PriorKind { Subgoals, Uniform, MovingAverage };

struct PolicyLossInputs {
  Matrix states;
  Matrix goals;
  Matrix action_noise;  // R x action_dim
  PriorKind prior = PriorKind::Subgoals;
  // Subgoals prior: R * I rows, I consecutive subgoals per state.
  Matrix subgoals;
  int prior_samples = 10;
  double prior_epsilon = 1e-16;
};

struct PolicyLoss {
  Var loss;
  Var kl;  // R x 1 single-sample KL estimates
};

// mean[alpha * (log pi(a|s,g) - log prior(a|s,g)) - min(Q1, Q2)(s, a, g)] with
// a reparametrized from pi. Q and the prior networks are frozen.
PolicyLoss policy_loss(Tape& tape, Networks& nets, const NetworkLayout& layout, const Normalizer& norm,
                       const PolicyLossInputs& in, double alpha);

// Row-wise mixture estimate on the tape as a function of the pre-squash action:
// prior means/log-stds are R * I constant rows.
Var prior_log_prob_graph(Var pre_tanh, const GaussianHead& prior_heads, int prior_samples, double eps);

// -sum_i w_i log Laplace(candidate_i; pi^H(.|s_i, g_i)).
Var highlevel_loss(Tape& tape, ParameterSet& highlevel, const NetworkLayout& layout, const Normalizer& norm,
                   const Matrix& states, const Matrix& goals, const Matrix& candidates, const Vector& weights);

struct CostDescentInputs {
  Matrix states;
  Matrix goals;
  Matrix laplace_noise;  // R x state_dim, uniform in (-1/2, 1/2)
  Matrix action_noise;   // 2R x action_dim, one block per leg
};

// mean_i C(s_g,i | s_i, g_i) with s_g,i reparametrized from pi^H; gradient
// reaches only the high-level parameters.
Var highlevel_cost_loss(Tape& tape, Networks& nets, const NetworkLayout& layout, const Normalizer& norm,
                        const CostDescentInputs& in, const ValueClip& clip);

}  // namespace ris::core

#endif  // RIS_LOSSES_HPP_
