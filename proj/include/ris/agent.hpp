#ifndef RIS_AGENT_HPP_
#define RIS_AGENT_HPP_

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <string_view>

#include "ris/env.hpp"
#include "ris/losses.hpp"
#include "ris/optim.hpp"
#include "ris/oracle.hpp"
#include "ris/replay.hpp"
#include "ris/rng.hpp"

namespace ris::core {

enum class PriorMode { ImaginedSubgoals, Uniform, MovingAverage, OracleSubgoals };

// Hyperparameters of the navigation setting. Defaults are the full-scale values.
struct RisHyperparams {
  std::vector<std::size_t> hidden_sizes = {256, 256};
  std::size_t batch_size = 2048;
  double gamma = 0.99;
  double tau = 5e-3;
  double alpha = 0.1;
  double lambda = 0.1;
  double prior_epsilon = 1e-16;
  double lr_critic = 1e-3;
  double lr_policy = 1e-3;
  double lr_highlevel = 1e-4;
  int prior_samples = 10;     // subgoals per prior estimate
  int kl_samples = 1;         // actions per KL estimate
  int baseline_samples = 10;  // high-level advantage baseline
  ValueClip value_clip;
  double oracle_scale = 0.5;  // Laplace scale around oracle midpoints
  PriorMode prior_mode = PriorMode::ImaginedSubgoals;
  // false: the high-level policy descends E[C] directly on its own samples.
  bool implicit_regularization = true;

  void validate() const;
};

std::string prior_mode_name(PriorMode mode, bool implicit_regularization);
// Accepts ris | uniform | ema | oracle | noreg.
void parse_prior_mode(std::string_view text, PriorMode& mode, bool& implicit_regularization);

struct CriticStats {
  double loss = 0.0;  // mean of the two Bellman losses
};

struct HighLevelStats {
  double loss = 0.0;
  Vector weights;
};

struct PolicyStats {
  double loss = 0.0;
  double kl = 0.0;  // mean single-sample KL estimate
};

struct UpdateStats {
  CriticStats critic;
  HighLevelStats highlevel;
  PolicyStats policy;
  bool highlevel_updated = false;
};

class RisAgent {
 public:
  RisAgent(const RisHyperparams& hp, const env::MazeSpec& maze, std::uint64_t seed);

  // Rebuilds an agent from a checkpoint. Hidden sizes are read from the tensors.
  static RisAgent from_checkpoint(const autodiff::ParameterSet& checkpoint, const env::MazeSpec& maze,
                                  RisHyperparams hp, std::uint64_t seed);

  const RisHyperparams& hyperparams() const { return hp_; }
  const NetworkLayout& layout() const { return layout_; }
  const Normalizer& normalizer() const { return norm_; }
  const Networks& networks() const { return nets_; }
  Networks& networks() { return nets_; }

  // Stochastic action, or tanh(mean) when `deterministic`.
  Vector act(const Vector& state, const Vector& goal, Rng& rng, bool deterministic) const;

  // One training iteration on prepared batches: critic, high-level, policy.
  UpdateStats update(const replay::BatchMatrices& batch, const Matrix& candidates);

  CriticStats critic_update(const replay::BatchMatrices& batch);
  HighLevelStats highlevel_update(const replay::BatchMatrices& batch, const Matrix& candidates);
  PolicyStats policy_update(const replay::BatchMatrices& batch);

  // min(Q1, Q2)(s, a, g) with one sampled action; not clipped.
  double value(const Vector& s, const Vector& g);
  Vector values(const Matrix& states, const Matrix& goals);
  // max(|V(s, s_g)|, |V(s_g, g)|) with clipped values.
  double subgoal_cost(const Vector& s, const Vector& subgoal, const Vector& g);
  // Baseline from `baseline_samples` draws of the current high-level policy.
  double highlevel_advantage(const Vector& s, const Vector& g, const Vector& subgoal);
  // Monte-Carlo prior density of `action` (inside the action cube) for the
  // configured prior mode.
  double prior_log_prob(const Vector& s, const Vector& g, const Vector& action);

  // Mean of the high-level distribution.
  env::Point predict_subgoal(const env::Point& s, const env::Point& g) const;

  autodiff::ParameterSet checkpoint() const;

  // Called with "critic", "highlevel", "policy" as each update runs.
  void set_update_observer(std::function<void(std::string_view)> observer) { observer_ = std::move(observer); }

 private:
  Matrix normal_noise(Eigen::Index rows, Eigen::Index cols);
  Matrix uniform_noise(Eigen::Index rows, Eigen::Index cols);
  // R * I subgoal rows for the prior (imagined or oracle).
  Matrix prior_subgoals(const Matrix& states, const Matrix& goals);
  HighLevelStats weighted_ml_update(const replay::BatchMatrices& batch, const Matrix& candidates);
  HighLevelStats cost_descent_update(const replay::BatchMatrices& batch);
  void notify(std::string_view stage) const;

  RisHyperparams hp_;
  env::MazeSpec maze_;
  NetworkLayout layout_;
  Normalizer norm_;
  Networks nets_;
  autodiff::AdamState adam_policy_;
  autodiff::AdamState adam_q1_;
  autodiff::AdamState adam_q2_;
  autodiff::AdamState adam_highlevel_;
  Rng rng_;
  std::shared_ptr<const oracle::DistanceTable> oracle_;
  std::function<void(std::string_view)> observer_;
};

}  // namespace ris::core

#endif  // RIS_AGENT_HPP_
