#ifndef RIS_TRAINER_HPP_
#define RIS_TRAINER_HPP_

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ris/agent.hpp"
#include "ris/env.hpp"
#include "ris/oracle.hpp"
#include "ris/replay.hpp"

namespace ris::core {

inline constexpr double kEvalJitter = 0.25;  // per-axis, hardest configuration

struct TrainConfig {
  env::MazeSpec maze = env::make_maze(env::MazeKind::U);
  RisHyperparams hp;
  std::uint64_t seed = 0;
  long total_env_steps = 200000;
  long warmup_steps = 10000;
  long eval_every = 5000;
  int eval_episodes = 50;
  bool eval_hardest = true;
  std::size_t replay_capacity = 1000000;
  int subgoal_pairs = 100;
  std::uint64_t probe_seed = 0;  // fixed across runs so probes are comparable
  long checkpoint_every = 50000;  // 0 disables periodic checkpoints

  // Throws ConfigError naming the offending field.
  void validate() const;
};

struct MetricsRow {
  long env_steps = 0;
  double train_success = 0.0;
  double eval_success = 0.0;
  double mean_return = 0.0;
  double critic_loss = 0.0;
  double highlevel_loss = 0.0;
  double policy_kl = 0.0;
  double subgoal_error = 0.0;
};

struct EvalResult {
  int episodes = 0;
  double success_rate = 0.0;
  double mean_return = 0.0;
};

// Deterministic-policy episodes. With `hardest`, start and goal are the
// pinned eval points jittered by up to kEvalJitter per axis; otherwise both
// are uniform over free space. Draws come only from `seed`.
EvalResult evaluate(const RisAgent& agent, const env::MazeSpec& maze, int episodes, bool hardest,
                    std::uint64_t seed);

// Seed of the evaluation stream for a run seed.
std::uint64_t eval_seed(std::uint64_t run_seed);

class Trainer {
 public:
  explicit Trainer(TrainConfig config);

  // One environment step, followed by one update once warmup is over.
  void step();
  // Runs to total_env_steps. `on_eval` sees each metrics row; `on_checkpoint`
  // sees periodic checkpoints (not the final one).
  void run(const std::function<void(const MetricsRow&)>& on_eval,
           const std::function<void(long, const autodiff::ParameterSet&)>& on_checkpoint = {});
  // Same loop, stopping once env_steps reaches `target` (capped at the total).
  void run_until(long target, const std::function<void(const MetricsRow&)>& on_eval,
                 const std::function<void(long, const autodiff::ParameterSet&)>& on_checkpoint = {});
  MetricsRow evaluate_now();

  long env_steps() const { return env_steps_; }
  const TrainConfig& config() const { return config_; }
  RisAgent& agent() { return agent_; }
  const RisAgent& agent() const { return agent_; }
  const replay::ReplayBuffer& buffer() const { return buffer_; }
  const std::vector<Eigen::VectorXd>& warmup_actions() const { return warmup_actions_; }
  void record_warmup_actions(bool on) { record_warmup_ = on; }
  double subgoal_error() const;

 private:
  void finish_episode();

  TrainConfig config_;
  RisAgent agent_;
  env::PointMazeEnv env_;
  replay::ReplayBuffer buffer_;
  Rng env_rng_;
  Rng replay_rng_;
  Rng explore_rng_;
  std::unique_ptr<oracle::SubgoalErrorProbe> probe_;
  std::vector<replay::Transition> episode_;
  long env_steps_ = 0;
  bool record_warmup_ = false;
  std::vector<Eigen::VectorXd> warmup_actions_;

  // Window statistics since the last evaluation.
  int window_episodes_ = 0;
  int window_successes_ = 0;
  int window_updates_ = 0;
  int window_highlevel_updates_ = 0;
  double window_critic_ = 0.0;
  double window_highlevel_ = 0.0;
  double window_kl_ = 0.0;
};

}  // namespace ris::core

#endif  // RIS_TRAINER_HPP_
