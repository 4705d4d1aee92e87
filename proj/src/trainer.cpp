#include "ris/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ris/errors.hpp"

namespace ris::core {

namespace {

env::Point jittered(const env::MazeSpec& maze, const env::Point& center, Rng& rng) {
  std::uniform_real_distribution<double> jitter(-kEvalJitter, kEvalJitter);
  for (int attempt = 0; attempt < env::kResetAttempts; ++attempt) {
    const env::Point p(center.x() + jitter(rng), center.y() + jitter(rng));
    if (maze.is_free(p)) return p;
  }
  return center;
}

double window_mean(double total, int count) {
  return count > 0 ? total / count : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

void TrainConfig::validate() const {
  maze.validate();
  hp.validate();
  if (total_env_steps < 1) throw ConfigError("total_env_steps must be positive");
  if (warmup_steps < 0) throw ConfigError("warmup_steps must be non-negative");
  if (eval_every < 1) throw ConfigError("eval_every must be positive");
  if (eval_episodes < 1) throw ConfigError("eval_episodes must be positive");
  if (replay_capacity < static_cast<std::size_t>(maze.episode_limit)) {
    throw ConfigError("replay_capacity must hold at least one full episode");
  }
  if (subgoal_pairs < 0) throw ConfigError("subgoal_pairs must be non-negative");
  if (checkpoint_every < 0) throw ConfigError("checkpoint_every must be non-negative");
  if (eval_hardest && (!maze.eval_start || !maze.eval_goal)) {
    throw ConfigError("eval_hardest needs maze.eval_start and maze.eval_goal");
  }
}

std::uint64_t eval_seed(std::uint64_t run_seed) { return make_stream(run_seed, Stream::Eval)(); }

EvalResult evaluate(const RisAgent& agent, const env::MazeSpec& maze, int episodes, bool hardest,
                    std::uint64_t seed) {
  if (episodes < 1) throw UsageError("evaluate: episodes must be positive");
  if (hardest && (!maze.eval_start || !maze.eval_goal)) {
    throw UsageError("evaluate: maze '" + maze.name + "' has no pinned start/goal");
  }
  Rng rng(seed);
  Rng unused(seed);
  env::PointMazeEnv env(maze);
  EvalResult result;
  result.episodes = episodes;
  int successes = 0;
  double total_return = 0.0;
  for (int e = 0; e < episodes; ++e) {
    if (hardest) {
      const env::Point start = jittered(maze, *maze.eval_start, rng);
      const env::Point goal = jittered(maze, *maze.eval_goal, rng);
      env.reset_to(start, goal);
    } else {
      env.reset(rng);
    }
    bool reached = false;
    for (;;) {
      const env::EnvState& s = env.state();
      const Vector action = agent.act(s.position, s.goal, unused, true);
      const env::StepResult r = env.step(action);
      total_return += r.reward;
      if (r.done) {
        reached = r.success;
        break;
      }
    }
    if (reached) ++successes;
  }
  result.success_rate = static_cast<double>(successes) / episodes;
  result.mean_return = total_return / episodes;
  return result;
}

Trainer::Trainer(TrainConfig config)
    : config_((config.validate(), std::move(config))),
      agent_(config_.hp, config_.maze, config_.seed),
      env_(config_.maze),
      buffer_(config_.replay_capacity,
              [maze = config_.maze](const Vector& s, const Vector& g) {
                return env::success(env::Point(s[0], s[1]), env::Point(g[0], g[1]), maze);
              }),
      env_rng_(make_stream(config_.seed, Stream::Env)),
      replay_rng_(make_stream(config_.seed, Stream::Replay)),
      explore_rng_(make_stream(config_.seed, Stream::Exploration)) {
  if (config_.subgoal_pairs > 0) {
    probe_ = std::make_unique<oracle::SubgoalErrorProbe>(
        config_.maze, oracle::sample_pairs(config_.maze, config_.subgoal_pairs, config_.probe_seed));
  }
  env_.reset(env_rng_);
}

void Trainer::finish_episode() {
  ++window_episodes_;
  if (!episode_.empty() && episode_.back().reward == 0.0) ++window_successes_;
  buffer_.push_trajectory(std::move(episode_));
  episode_.clear();
  env_.reset(env_rng_);
}

void Trainer::step() {
  const env::EnvState s = env_.state();
  Vector action(2);
  if (env_steps_ < config_.warmup_steps) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    action << u(explore_rng_), u(explore_rng_);
    if (record_warmup_) warmup_actions_.push_back(action);
  } else {
    action = agent_.act(s.position, s.goal, explore_rng_, false);
  }
  const env::StepResult r = env_.step(action);
  replay::Transition t;
  t.state = s.position;
  t.action = action;
  t.reward = r.reward;
  t.next_state = r.next.position;
  t.done = r.done;
  t.goal = s.goal;
  episode_.push_back(std::move(t));
  ++env_steps_;
  if (r.done) finish_episode();

  if (env_steps_ > config_.warmup_steps && !buffer_.empty()) {
    const replay::Batch batch = buffer_.sample_her(config_.hp.batch_size, replay_rng_);
    const Matrix candidates = buffer_.sample_subgoal_candidates(config_.hp.batch_size, replay_rng_);
    const UpdateStats stats = agent_.update(replay::to_matrices(batch), candidates);
    ++window_updates_;
    window_critic_ += stats.critic.loss;
    window_kl_ += stats.policy.kl;
    if (stats.highlevel_updated) {
      ++window_highlevel_updates_;
      window_highlevel_ += stats.highlevel.loss;
    }
  }
}

double Trainer::subgoal_error() const {
  if (!probe_) return std::numeric_limits<double>::quiet_NaN();
  return probe_->error([this](const env::Point& s, const env::Point& g) { return agent_.predict_subgoal(s, g); });
}

MetricsRow Trainer::evaluate_now() {
  const EvalResult eval =
      evaluate(agent_, config_.maze, config_.eval_episodes, config_.eval_hardest, eval_seed(config_.seed));
  MetricsRow row;
  row.env_steps = env_steps_;
  row.train_success = window_episodes_ > 0 ? static_cast<double>(window_successes_) / window_episodes_ : 0.0;
  row.eval_success = eval.success_rate;
  row.mean_return = eval.mean_return;
  row.critic_loss = window_mean(window_critic_, window_updates_);
  row.highlevel_loss = window_mean(window_highlevel_, window_highlevel_updates_);
  row.policy_kl = window_mean(window_kl_, window_updates_);
  row.subgoal_error = subgoal_error();
  window_episodes_ = window_successes_ = window_updates_ = window_highlevel_updates_ = 0;
  window_critic_ = window_highlevel_ = window_kl_ = 0.0;
  return row;
}

void Trainer::run(const std::function<void(const MetricsRow&)>& on_eval,
                  const std::function<void(long, const autodiff::ParameterSet&)>& on_checkpoint) {
  run_until(config_.total_env_steps, on_eval, on_checkpoint);
}

void Trainer::run_until(long target, const std::function<void(const MetricsRow&)>& on_eval,
                        const std::function<void(long, const autodiff::ParameterSet&)>& on_checkpoint) {
  target = std::min(target, config_.total_env_steps);
  while (env_steps_ < target) {
    try {
      step();
    } catch (const NumericalError& e) {
      throw NumericalError("seed " + std::to_string(config_.seed) + ", env step " + std::to_string(env_steps_) +
                           ": " + e.what());
    }
    if (env_steps_ % config_.eval_every == 0 || env_steps_ == config_.total_env_steps) {
      const MetricsRow row = evaluate_now();
      if (on_eval) on_eval(row);
    }
    if (on_checkpoint && config_.checkpoint_every > 0 && env_steps_ % config_.checkpoint_every == 0 &&
        env_steps_ != config_.total_env_steps) {
      on_checkpoint(env_steps_, agent_.checkpoint());
    }
  }
}

}  // namespace ris::core
