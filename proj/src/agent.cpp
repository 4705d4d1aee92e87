#include "ris/agent.hpp"

#include <cmath>
#include <limits>

#include "ris/distributions.hpp"
#include "ris/errors.hpp"

namespace ris::core {

namespace ad = ris::autodiff;

namespace {

constexpr const char* kPolicy = "policy/";
constexpr const char* kPolicyEma = "policy_ema/";
constexpr const char* kQ1 = "q1/";
constexpr const char* kQ2 = "q2/";
constexpr const char* kQ1Target = "q1_target/";
constexpr const char* kQ2Target = "q2_target/";
constexpr const char* kHighLevel = "highlevel/";

Normalizer make_normalizer(const env::MazeSpec& maze) {
  Normalizer n;
  n.center = Vector(2);
  n.center << maze.width / 2.0, maze.height / 2.0;
  n.half_extent = n.center;
  return n;
}

Matrix repeat_each_row(const Matrix& m, Eigen::Index times) {
  Matrix out(m.rows() * times, m.cols());
  for (Eigen::Index r = 0; r < m.rows(); ++r) out.middleRows(r * times, times) = m.row(r).replicate(times, 1);
  return out;
}

Matrix row_matrix(const Vector& v) { return v.transpose(); }

void check_finite(double value, const char* what) {
  if (!std::isfinite(value)) throw NumericalError(std::string(what) + ": non-finite loss");
}

}  // namespace

void RisHyperparams::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError(msg); };
  if (hidden_sizes.empty()) fail("hidden_sizes: need at least one hidden layer");
  for (std::size_t h : hidden_sizes) {
    if (h == 0) fail("hidden_sizes: zero-width layer");
  }
  if (batch_size == 0) fail("batch_size must be positive");
  if (!(gamma > 0.0 && gamma < 1.0)) fail("gamma must lie in (0, 1)");
  if (!(tau > 0.0 && tau < 1.0)) fail("tau must lie in (0, 1)");
  if (!(alpha >= 0.0)) fail("alpha must be non-negative");
  if (!(lambda > 0.0)) fail("lambda must be positive");
  if (!(prior_epsilon > 0.0)) fail("prior_epsilon must be positive");
  if (!(lr_critic > 0.0) || !(lr_policy > 0.0) || !(lr_highlevel > 0.0)) fail("learning rates must be positive");
  if (prior_samples < 1) fail("prior_samples must be >= 1");
  if (kl_samples < 1) fail("kl_samples must be >= 1");
  if (baseline_samples < 1) fail("baseline_samples must be >= 1");
  if (!(value_clip.low < value_clip.high)) fail("value_clip_min must be below value_clip_max");
  if (!(oracle_scale > 0.0)) fail("oracle_scale must be positive");
}

std::string prior_mode_name(PriorMode mode, bool implicit_regularization) {
  switch (mode) {
    case PriorMode::ImaginedSubgoals:
      return implicit_regularization ? "ris" : "noreg";
    case PriorMode::Uniform:
      return "uniform";
    case PriorMode::MovingAverage:
      return "ema";
    case PriorMode::OracleSubgoals:
      return "oracle";
  }
  return "ris";
}

void parse_prior_mode(std::string_view text, PriorMode& mode, bool& implicit_regularization) {
  implicit_regularization = true;
  if (text == "ris") {
    mode = PriorMode::ImaginedSubgoals;
  } else if (text == "noreg") {
    mode = PriorMode::ImaginedSubgoals;
    implicit_regularization = false;
  } else if (text == "uniform") {
    mode = PriorMode::Uniform;
  } else if (text == "ema") {
    mode = PriorMode::MovingAverage;
  } else if (text == "oracle") {
    mode = PriorMode::OracleSubgoals;
  } else {
    throw ConfigError("unknown prior mode '" + std::string(text) + "' (expected ris|uniform|ema|oracle|noreg)");
  }
}

RisAgent::RisAgent(const RisHyperparams& hp, const env::MazeSpec& maze, std::uint64_t seed)
    : hp_(hp), maze_(maze), norm_(make_normalizer(maze)), rng_(make_stream(seed, Stream::Updates)) {
  hp_.validate();
  maze_.validate();
  layout_.state_dim = 2;
  layout_.action_dim = 2;
  layout_.hidden = hp_.hidden_sizes;
  Rng init = make_stream(seed, Stream::Init);
  nets_ = make_networks(layout_, init);
  adam_policy_ = ad::AdamState(nets_.policy);
  adam_q1_ = ad::AdamState(nets_.q1);
  adam_q2_ = ad::AdamState(nets_.q2);
  adam_highlevel_ = ad::AdamState(nets_.highlevel);
  if (hp_.prior_mode == PriorMode::OracleSubgoals) {
    oracle_ = std::make_shared<const oracle::DistanceTable>(maze_, oracle::kDefaultResolution);
  }
}

RisAgent RisAgent::from_checkpoint(const ad::ParameterSet& checkpoint, const env::MazeSpec& maze,
                                   RisHyperparams hp, std::uint64_t seed) {
  const ad::ParameterSet policy = checkpoint.extract_prefix(kPolicy);
  if (policy.empty()) throw ConfigError("checkpoint has no 'policy/' tensors");
  const ad::MlpShape shape = ad::infer_mlp_shape(policy, ad::Activation::ReLU);
  if (shape.input != 4 || shape.output != 4) {
    throw ConfigError("checkpoint tensor 'policy/layer0.weight' expects input width " +
                      std::to_string(shape.input) + " and 'policy' output width " + std::to_string(shape.output) +
                      "; the maze needs 4 and 4");
  }
  hp.hidden_sizes = shape.hidden;
  RisAgent agent(hp, maze, seed);
  auto load = [&](ad::ParameterSet& dst, const char* prefix) {
    ad::ParameterSet src = checkpoint.extract_prefix(prefix);
    ad::check_compatible(dst, src, std::string("checkpoint '") + prefix + "'");
    auto it = src.begin();
    for (auto& e : dst) {
      e.param.value = it->param.value;
      ++it;
    }
  };
  load(agent.nets_.policy, kPolicy);
  load(agent.nets_.policy_ema, kPolicyEma);
  load(agent.nets_.q1, kQ1);
  load(agent.nets_.q2, kQ2);
  load(agent.nets_.q1_target, kQ1Target);
  load(agent.nets_.q2_target, kQ2Target);
  load(agent.nets_.highlevel, kHighLevel);
  return agent;
}

ad::ParameterSet RisAgent::checkpoint() const {
  ad::ParameterSet out;
  out.append(nets_.policy, kPolicy);
  out.append(nets_.policy_ema, kPolicyEma);
  out.append(nets_.q1, kQ1);
  out.append(nets_.q2, kQ2);
  out.append(nets_.q1_target, kQ1Target);
  out.append(nets_.q2_target, kQ2Target);
  out.append(nets_.highlevel, kHighLevel);
  return out;
}

Matrix RisAgent::normal_noise(Eigen::Index rows, Eigen::Index cols) {
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng_);
  return m;
}

Matrix RisAgent::uniform_noise(Eigen::Index rows, Eigen::Index cols) {
  std::uniform_real_distribution<double> u(std::nextafter(-0.5, 0.0), 0.5);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng_);
  return m;
}

void RisAgent::notify(std::string_view stage) const {
  if (observer_) observer_(stage);
}

Vector RisAgent::act(const Vector& state, const Vector& goal, Rng& rng, bool deterministic) const {
  const GaussianHead head = policy_head(nets_.policy, layout_, norm_, row_matrix(state), row_matrix(goal));
  if (deterministic) return head.mean.row(0).transpose().array().tanh();
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix noise(1, layout_.action_dim);
  for (Eigen::Index i = 0; i < noise.size(); ++i) noise.data()[i] = n(rng);
  return squash_sample(head, noise).row(0).transpose();
}

UpdateStats RisAgent::update(const replay::BatchMatrices& batch, const Matrix& candidates) {
  UpdateStats stats;
  stats.critic = critic_update(batch);
  // The high-level policy only shapes the imagined-subgoal prior.
  if (hp_.prior_mode == PriorMode::ImaginedSubgoals) {
    stats.highlevel = highlevel_update(batch, candidates);
    stats.highlevel_updated = true;
  }
  stats.policy = policy_update(batch);
  return stats;
}

CriticStats RisAgent::critic_update(const replay::BatchMatrices& batch) {
  notify("critic");
  BellmanInputs in{batch.states,  batch.actions, batch.next_states,
                   batch.goals,   batch.rewards, batch.success,
                   normal_noise(batch.states.rows(), layout_.action_dim)};
  const Vector targets = bellman_targets(nets_, layout_, norm_, in, hp_.gamma);

  double losses[2] = {0.0, 0.0};
  ad::ParameterSet* qs[2] = {&nets_.q1, &nets_.q2};
  ad::AdamState* adams[2] = {&adam_q1_, &adam_q2_};
  const ad::AdamConfig cfg{hp_.lr_critic};
  for (int k = 0; k < 2; ++k) {
    Tape tape;
    Var loss = critic_loss(tape, *qs[k], layout_, norm_, batch.states, batch.actions, batch.goals, targets);
    losses[k] = loss.value()(0, 0);
    check_finite(losses[k], "critic_update");
    qs[k]->zero_grad();
    tape.backward(loss);
    ad::adam_step(*qs[k], *adams[k], cfg);
  }
  ad::polyak_update(nets_.q1_target, nets_.q1, hp_.tau);
  ad::polyak_update(nets_.q2_target, nets_.q2, hp_.tau);
  return CriticStats{0.5 * (losses[0] + losses[1])};
}

HighLevelStats RisAgent::highlevel_update(const replay::BatchMatrices& batch, const Matrix& candidates) {
  notify("highlevel");
  return hp_.implicit_regularization ? weighted_ml_update(batch, candidates) : cost_descent_update(batch);
}

HighLevelStats RisAgent::weighted_ml_update(const replay::BatchMatrices& batch, const Matrix& candidates) {
  const Eigen::Index rows = batch.states.rows();
  const Eigen::Index m = hp_.baseline_samples;
  if (candidates.rows() != rows) throw ConfigError("highlevel_update: candidates must align with the batch");

  // Baseline subgoals from the current high-level policy, M per (s, g).
  const LaplaceHead head = highlevel_head(nets_.highlevel, layout_, norm_, batch.states, batch.goals);
  LaplaceHead repeated{repeat_each_row(head.loc, m), repeat_each_row(head.log_scale, m)};
  const Matrix baseline = laplace_samples(repeated, uniform_noise(rows * m, layout_.state_dim));

  // Costs of candidates (first `rows` rows) and baseline samples in one pass.
  const Eigen::Index total = rows * (m + 1);
  Matrix states(total, layout_.state_dim);
  Matrix goals(total, layout_.state_dim);
  Matrix subgoals(total, layout_.state_dim);
  states << batch.states, repeat_each_row(batch.states, m);
  goals << batch.goals, repeat_each_row(batch.goals, m);
  subgoals << candidates, baseline;
  const Vector costs = subgoal_costs(nets_, layout_, norm_, states, subgoals, goals,
                                     normal_noise(2 * total, layout_.action_dim), hp_.value_clip);
  const Vector candidate_costs = costs.head(rows);
  const Matrix baseline_costs = Eigen::Map<const Matrix>(costs.data() + rows, rows, m);
  const Vector advantages = advantages_from_costs(baseline_costs, candidate_costs);

  HighLevelStats stats;
  stats.weights = softmax_weights(advantages, hp_.lambda);
  Tape tape;
  Var loss = highlevel_loss(tape, nets_.highlevel, layout_, norm_, batch.states, batch.goals, candidates,
                            stats.weights);
  stats.loss = loss.value()(0, 0);
  check_finite(stats.loss, "highlevel_update");
  nets_.highlevel.zero_grad();
  tape.backward(loss);
  ad::adam_step(nets_.highlevel, adam_highlevel_, ad::AdamConfig{hp_.lr_highlevel});
  return stats;
}

HighLevelStats RisAgent::cost_descent_update(const replay::BatchMatrices& batch) {
  const Eigen::Index rows = batch.states.rows();
  CostDescentInputs in{batch.states, batch.goals, uniform_noise(rows, layout_.state_dim),
                       normal_noise(2 * rows, layout_.action_dim)};
  Tape tape;
  Var loss = highlevel_cost_loss(tape, nets_, layout_, norm_, in, hp_.value_clip);
  HighLevelStats stats;
  stats.loss = loss.value()(0, 0);
  check_finite(stats.loss, "highlevel_update");
  nets_.highlevel.zero_grad();
  tape.backward(loss);
  ad::adam_step(nets_.highlevel, adam_highlevel_, ad::AdamConfig{hp_.lr_highlevel});
  return stats;
}

Matrix RisAgent::prior_subgoals(const Matrix& states, const Matrix& goals) {
  const Eigen::Index rows = states.rows();
  const Eigen::Index count = hp_.prior_samples;
  LaplaceHead head;
  if (hp_.prior_mode == PriorMode::OracleSubgoals) {
    head.loc.resize(rows, layout_.state_dim);
    for (Eigen::Index r = 0; r < rows; ++r) {
      const env::Point s(states(r, 0), states(r, 1));
      const env::Point g(goals(r, 0), goals(r, 1));
      // Goals are visited states, but a batch row may still sit on a wall
      // boundary after relabeling; those rows fall back to the straight midpoint.
      if (maze_.is_free(s) && maze_.is_free(g)) {
        head.loc.row(r) = oracle_->midpoint(s, g).representative.transpose();
      } else {
        head.loc.row(r) = (0.5 * (s + g)).transpose();
      }
    }
    head.log_scale = Matrix::Constant(rows, layout_.state_dim, std::log(hp_.oracle_scale));
  } else {
    head = highlevel_head(nets_.highlevel, layout_, norm_, states, goals);
  }
  LaplaceHead repeated{repeat_each_row(head.loc, count), repeat_each_row(head.log_scale, count)};
  return laplace_samples(repeated, uniform_noise(rows * count, layout_.state_dim));
}

PolicyStats RisAgent::policy_update(const replay::BatchMatrices& batch) {
  notify("policy");
  PolicyLossInputs in;
  in.states = repeat_each_row(batch.states, hp_.kl_samples);
  in.goals = repeat_each_row(batch.goals, hp_.kl_samples);
  const Eigen::Index rows = in.states.rows();
  in.action_noise = normal_noise(rows, layout_.action_dim);
  in.prior_samples = hp_.prior_samples;
  in.prior_epsilon = hp_.prior_epsilon;
  switch (hp_.prior_mode) {
    case PriorMode::Uniform:
      in.prior = PriorKind::Uniform;
      break;
    case PriorMode::MovingAverage:
      in.prior = PriorKind::MovingAverage;
      break;
    case PriorMode::ImaginedSubgoals:
    case PriorMode::OracleSubgoals:
      in.prior = PriorKind::Subgoals;
      in.subgoals = prior_subgoals(in.states, in.goals);
      break;
  }
  Tape tape;
  PolicyLoss pl = policy_loss(tape, nets_, layout_, norm_, in, hp_.alpha);
  PolicyStats stats;
  stats.loss = pl.loss.value()(0, 0);
  stats.kl = pl.kl.value().mean();
  check_finite(stats.loss, "policy_update");
  nets_.policy.zero_grad();
  tape.backward(pl.loss);
  ad::adam_step(nets_.policy, adam_policy_, ad::AdamConfig{hp_.lr_policy});
  ad::polyak_update(nets_.policy_ema, nets_.policy, hp_.tau);
  return stats;
}

Vector RisAgent::values(const Matrix& states, const Matrix& goals) {
  return core::values(nets_, layout_, norm_, states, goals, normal_noise(states.rows(), layout_.action_dim));
}

double RisAgent::value(const Vector& s, const Vector& g) { return values(row_matrix(s), row_matrix(g))[0]; }

double RisAgent::subgoal_cost(const Vector& s, const Vector& subgoal, const Vector& g) {
  return subgoal_costs(nets_, layout_, norm_, row_matrix(s), row_matrix(subgoal), row_matrix(g),
                       normal_noise(2, layout_.action_dim), hp_.value_clip)[0];
}

double RisAgent::highlevel_advantage(const Vector& s, const Vector& g, const Vector& subgoal) {
  const LaplaceHead head = highlevel_head(nets_.highlevel, layout_, norm_, row_matrix(s), row_matrix(g));
  const Eigen::Index m = hp_.baseline_samples;
  LaplaceHead repeated{repeat_each_row(head.loc, m), repeat_each_row(head.log_scale, m)};
  const Matrix baseline = laplace_samples(repeated, uniform_noise(m, layout_.state_dim));
  std::vector<Vector> samples;
  for (Eigen::Index j = 0; j < m; ++j) samples.push_back(baseline.row(j).transpose());
  return core::highlevel_advantage([&](const Vector& x) { return subgoal_cost(s, x, g); }, samples, subgoal);
}

double RisAgent::prior_log_prob(const Vector& s, const Vector& g, const Vector& action) {
  const double bound = 1.0 - dist::kActionClamp;
  const Matrix pre = row_matrix(action.cwiseMax(-bound).cwiseMin(bound).unaryExpr([](double v) {
    return std::atanh(v);
  }));
  switch (hp_.prior_mode) {
    case PriorMode::Uniform:
      return -layout_.action_dim * std::log(2.0);
    case PriorMode::MovingAverage: {
      const GaussianHead ema = policy_head(nets_.policy_ema, layout_, norm_, row_matrix(s), row_matrix(g));
      Tape tape;
      Var lp = dist::squashed_log_prob_pre_tanh(tape.constant(pre), tape.constant(ema.mean),
                                                tape.constant(ema.log_std));
      return lp.value()(0, 0);
    }
    case PriorMode::ImaginedSubgoals:
    case PriorMode::OracleSubgoals:
      break;
  }
  const Matrix states = row_matrix(s);
  const Matrix subgoals = prior_subgoals(states, row_matrix(g));
  const GaussianHead ema =
      policy_head(nets_.policy_ema, layout_, norm_, repeat_each_row(states, hp_.prior_samples), subgoals);
  Tape tape;
  Var lp = prior_log_prob_graph(tape.constant(pre), ema, hp_.prior_samples, hp_.prior_epsilon);
  return lp.value()(0, 0);
}

env::Point RisAgent::predict_subgoal(const env::Point& s, const env::Point& g) const {
  const LaplaceHead head = highlevel_head(nets_.highlevel, layout_, norm_, row_matrix(s), row_matrix(g));
  return env::Point(head.loc(0, 0), head.loc(0, 1));
}

}  // namespace ris::core
