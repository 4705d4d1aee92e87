#include "ris/losses.hpp"

#include <cmath>
#include <limits>

#include "ris/distributions.hpp"
#include "ris/errors.hpp"

namespace ris::core {

namespace ad = ris::autodiff;

namespace {

Matrix replicate_row(const Vector& v, Eigen::Index rows) { return v.transpose().replicate(rows, 1); }

Matrix concat(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), a.cols() + b.cols());
  out << a, b;
  return out;
}

Matrix concat(const Matrix& a, const Matrix& b, const Matrix& c) {
  Matrix out(a.rows(), a.cols() + b.cols() + c.cols());
  out << a, b, c;
  return out;
}

void require_rows(const Matrix& m, Eigen::Index rows, const char* what) {
  if (m.rows() != rows) {
    throw ConfigError(std::string(what) + ": expected " + std::to_string(rows) + " rows, got " +
                      std::to_string(m.rows()));
  }
}

struct GaussianVars {
  Var mean;
  Var log_std;
};

GaussianVars policy_graph(Tape& tape, ParameterSet& policy, const NetworkLayout& layout, Var s_norm, Var g_norm,
                          bool trainable) {
  Var out = ad::mlp_forward(tape, policy, ad::concat_cols({s_norm, g_norm}), layout.hidden, layout.activation,
                            trainable);
  Var mean = ad::slice_cols(out, 0, layout.action_dim);
  Var log_std = ad::clamp(ad::slice_cols(out, layout.action_dim, layout.action_dim), dist::kLogStdMin,
                          dist::kLogStdMax);
  return {mean, log_std};
}

struct LaplaceVars {
  Var loc;
  Var log_scale;
};

LaplaceVars highlevel_graph(Tape& tape, ParameterSet& highlevel, const NetworkLayout& layout,
                            const Normalizer& norm, Var s_norm, Var g_norm, bool trainable) {
  Var out = ad::mlp_forward(tape, highlevel, ad::concat_cols({s_norm, g_norm}), layout.hidden, layout.activation,
                            trainable);
  const Eigen::Index rows = out.rows();
  Var loc_n = ad::slice_cols(out, 0, layout.state_dim);
  Var raw_scale = ad::clamp(ad::slice_cols(out, layout.state_dim, layout.state_dim), kHighLevelLogScaleMin,
                            kHighLevelLogScaleMax);
  Var loc = ad::add(ad::mul_const(loc_n, replicate_row(norm.half_extent, rows)),
                    tape.constant(replicate_row(norm.center, rows)));
  Var log_scale =
      ad::add(raw_scale, tape.constant(replicate_row(norm.half_extent.array().log().matrix(), rows)));
  return {loc, log_scale};
}

// min(Q1, Q2) with frozen critics, differentiable w.r.t. every input.
Var twin_q_graph(Tape& tape, Networks& nets, const NetworkLayout& layout, Var s_norm, Var action, Var g_norm) {
  Var input = ad::concat_cols({s_norm, action, g_norm});
  Var q1 = ad::mlp_forward(tape, nets.q1, input, layout.hidden, layout.activation, false);
  Var q2 = ad::mlp_forward(tape, nets.q2, input, layout.hidden, layout.activation, false);
  return ad::minimum(q1, q2);
}

// V(s, g) on the tape: frozen policy and critics, fixed action noise.
Var value_graph(Tape& tape, Networks& nets, const NetworkLayout& layout, Var s_norm, Var g_norm,
                const Matrix& action_noise) {
  GaussianVars head = policy_graph(tape, nets.policy, layout, s_norm, g_norm, false);
  Var pre = ad::add(head.mean, ad::mul_const(ad::exp(head.log_std), action_noise));
  return twin_q_graph(tape, nets, layout, s_norm, ad::tanh(pre), g_norm);
}

}  // namespace

Matrix Normalizer::normalize(const Matrix& x) const {
  Matrix out = x;
  for (Eigen::Index c = 0; c < x.cols(); ++c) out.col(c) = (x.col(c).array() - center[c]) / half_extent[c];
  return out;
}

Var Normalizer::normalize(Tape& tape, Var x) const {
  const Eigen::Index rows = x.rows();
  const Vector inv = half_extent.cwiseInverse();
  const Vector offset = -center.cwiseProduct(inv);
  return ad::add(ad::mul_const(x, replicate_row(inv, rows)), tape.constant(replicate_row(offset, rows)));
}

Networks make_networks(const NetworkLayout& layout, std::mt19937_64& rng) {
  const auto sd = static_cast<std::size_t>(layout.state_dim);
  const auto adim = static_cast<std::size_t>(layout.action_dim);
  Networks n;
  n.policy = ad::make_mlp({2 * sd, layout.hidden, 2 * adim, layout.activation}, rng);
  n.q1 = ad::make_mlp({2 * sd + adim, layout.hidden, 1, layout.activation}, rng);
  n.q2 = ad::make_mlp({2 * sd + adim, layout.hidden, 1, layout.activation}, rng);
  n.highlevel = ad::make_mlp({2 * sd, layout.hidden, 2 * sd, layout.activation}, rng);
  n.policy_ema = n.policy;
  n.q1_target = n.q1;
  n.q2_target = n.q2;
  return n;
}

GaussianHead policy_head(const ParameterSet& policy, const NetworkLayout& layout, const Normalizer& norm,
                         const Matrix& states, const Matrix& goals) {
  Matrix out = ad::mlp_infer(policy, concat(norm.normalize(states), norm.normalize(goals)), layout.hidden,
                             layout.activation);
  GaussianHead head;
  head.mean = out.leftCols(layout.action_dim);
  head.log_std = out.rightCols(layout.action_dim).cwiseMax(dist::kLogStdMin).cwiseMin(dist::kLogStdMax);
  return head;
}

Matrix squash_sample(const GaussianHead& head, const Matrix& noise) {
  const double bound = 1.0 - dist::kActionClamp;
  return (head.mean + Matrix(head.log_std.array().exp() * noise.array())).array().tanh().cwiseMax(-bound).cwiseMin(bound);
}

LaplaceHead highlevel_head(const ParameterSet& highlevel, const NetworkLayout& layout, const Normalizer& norm,
                           const Matrix& states, const Matrix& goals) {
  Matrix out = ad::mlp_infer(highlevel, concat(norm.normalize(states), norm.normalize(goals)), layout.hidden,
                             layout.activation);
  const Eigen::Index rows = out.rows();
  LaplaceHead head;
  head.loc = Matrix(out.leftCols(layout.state_dim).array() * replicate_row(norm.half_extent, rows).array()) +
             replicate_row(norm.center, rows);
  head.log_scale =
      out.rightCols(layout.state_dim).cwiseMax(kHighLevelLogScaleMin).cwiseMin(kHighLevelLogScaleMax) +
      replicate_row(norm.half_extent.array().log().matrix(), rows);
  return head;
}

Matrix laplace_samples(const LaplaceHead& head, const Matrix& uniform_noise) {
  Matrix out(head.loc.rows(), head.loc.cols());
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    const dist::DiagLaplaceParams p = dist::DiagLaplaceParams::from_raw(head.loc.row(r).transpose(),
                                                                        head.log_scale.row(r).transpose());
    out.row(r) = dist::laplace_sample(p, uniform_noise.row(r).transpose()).transpose();
  }
  return out;
}

Matrix q_input(const Normalizer& norm, const Matrix& states, const Matrix& actions, const Matrix& goals) {
  return concat(norm.normalize(states), actions, norm.normalize(goals));
}

Vector values(const Networks& nets, const NetworkLayout& layout, const Normalizer& norm, const Matrix& states,
              const Matrix& goals, const Matrix& action_noise) {
  require_rows(action_noise, states.rows(), "values");
  const GaussianHead head = policy_head(nets.policy, layout, norm, states, goals);
  const Matrix actions = squash_sample(head, action_noise);
  const Matrix input = q_input(norm, states, actions, goals);
  const Matrix q1 = ad::mlp_infer(nets.q1, input, layout.hidden, layout.activation);
  const Matrix q2 = ad::mlp_infer(nets.q2, input, layout.hidden, layout.activation);
  return q1.cwiseMin(q2).col(0);
}

Vector subgoal_costs(const Networks& nets, const NetworkLayout& layout, const Normalizer& norm,
                     const Matrix& states, const Matrix& subgoals, const Matrix& goals, const Matrix& action_noise,
                     const ValueClip& clip) {
  const Eigen::Index r = states.rows();
  require_rows(subgoals, r, "subgoal_costs");
  require_rows(goals, r, "subgoal_costs");
  require_rows(action_noise, 2 * r, "subgoal_costs");
  // Both legs in one pass: rows [0, r) are (s, s_g), rows [r, 2r) are (s_g, g).
  Matrix from(2 * r, states.cols());
  Matrix to(2 * r, states.cols());
  from << states, subgoals;
  to << subgoals, goals;
  const Vector v = values(nets, layout, norm, from, to, action_noise).cwiseMax(clip.low).cwiseMin(clip.high);
  return v.head(r).cwiseAbs().cwiseMax(v.tail(r).cwiseAbs());
}

double highlevel_advantage(const std::function<double(const Vector&)>& cost, const std::vector<Vector>& baseline,
                           const Vector& candidate) {
  if (baseline.empty()) throw UsageError("highlevel_advantage: need at least one baseline sample");
  double total = 0.0;
  for (const Vector& s : baseline) total += cost(s);
  return total / static_cast<double>(baseline.size()) - cost(candidate);
}

Vector advantages_from_costs(const Matrix& baseline_costs, const Vector& candidate_costs) {
  if (baseline_costs.rows() != candidate_costs.size()) {
    throw ConfigError("advantages_from_costs: row mismatch");
  }
  return baseline_costs.rowwise().mean() - candidate_costs;
}

Vector softmax_weights(const Vector& advantages, double lambda) {
  if (!(lambda > 0.0)) throw ConfigError("softmax_weights: lambda must be positive");
  if (advantages.size() == 0) throw UsageError("softmax_weights: empty batch");
  if (!advantages.allFinite()) throw NumericalError("softmax_weights: non-finite advantage");
  const Vector z = advantages / lambda;
  const Vector e = (z.array() - z.maxCoeff()).exp();
  Vector w = e / e.sum();
  if (!w.allFinite()) throw NumericalError("softmax_weights: non-finite weights");
  return w;
}

double log_mean_exp_eps(std::span<const double> log_densities, double eps) {
  if (log_densities.empty()) throw UsageError("log_mean_exp_eps: no samples");
  const double log_k = std::log(static_cast<double>(log_densities.size()));
  const double log_eps = eps > 0.0 ? std::log(eps) : -std::numeric_limits<double>::infinity();
  double m = log_eps;
  for (double l : log_densities) m = std::max(m, l - log_k);
  double total = std::exp(log_eps - m);
  for (double l : log_densities) total += std::exp(l - log_k - m);
  return m + std::log(total);
}

Vector bellman_targets(const Networks& nets, const NetworkLayout& layout, const Normalizer& norm,
                       const BellmanInputs& in, double gamma) {
  const GaussianHead head = policy_head(nets.policy, layout, norm, in.next_states, in.goals);
  const Matrix next_actions = squash_sample(head, in.next_action_noise);
  const Matrix input = q_input(norm, in.next_states, next_actions, in.goals);
  const Matrix q1 = ad::mlp_infer(nets.q1_target, input, layout.hidden, layout.activation);
  const Matrix q2 = ad::mlp_infer(nets.q2_target, input, layout.hidden, layout.activation);
  const Vector next_value = q1.cwiseMin(q2).col(0);
  return in.rewards + gamma * (1.0 - in.success.array()).matrix().cwiseProduct(next_value);
}

Var critic_loss(Tape& tape, ParameterSet& q, const NetworkLayout& layout, const Normalizer& norm,
                const Matrix& states, const Matrix& actions, const Matrix& goals, const Vector& targets) {
  Var input = tape.constant(q_input(norm, states, actions, goals));
  Var pred = ad::mlp_forward(tape, q, input, layout.hidden, layout.activation, true);
  Var err = ad::sub(pred, tape.constant(Matrix(targets)));
  return ad::scale(ad::mean(ad::square(err)), 0.5);
}

Var prior_log_prob_graph(Var pre_tanh, const GaussianHead& prior_heads, int prior_samples, double eps) {
  Tape& tape = pre_tanh.tape();
  const Eigen::Index rows = pre_tanh.rows();
  Var repeated = ad::repeat_rows(pre_tanh, prior_samples);
  Var per_subgoal = dist::squashed_log_prob_pre_tanh(repeated, tape.constant(prior_heads.mean),
                                                     tape.constant(prior_heads.log_std));
  return ad::log_mean_exp_eps(ad::reshape(per_subgoal, rows, prior_samples), eps);
}

PolicyLoss policy_loss(Tape& tape, Networks& nets, const NetworkLayout& layout, const Normalizer& norm,
                       const PolicyLossInputs& in, double alpha) {
  const Eigen::Index rows = in.states.rows();
  require_rows(in.goals, rows, "policy_loss");
  require_rows(in.action_noise, rows, "policy_loss");
  Var s_norm = tape.constant(norm.normalize(in.states));
  Var g_norm = tape.constant(norm.normalize(in.goals));
  GaussianVars head = policy_graph(tape, nets.policy, layout, s_norm, g_norm, true);
  Var pre = ad::add(head.mean, ad::mul_const(ad::exp(head.log_std), in.action_noise));
  Var action = ad::tanh(pre);
  Var log_pi = dist::squashed_log_prob_pre_tanh(pre, head.mean, head.log_std);

  Var log_prior;
  switch (in.prior) {
    case PriorKind::Uniform:
      log_prior = tape.constant(Matrix::Constant(rows, 1, -layout.action_dim * std::log(2.0)));
      break;
    case PriorKind::MovingAverage: {
      const GaussianHead ema = policy_head(nets.policy_ema, layout, norm, in.states, in.goals);
      log_prior = dist::squashed_log_prob_pre_tanh(pre, tape.constant(ema.mean), tape.constant(ema.log_std));
      break;
    }
    case PriorKind::Subgoals: {
      require_rows(in.subgoals, rows * in.prior_samples, "policy_loss subgoals");
      Matrix repeated_states(rows * in.prior_samples, in.states.cols());
      for (Eigen::Index r = 0; r < rows; ++r) {
        repeated_states.middleRows(r * in.prior_samples, in.prior_samples) =
            in.states.row(r).replicate(in.prior_samples, 1);
      }
      const GaussianHead ema = policy_head(nets.policy_ema, layout, norm, repeated_states, in.subgoals);
      log_prior = prior_log_prob_graph(pre, ema, in.prior_samples, in.prior_epsilon);
      break;
    }
  }

  Var kl = ad::sub(log_pi, log_prior);
  Var q = twin_q_graph(tape, nets, layout, s_norm, action, g_norm);
  Var loss = ad::mean(ad::sub(ad::scale(kl, alpha), q));
  return {loss, kl};
}

Var highlevel_loss(Tape& tape, ParameterSet& highlevel, const NetworkLayout& layout, const Normalizer& norm,
                   const Matrix& states, const Matrix& goals, const Matrix& candidates, const Vector& weights) {
  const Eigen::Index rows = states.rows();
  require_rows(candidates, rows, "highlevel_loss");
  if (weights.size() != rows) throw ConfigError("highlevel_loss: weight count mismatch");
  Var s_norm = tape.constant(norm.normalize(states));
  Var g_norm = tape.constant(norm.normalize(goals));
  LaplaceVars head = highlevel_graph(tape, highlevel, layout, norm, s_norm, g_norm, true);
  Var log_prob = dist::laplace_log_prob_graph(tape.constant(candidates), head.loc, head.log_scale);
  return ad::neg(ad::sum(ad::mul_const(log_prob, Matrix(weights))));
}

Var highlevel_cost_loss(Tape& tape, Networks& nets, const NetworkLayout& layout, const Normalizer& norm,
                        const CostDescentInputs& in, const ValueClip& clip) {
  const Eigen::Index rows = in.states.rows();
  require_rows(in.laplace_noise, rows, "highlevel_cost_loss");
  require_rows(in.action_noise, 2 * rows, "highlevel_cost_loss");
  Var s_norm = tape.constant(norm.normalize(in.states));
  Var g_norm = tape.constant(norm.normalize(in.goals));
  LaplaceVars head = highlevel_graph(tape, nets.highlevel, layout, norm, s_norm, g_norm, true);
  Var subgoal = dist::laplace_rsample(head.loc, head.log_scale, in.laplace_noise);
  Var sg_norm = norm.normalize(tape, subgoal);
  Var first = value_graph(tape, nets, layout, s_norm, sg_norm, in.action_noise.topRows(rows));
  Var second = value_graph(tape, nets, layout, sg_norm, g_norm, in.action_noise.bottomRows(rows));
  Var c1 = ad::abs(ad::clamp(first, clip.low, clip.high));
  Var c2 = ad::abs(ad::clamp(second, clip.low, clip.high));
  return ad::mean(ad::maximum(c1, c2));
}

}  // namespace ris::core
