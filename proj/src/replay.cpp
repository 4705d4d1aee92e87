#include "ris/replay.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ris/errors.hpp"

namespace ris::replay {

BatchMatrices to_matrices(const Batch& batch) {
  BatchMatrices m;
  const auto n = static_cast<Eigen::Index>(batch.size());
  if (n == 0) return m;
  const auto& first = batch.transitions.front();
  m.states.resize(n, first.state.size());
  m.actions.resize(n, first.action.size());
  m.next_states.resize(n, first.next_state.size());
  m.goals.resize(n, first.goal.size());
  m.rewards.resize(n);
  m.success.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& t = batch.transitions[static_cast<std::size_t>(i)];
    m.states.row(i) = t.state.transpose();
    m.actions.row(i) = t.action.transpose();
    m.next_states.row(i) = t.next_state.transpose();
    m.goals.row(i) = t.goal.transpose();
    m.rewards[i] = t.reward;
    m.success[i] = t.reward == 0.0 ? 1.0 : 0.0;
  }
  return m;
}

ReplayBuffer::ReplayBuffer(std::size_t capacity, SuccessFn success, HerMix mix)
    : capacity_(capacity), success_(std::move(success)), mix_(mix) {
  if (capacity_ == 0) throw ConfigError("replay buffer capacity must be positive");
  if (!success_) throw ConfigError("replay buffer needs a success predicate");
  const double total = mix_.original + mix_.random + mix_.future;
  if (mix_.original < 0 || mix_.random < 0 || mix_.future < 0 || std::abs(total - 1.0) > 1e-12) {
    throw ConfigError("HER mix must be non-negative and sum to 1");
  }
}

std::int64_t ReplayBuffer::push_trajectory(std::vector<Transition> transitions) {
  if (transitions.empty()) throw UsageError("push_trajectory: empty episode");
  if (transitions.size() > capacity_) {
    throw ConfigError("push_trajectory: episode of length " + std::to_string(transitions.size()) +
                      " exceeds buffer capacity " + std::to_string(capacity_));
  }
  for (std::size_t i = 0; i + 1 < transitions.size(); ++i) {
    if (transitions[i].next_state != transitions[i + 1].state) {
      throw UsageError("push_trajectory: transitions are not one contiguous episode (break at index " +
                       std::to_string(i) + ")");
    }
  }
  while (size_ + transitions.size() > capacity_) {
    size_ -= trajectories_.front().steps.size();
    trajectories_.pop_front();
  }
  const std::int64_t id = next_id_++;
  for (std::size_t i = 0; i < transitions.size(); ++i) {
    transitions[i].trajectory_id = id;
    transitions[i].index_in_trajectory = static_cast<int>(i);
  }
  size_ += transitions.size();
  trajectories_.push_back(Trajectory{id, next_start_, std::move(transitions)});
  next_start_ += trajectories_.back().steps.size();
  return id;
}

const ReplayBuffer::Trajectory& ReplayBuffer::trajectory_of(std::size_t k) const {
  const std::size_t absolute = trajectories_.front().start + k;
  auto it = std::upper_bound(trajectories_.begin(), trajectories_.end(), absolute,
                             [](std::size_t value, const Trajectory& t) { return value < t.start; });
  return *std::prev(it);
}

const Transition& ReplayBuffer::locate(std::size_t k) const {
  const Trajectory& t = trajectory_of(k);
  return t.steps[trajectories_.front().start + k - t.start];
}

bool ReplayBuffer::contains_trajectory(std::int64_t id) const {
  return std::any_of(trajectories_.begin(), trajectories_.end(), [&](const Trajectory& t) { return t.id == id; });
}

const std::vector<Transition>& ReplayBuffer::trajectory(std::int64_t id) const {
  for (const auto& t : trajectories_) {
    if (t.id == id) return t.steps;
  }
  throw UsageError("trajectory " + std::to_string(id) + " is not stored");
}

void ReplayBuffer::recompute(Transition& t, bool original_timeout) const {
  const bool reached = success_(t.next_state, t.goal);
  t.reward = reached ? 0.0 : -1.0;
  t.done = reached || original_timeout;
}

Batch ReplayBuffer::sample_uniform(std::size_t batch_size, Rng& rng) const {
  if (empty()) throw UsageError("sample from an empty replay buffer");
  std::uniform_int_distribution<std::size_t> pick(0, size_ - 1);
  Batch batch;
  batch.transitions.reserve(batch_size);
  batch.provenance.assign(batch_size, Provenance{});
  for (std::size_t b = 0; b < batch_size; ++b) batch.transitions.push_back(locate(pick(rng)));
  return batch;
}

Batch ReplayBuffer::sample_her(std::size_t batch_size, Rng& rng) const {
  if (empty()) throw UsageError("sample from an empty replay buffer");
  std::uniform_int_distribution<std::size_t> pick(0, size_ - 1);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  Batch batch;
  batch.transitions.reserve(batch_size);
  batch.provenance.reserve(batch_size);
  for (std::size_t b = 0; b < batch_size; ++b) {
    const std::size_t k = pick(rng);
    const Trajectory& traj = trajectory_of(k);
    Transition t = traj.steps[trajectories_.front().start + k - traj.start];
    const bool original_timeout = t.done && t.reward != 0.0;
    Provenance prov;
    const double u = coin(rng);
    if (u < mix_.original) {
      prov.source = GoalSource::Original;
    } else if (u < mix_.original + mix_.random) {
      const std::size_t j = pick(rng);
      const Trajectory& other = trajectory_of(j);
      const Transition& src = other.steps[trajectories_.front().start + j - other.start];
      t.goal = src.state;
      prov = Provenance{GoalSource::RandomState, src.trajectory_id, src.index_in_trajectory};
    } else {
      // States strictly after index i: s_{i+1} .. s_L, where s_L is the final next_state.
      const int length = static_cast<int>(traj.steps.size());
      std::uniform_int_distribution<int> later(t.index_in_trajectory + 1, length);
      const int j = later(rng);
      t.goal = j < length ? traj.steps[static_cast<std::size_t>(j)].state : traj.steps.back().next_state;
      prov = Provenance{GoalSource::FutureState, traj.id, j};
    }
    recompute(t, original_timeout);
    batch.transitions.push_back(std::move(t));
    batch.provenance.push_back(prov);
  }
  return batch;
}

Matrix ReplayBuffer::sample_subgoal_candidates(std::size_t batch_size, Rng& rng) const {
  if (empty()) throw UsageError("sample from an empty replay buffer");
  std::uniform_int_distribution<std::size_t> pick(0, size_ - 1);
  const auto dim = locate(0).state.size();
  Matrix out(static_cast<Eigen::Index>(batch_size), dim);
  for (std::size_t b = 0; b < batch_size; ++b) {
    out.row(static_cast<Eigen::Index>(b)) = locate(pick(rng)).state.transpose();
  }
  return out;
}

}  // namespace ris::replay
