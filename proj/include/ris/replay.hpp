#ifndef RIS_REPLAY_HPP_
#define RIS_REPLAY_HPP_

#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "ris/rng.hpp"
#include "ris/tensor.hpp"

namespace ris::replay {

using Vector = Eigen::VectorXd;
using autodiff::Matrix;

struct Transition {
  Vector state;
  Vector action;
  double reward = -1.0;
  Vector next_state;
  bool done = false;
  Vector goal;
  std::int64_t trajectory_id = -1;
  int index_in_trajectory = 0;
};

// Goal relabeling mix: 20% original, 40% random stored state, 40% future
// state of the same trajectory.
struct HerMix {
  double original = 0.2;
  double random = 0.4;
  double future = 0.4;
};

enum class GoalSource { Original, RandomState, FutureState };

// Where a sampled goal came from. For relabeled goals, the trajectory and
// index of the stored state that was copied (index == length denotes the
// final next_state).
struct Provenance {
  GoalSource source = GoalSource::Original;
  std::int64_t trajectory_id = -1;
  int index = -1;
};

struct Batch {
  std::vector<Transition> transitions;
  std::vector<Provenance> provenance;

  std::size_t size() const { return transitions.size(); }
};

// Dense views used by the learners. `success` is 1 where the reward is 0.
struct BatchMatrices {
  Matrix states;
  Matrix actions;
  Matrix next_states;
  Matrix goals;
  Eigen::VectorXd rewards;
  Eigen::VectorXd success;
};

BatchMatrices to_matrices(const Batch& batch);

using SuccessFn = std::function<bool(const Vector& state, const Vector& goal)>;

// Trajectory-aware ring buffer. Eviction drops whole trajectories, oldest first.
class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t capacity, SuccessFn success, HerMix mix = {});

  // Stores one contiguous episode under a fresh trajectory id and returns it.
  std::int64_t push_trajectory(std::vector<Transition> transitions);

  // Uniform draw over stored transitions, each independently relabeled.
  Batch sample_her(std::size_t batch_size, Rng& rng) const;
  // Uniform draw without relabeling.
  Batch sample_uniform(std::size_t batch_size, Rng& rng) const;
  // Uniformly drawn stored states, one per row.
  Matrix sample_subgoal_candidates(std::size_t batch_size, Rng& rng) const;

  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }
  std::size_t num_trajectories() const { return trajectories_.size(); }
  bool empty() const { return size_ == 0; }
  bool contains_trajectory(std::int64_t id) const;
  const std::vector<Transition>& trajectory(std::int64_t id) const;

  // Recomputes reward and done for a (possibly relabeled) goal. Time-limit
  // terminations stay done.
  void recompute(Transition& t, bool original_timeout) const;

 private:
  struct Trajectory {
    std::int64_t id = 0;
    std::size_t start = 0;  // running offset of the first transition
    std::vector<Transition> steps;
  };

  const Transition& locate(std::size_t k) const;
  const Trajectory& trajectory_of(std::size_t k) const;

  std::size_t capacity_;
  SuccessFn success_;
  HerMix mix_;
  std::deque<Trajectory> trajectories_;
  std::size_t size_ = 0;
  std::size_t next_start_ = 0;
  std::int64_t next_id_ = 0;
};

}  // namespace ris::replay

#endif  // RIS_REPLAY_HPP_
