#ifndef RIS_ENV_HPP_
#define RIS_ENV_HPP_

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ris/rng.hpp"

namespace ris::env {

using Point = Eigen::Vector2d;

// Axis-aligned rectangle with lower-left corner (x, y). Closed: points on the
// boundary count as inside.
struct Rect {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  bool contains(const Point& p) const { return p.x() >= x && p.x() <= x + w && p.y() >= y && p.y() <= y + h; }
  bool operator==(const Rect&) const = default;
};

struct MazeSpec {
  std::string name = "custom";
  double width = 0.0;
  double height = 0.0;
  std::vector<Rect> walls;
  double success_radius = 0.5;
  double max_step = 0.75;
  int episode_limit = 100;
  // Pinned start/goal for the long-horizon evaluation, when the layout has one.
  std::optional<Point> eval_start;
  std::optional<Point> eval_goal;

  bool in_bounds(const Point& p) const {
    return p.x() >= 0.0 && p.x() <= width && p.y() >= 0.0 && p.y() <= height;
  }
  bool is_free(const Point& p) const;

  // Throws EnvironmentError: walls outside bounds, non-positive radius or step,
  // or free space that is not connected.
  void validate() const;
};

enum class MazeKind { U, S };

MazeSpec make_maze(MazeKind kind);
// Parses "u" / "s" (case-insensitive).
MazeKind parse_maze_kind(const std::string& text);

struct EnvState {
  Point position = Point::Zero();
  Point goal = Point::Zero();
  int steps_elapsed = 0;
};

struct StepResult {
  EnvState next;
  double reward = -1.0;
  bool done = false;
  bool success = false;
};

inline constexpr int kResetAttempts = 10000;

// Uniform draw over free space by rejection.
Point sample_free_point(const MazeSpec& spec, Rng& rng);
EnvState reset(const MazeSpec& spec, Rng& rng);
// Clamps the action to [-1, 1]^2, moves along x then y, cancelling any axis
// move that would end inside a wall or outside the bounds.
StepResult step(const MazeSpec& spec, const EnvState& state, const Point& action);
bool success(const Point& position, const Point& goal, const MazeSpec& spec);

// Uniform environment interface. Observations and goals share one space.
class GoalEnv {
 public:
  virtual ~GoalEnv() = default;
  virtual int state_dim() const = 0;
  virtual int action_dim() const = 0;
  virtual const EnvState& reset(Rng& rng) = 0;
  // Starts an episode from an explicit configuration.
  virtual const EnvState& reset_to(const Point& start, const Point& goal) = 0;
  virtual StepResult step(const Eigen::VectorXd& action) = 0;
  virtual const EnvState& state() const = 0;
};

class PointMazeEnv final : public GoalEnv {
 public:
  explicit PointMazeEnv(MazeSpec spec);

  int state_dim() const override { return 2; }
  int action_dim() const override { return 2; }
  const EnvState& reset(Rng& rng) override;
  const EnvState& reset_to(const Point& start, const Point& goal) override;
  StepResult step(const Eigen::VectorXd& action) override;
  const EnvState& state() const override { return state_; }
  const MazeSpec& spec() const { return spec_; }

 private:
  MazeSpec spec_;
  EnvState state_;
};

}  // namespace ris::env

#endif  // RIS_ENV_HPP_
