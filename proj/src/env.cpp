#include "ris/env.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <queue>

#include "ris/errors.hpp"

namespace ris::env {

bool MazeSpec::is_free(const Point& p) const {
  if (!in_bounds(p)) return false;
  return std::none_of(walls.begin(), walls.end(), [&](const Rect& r) { return r.contains(p); });
}

void MazeSpec::validate() const {
  if (!(width > 0.0) || !(height > 0.0)) throw EnvironmentError("maze '" + name + "': bounds must be positive");
  if (!(success_radius > 0.0)) throw EnvironmentError("maze '" + name + "': success_radius must be > 0");
  if (!(max_step > 0.0)) throw EnvironmentError("maze '" + name + "': max_step must be > 0");
  if (episode_limit < 1) throw EnvironmentError("maze '" + name + "': episode_limit must be >= 1");
  for (const Rect& r : walls) {
    if (r.w <= 0.0 || r.h <= 0.0 || r.x < 0.0 || r.y < 0.0 || r.x + r.w > width || r.y + r.h > height) {
      throw EnvironmentError("maze '" + name + "': wall (" + std::to_string(r.x) + ", " + std::to_string(r.y) +
                             ", " + std::to_string(r.w) + ", " + std::to_string(r.h) + ") leaves the bounds");
    }
  }
  for (const auto& p : {eval_start, eval_goal}) {
    if (p && !is_free(*p)) throw EnvironmentError("maze '" + name + "': evaluation point inside a wall");
  }

  // 4-connected flood fill over cell centres at 4 cells per unit.
  constexpr double kRes = 4.0;
  const int nx = static_cast<int>(std::ceil(width * kRes));
  const int ny = static_cast<int>(std::ceil(height * kRes));
  std::vector<char> free(static_cast<std::size_t>(nx) * ny, 0);
  int total = 0;
  int first = -1;
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const Point c((i + 0.5) / kRes, (j + 0.5) / kRes);
      if (is_free(c)) {
        free[j * nx + i] = 1;
        ++total;
        if (first < 0) first = j * nx + i;
      }
    }
  }
  if (total == 0) throw EnvironmentError("maze '" + name + "': no free space");
  std::vector<char> seen(free.size(), 0);
  std::queue<int> frontier;
  frontier.push(first);
  seen[first] = 1;
  int reached = 0;
  while (!frontier.empty()) {
    const int c = frontier.front();
    frontier.pop();
    ++reached;
    const int i = c % nx;
    const int j = c / nx;
    const int di[] = {1, -1, 0, 0};
    const int dj[] = {0, 0, 1, -1};
    for (int k = 0; k < 4; ++k) {
      const int a = i + di[k];
      const int b = j + dj[k];
      if (a < 0 || b < 0 || a >= nx || b >= ny) continue;
      const int n = b * nx + a;
      if (free[n] && !seen[n]) {
        seen[n] = 1;
        frontier.push(n);
      }
    }
  }
  if (reached != total) throw EnvironmentError("maze '" + name + "': free space is not connected");
}

MazeSpec make_maze(MazeKind kind) {
  MazeSpec spec;
  switch (kind) {
    case MazeKind::U:
      // Two 3-unit arms separated by a 1.5-unit wall, joined at the top.
      spec.name = "u";
      spec.width = 7.5;
      spec.height = 18.0;
      spec.walls = {Rect{3.0, 0.0, 1.5, 15.0}};
      spec.eval_start = Point(1.5, 1.5);
      spec.eval_goal = Point(6.0, 1.5);
      break;
    case MazeKind::S:
      // Three 3-unit corridors joined at alternating ends.
      spec.name = "s";
      spec.width = 12.0;
      spec.height = 12.0;
      spec.walls = {Rect{0.0, 3.0, 9.0, 1.5}, Rect{3.0, 7.5, 9.0, 1.5}};
      spec.eval_start = Point(1.5, 1.5);
      spec.eval_goal = Point(10.5, 10.5);
      break;
  }
  return spec;
}

MazeKind parse_maze_kind(const std::string& text) {
  std::string t = text;
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
  if (t == "u") return MazeKind::U;
  if (t == "s") return MazeKind::S;
  throw ConfigError("unknown maze kind '" + text + "' (expected u or s)");
}

Point sample_free_point(const MazeSpec& spec, Rng& rng) {
  std::uniform_real_distribution<double> ux(0.0, spec.width);
  std::uniform_real_distribution<double> uy(0.0, spec.height);
  for (int attempt = 0; attempt < kResetAttempts; ++attempt) {
    const double x = ux(rng);
    const double y = uy(rng);
    const Point p(x, y);
    if (spec.is_free(p)) return p;
  }
  throw EnvironmentError("maze '" + spec.name + "': rejection sampling failed " + std::to_string(kResetAttempts) +
                         " times");
}

EnvState reset(const MazeSpec& spec, Rng& rng) {
  EnvState s;
  s.position = sample_free_point(spec, rng);
  s.goal = sample_free_point(spec, rng);
  s.steps_elapsed = 0;
  return s;
}

namespace {

// True when the axis-aligned segment from `a` to `b` stays in free space, so
// thin walls cannot be skipped over.
bool segment_free(const MazeSpec& spec, const Point& a, const Point& b) {
  if (!spec.is_free(b)) return false;
  const double x0 = std::min(a.x(), b.x()), x1 = std::max(a.x(), b.x());
  const double y0 = std::min(a.y(), b.y()), y1 = std::max(a.y(), b.y());
  return std::none_of(spec.walls.begin(), spec.walls.end(), [&](const Rect& r) {
    return x0 <= r.x + r.w && x1 >= r.x && y0 <= r.y + r.h && y1 >= r.y;
  });
}

}  // namespace

StepResult step(const MazeSpec& spec, const EnvState& state, const Point& action) {
  const Point a = action.cwiseMax(-1.0).cwiseMin(1.0);
  const Point delta = a * spec.max_step;
  Point pos = state.position;
  const Point along_x(pos.x() + delta.x(), pos.y());
  if (segment_free(spec, pos, along_x)) pos = along_x;
  const Point along_y(pos.x(), pos.y() + delta.y());
  if (segment_free(spec, pos, along_y)) pos = along_y;

  StepResult r;
  r.next.position = pos;
  r.next.goal = state.goal;
  r.next.steps_elapsed = state.steps_elapsed + 1;
  r.success = success(pos, state.goal, spec);
  r.reward = r.success ? 0.0 : -1.0;
  r.done = r.success || r.next.steps_elapsed >= spec.episode_limit;
  return r;
}

bool success(const Point& position, const Point& goal, const MazeSpec& spec) {
  return (position - goal).norm() <= spec.success_radius;
}

PointMazeEnv::PointMazeEnv(MazeSpec spec) : spec_(std::move(spec)) { spec_.validate(); }

const EnvState& PointMazeEnv::reset(Rng& rng) {
  state_ = env::reset(spec_, rng);
  return state_;
}

const EnvState& PointMazeEnv::reset_to(const Point& start, const Point& goal) {
  if (!spec_.is_free(start) || !spec_.is_free(goal)) {
    throw UsageError("reset_to: start or goal is not in free space");
  }
  state_ = EnvState{start, goal, 0};
  return state_;
}

StepResult PointMazeEnv::step(const Eigen::VectorXd& action) {
  if (action.size() != 2) throw ConfigError("PointMazeEnv::step: action must be 2-dimensional");
  StepResult r = env::step(spec_, state_, Point(action[0], action[1]));
  state_ = r.next;
  return r;
}

}  // namespace ris::env
