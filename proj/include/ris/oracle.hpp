#ifndef RIS_ORACLE_HPP_
#define RIS_ORACLE_HPP_

#include <functional>
#include <limits>
#include <utility>
#include <vector>

#include "ris/env.hpp"

namespace ris::oracle {

using env::MazeSpec;
using env::Point;

inline constexpr double kDefaultResolution = 4.0;  // cells per unit
inline constexpr double kUnreachable = std::numeric_limits<double>::infinity();

// Discretization of a maze into square cells; a cell is free when its centre is.
class Grid {
 public:
  Grid(const MazeSpec& spec, double resolution);

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  int num_cells() const { return nx_ * ny_; }
  double resolution() const { return resolution_; }
  bool is_free(int cell) const { return free_[static_cast<std::size_t>(cell)] != 0; }
  Point center(int cell) const;
  // Cell containing `p`, or the nearest free cell when that one is blocked.
  // Throws UsageError if `p` itself is not in free space.
  int cell_of(const Point& p) const;
  const std::vector<int>& free_cells() const { return free_cells_; }

 private:
  MazeSpec spec_;
  double resolution_;
  int nx_;
  int ny_;
  std::vector<char> free_;
  std::vector<int> free_cells_;
};

// Shortest-path distances (units) over 8-connected free cells: straight moves
// cost 1 cell, diagonal moves sqrt(2) and may not cut wall corners.
struct DistanceField {
  int source = -1;
  double resolution = kDefaultResolution;
  int nx = 0;
  int ny = 0;
  std::vector<double> distance;  // per cell, kUnreachable for walls/unreachable

  double at(int cell) const { return distance[static_cast<std::size_t>(cell)]; }
};

DistanceField build_distance_field(const Grid& grid, int source_cell);
DistanceField build_distance_field(const MazeSpec& spec, const Point& source, double resolution);

// Discounted value of reaching the goal after `steps` steps of -1 reward.
double optimal_value(int steps, double gamma);
// Agent steps for a path length: ceil(distance / max_step).
int steps_for_distance(double distance, double max_step);

struct Midpoint {
  std::vector<int> cells;     // all minimizers of max(d(s,c), d(c,g)) within 1e-9
  std::vector<Point> points;  // their centres
  double cost = 0.0;
  // Minimizer with the most balanced legs (lowest index on ties).
  Point representative = Point::Zero();
};

Midpoint midpoint_from_fields(const Grid& grid, const DistanceField& from_start, const DistanceField& from_goal);
// Throws EnvironmentError when s and g are disconnected.
Midpoint bruteforce_midpoint(const MazeSpec& spec, const Point& s, const Point& g, double resolution);

// All-pairs distances between free cells, for repeated midpoint queries.
class DistanceTable {
 public:
  DistanceTable(const MazeSpec& spec, double resolution);

  const Grid& grid() const { return grid_; }
  double distance(const Point& a, const Point& b) const;
  Midpoint midpoint(const Point& s, const Point& g) const;

 private:
  double between(int free_a, int free_b) const;

  Grid grid_;
  std::vector<int> free_index_;  // cell -> index among free cells, or -1
  std::vector<float> table_;
};

using SubgoalPredictor = std::function<Point(const Point& s, const Point& g)>;
using PairList = std::vector<std::pair<Point, Point>>;

// Uniform free-space (s, g) pairs from a dedicated seed.
PairList sample_pairs(const MazeSpec& spec, int count, std::uint64_t seed);

// Precomputed midpoint sets for a fixed list of pairs.
class SubgoalErrorProbe {
 public:
  SubgoalErrorProbe(const MazeSpec& spec, PairList pairs, double resolution = kDefaultResolution);

  // Mean Euclidean distance from each prediction to its nearest minimizer.
  double error(const SubgoalPredictor& predictor) const;
  const PairList& pairs() const { return pairs_; }
  const std::vector<Midpoint>& midpoints() const { return midpoints_; }

 private:
  PairList pairs_;
  std::vector<Midpoint> midpoints_;
};

double subgoal_error(const SubgoalPredictor& predictor, const PairList& pairs, const MazeSpec& spec,
                     double resolution = kDefaultResolution);

}  // namespace ris::oracle

#endif  // RIS_ORACLE_HPP_
