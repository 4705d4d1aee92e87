#include "ris/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

#include "ris/errors.hpp"

namespace ris::oracle {

Grid::Grid(const MazeSpec& spec, double resolution) : spec_(spec), resolution_(resolution) {
  if (!(resolution > 0.0)) throw ConfigError("grid resolution must be positive");
  nx_ = static_cast<int>(std::ceil(spec.width * resolution - 1e-9));
  ny_ = static_cast<int>(std::ceil(spec.height * resolution - 1e-9));
  free_.assign(static_cast<std::size_t>(nx_) * ny_, 0);
  for (int c = 0; c < num_cells(); ++c) {
    if (spec.is_free(center(c))) {
      free_[static_cast<std::size_t>(c)] = 1;
      free_cells_.push_back(c);
    }
  }
}

Point Grid::center(int cell) const {
  return Point(((cell % nx_) + 0.5) / resolution_, ((cell / nx_) + 0.5) / resolution_);
}

int Grid::cell_of(const Point& p) const {
  if (!spec_.is_free(p)) throw UsageError("point is not in free space");
  const int i = std::clamp(static_cast<int>(std::floor(p.x() * resolution_)), 0, nx_ - 1);
  const int j = std::clamp(static_cast<int>(std::floor(p.y() * resolution_)), 0, ny_ - 1);
  const int cell = j * nx_ + i;
  if (is_free(cell)) return cell;
  int best = -1;
  double best_d = kUnreachable;
  for (int c : free_cells_) {
    const double d = (center(c) - p).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  if (best < 0) throw UsageError("maze has no free cells");
  return best;
}

DistanceField build_distance_field(const Grid& grid, int source_cell) {
  if (source_cell < 0 || source_cell >= grid.num_cells() || !grid.is_free(source_cell)) {
    throw UsageError("distance field source is inside a wall");
  }
  DistanceField field;
  field.source = source_cell;
  field.resolution = grid.resolution();
  field.nx = grid.nx();
  field.ny = grid.ny();
  field.distance.assign(static_cast<std::size_t>(grid.num_cells()), kUnreachable);

  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> open;
  std::vector<double> cells(field.distance.size(), kUnreachable);
  cells[static_cast<std::size_t>(source_cell)] = 0.0;
  open.emplace(0.0, source_cell);
  const int nx = grid.nx();
  const int ny = grid.ny();
  auto free_at = [&](int i, int j) { return i >= 0 && j >= 0 && i < nx && j < ny && grid.is_free(j * nx + i); };
  while (!open.empty()) {
    auto [d, c] = open.top();
    open.pop();
    if (d > cells[static_cast<std::size_t>(c)]) continue;
    const int i = c % nx;
    const int j = c / nx;
    for (int di = -1; di <= 1; ++di) {
      for (int dj = -1; dj <= 1; ++dj) {
        if (di == 0 && dj == 0) continue;
        if (!free_at(i + di, j + dj)) continue;
        const bool diagonal = di != 0 && dj != 0;
        if (diagonal && (!free_at(i + di, j) || !free_at(i, j + dj))) continue;
        const double nd = d + (diagonal ? std::sqrt(2.0) : 1.0);
        const int n = (j + dj) * nx + (i + di);
        if (nd < cells[static_cast<std::size_t>(n)]) {
          cells[static_cast<std::size_t>(n)] = nd;
          open.emplace(nd, n);
        }
      }
    }
  }
  for (std::size_t k = 0; k < cells.size(); ++k) {
    if (std::isfinite(cells[k])) field.distance[k] = cells[k] / grid.resolution();
  }
  return field;
}

DistanceField build_distance_field(const MazeSpec& spec, const Point& source, double resolution) {
  Grid grid(spec, resolution);
  return build_distance_field(grid, grid.cell_of(source));
}

double optimal_value(int steps, double gamma) {
  if (steps < 0) throw UsageError("optimal_value: negative step count");
  return -(1.0 - std::pow(gamma, steps)) / (1.0 - gamma);
}

int steps_for_distance(double distance, double max_step) {
  return static_cast<int>(std::ceil(distance / max_step - 1e-12));
}

namespace {

// Selects minimizers of max(ds, dg) over free cells; `dist` yields the pair
// of legs for a free cell.
template <typename Legs>
Midpoint select_midpoint(const Grid& grid, Legs legs) {
  Midpoint m;
  double best = kUnreachable;
  for (int c : grid.free_cells()) {
    auto [ds, dg] = legs(c);
    best = std::min(best, std::max(ds, dg));
  }
  if (!std::isfinite(best)) throw EnvironmentError("start and goal are disconnected");
  double best_balance = kUnreachable;
  for (int c : grid.free_cells()) {
    auto [ds, dg] = legs(c);
    if (std::max(ds, dg) <= best + 1e-9) {
      m.cells.push_back(c);
      m.points.push_back(grid.center(c));
      const double balance = std::abs(ds - dg);
      if (balance < best_balance) {
        best_balance = balance;
        m.representative = grid.center(c);
      }
    }
  }
  m.cost = best;
  return m;
}

}  // namespace

Midpoint midpoint_from_fields(const Grid& grid, const DistanceField& from_start, const DistanceField& from_goal) {
  return select_midpoint(grid, [&](int c) { return std::pair{from_start.at(c), from_goal.at(c)}; });
}

Midpoint bruteforce_midpoint(const MazeSpec& spec, const Point& s, const Point& g, double resolution) {
  Grid grid(spec, resolution);
  const DistanceField ds = build_distance_field(grid, grid.cell_of(s));
  const DistanceField dg = build_distance_field(grid, grid.cell_of(g));
  return midpoint_from_fields(grid, ds, dg);
}

DistanceTable::DistanceTable(const MazeSpec& spec, double resolution) : grid_(spec, resolution) {
  const auto& free = grid_.free_cells();
  const std::size_t n = free.size();
  free_index_.assign(static_cast<std::size_t>(grid_.num_cells()), -1);
  for (std::size_t k = 0; k < n; ++k) free_index_[static_cast<std::size_t>(free[k])] = static_cast<int>(k);
  table_.assign(n * n, std::numeric_limits<float>::infinity());
  for (std::size_t a = 0; a < n; ++a) {
    const DistanceField f = build_distance_field(grid_, free[a]);
    for (std::size_t b = 0; b < n; ++b) table_[a * n + b] = static_cast<float>(f.at(free[b]));
  }
}

double DistanceTable::between(int free_a, int free_b) const {
  const std::size_t n = grid_.free_cells().size();
  return table_[static_cast<std::size_t>(free_a) * n + static_cast<std::size_t>(free_b)];
}

double DistanceTable::distance(const Point& a, const Point& b) const {
  const int ia = free_index_[static_cast<std::size_t>(grid_.cell_of(a))];
  const int ib = free_index_[static_cast<std::size_t>(grid_.cell_of(b))];
  return between(ia, ib);
}

Midpoint DistanceTable::midpoint(const Point& s, const Point& g) const {
  const int is = free_index_[static_cast<std::size_t>(grid_.cell_of(s))];
  const int ig = free_index_[static_cast<std::size_t>(grid_.cell_of(g))];
  return select_midpoint(grid_, [&](int c) {
    const int ic = free_index_[static_cast<std::size_t>(c)];
    return std::pair{between(is, ic), between(ic, ig)};
  });
}

PairList sample_pairs(const MazeSpec& spec, int count, std::uint64_t seed) {
  Rng rng = make_stream(seed, Stream::Probe);
  PairList pairs;
  for (int i = 0; i < count; ++i) {
    const Point s = env::sample_free_point(spec, rng);
    const Point g = env::sample_free_point(spec, rng);
    pairs.emplace_back(s, g);
  }
  return pairs;
}

SubgoalErrorProbe::SubgoalErrorProbe(const MazeSpec& spec, PairList pairs, double resolution)
    : pairs_(std::move(pairs)) {
  Grid grid(spec, resolution);
  for (const auto& [s, g] : pairs_) {
    const DistanceField ds = build_distance_field(grid, grid.cell_of(s));
    const DistanceField dg = build_distance_field(grid, grid.cell_of(g));
    midpoints_.push_back(midpoint_from_fields(grid, ds, dg));
  }
}

double SubgoalErrorProbe::error(const SubgoalPredictor& predictor) const {
  if (pairs_.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t k = 0; k < pairs_.size(); ++k) {
    const Point pred = predictor(pairs_[k].first, pairs_[k].second);
    double nearest = kUnreachable;
    for (const Point& p : midpoints_[k].points) nearest = std::min(nearest, (p - pred).norm());
    total += nearest;
  }
  return total / static_cast<double>(pairs_.size());
}

double subgoal_error(const SubgoalPredictor& predictor, const PairList& pairs, const MazeSpec& spec,
                     double resolution) {
  return SubgoalErrorProbe(spec, pairs, resolution).error(predictor);
}

}  // namespace ris::oracle
