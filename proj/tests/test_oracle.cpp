#include <doctest.h>

#include <cmath>
#include <random>

#include "ris/errors.hpp"
#include "ris/oracle.hpp"

using namespace ris::oracle;
using ris::env::MazeKind;
using ris::env::Rect;

namespace {

MazeSpec box(double w, double h) {
  MazeSpec m;
  m.width = w;
  m.height = h;
  return m;
}

double discounted_sum(int steps, double gamma) {
  double v = 0.0, g = 1.0;
  for (int k = 0; k < steps; ++k) {
    v -= g;
    g *= gamma;
  }
  return v;
}

}  // namespace

TEST_CASE("diagonal path in an empty 3x3 world") {
  const MazeSpec m = box(3, 3);
  const Grid grid(m, 1.0);
  const DistanceField f = build_distance_field(grid, grid.cell_of(Point(0.5, 0.5)));
  CHECK(f.at(grid.cell_of(Point(2.5, 2.5))) == doctest::Approx(2.0 * std::sqrt(2.0)).epsilon(1e-15));
  CHECK(f.at(f.source) == 0.0);
}

TEST_CASE("cells behind a full wall are unreachable") {
  MazeSpec m = box(5, 3);
  m.walls = {Rect{2, 0, 1, 3}};
  const Grid grid(m, 4.0);
  const DistanceField f = build_distance_field(grid, grid.cell_of(Point(0.5, 0.5)));
  CHECK(std::isinf(f.at(grid.cell_of(Point(4.5, 0.5)))));
  CHECK_THROWS_AS(bruteforce_midpoint(m, Point(0.5, 0.5), Point(4.5, 0.5), 4.0), ris::EnvironmentError);
  CHECK_THROWS_AS(build_distance_field(m, Point(2.5, 1.0), 4.0), ris::UsageError);
}

TEST_CASE("U-maze arm ends are farther apart than the straight line") {
  const MazeSpec u = ris::env::make_maze(MazeKind::U);
  const Point s(1.5, 1.5), g(6.0, 1.5);
  const Grid grid(u, kDefaultResolution);
  const DistanceField f = build_distance_field(grid, grid.cell_of(s));
  const double d = f.at(grid.cell_of(g));
  CHECK(d > (s - g).norm());
  // Up one arm, across and down the other: at least 2 * 13.5 + 4.5 units.
  CHECK(d > 27.0);
}

TEST_CASE("distance fields are symmetric and satisfy the triangle inequality") {
  const MazeSpec s = ris::env::make_maze(MazeKind::S);
  const Grid grid(s, kDefaultResolution);
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<std::size_t> pick(0, grid.free_cells().size() - 1);
  for (int trial = 0; trial < 20; ++trial) {
    const int a = grid.free_cells()[pick(rng)];
    const int b = grid.free_cells()[pick(rng)];
    const int c = grid.free_cells()[pick(rng)];
    const DistanceField fa = build_distance_field(grid, a);
    const DistanceField fb = build_distance_field(grid, b);
    CHECK(fa.at(b) == doctest::Approx(fb.at(a)).epsilon(1e-12));
    CHECK(fa.at(c) <= fa.at(b) + fb.at(c) + 1e-12);
  }
}

TEST_CASE("optimal value closed form") {
  CHECK(optimal_value(0, 0.99) == 0.0);
  CHECK(optimal_value(1, 0.99) == doctest::Approx(-1.0).epsilon(1e-14));
  CHECK(optimal_value(30, 0.99) == doctest::Approx(discounted_sum(30, 0.99)).epsilon(1e-12));
  CHECK(optimal_value(30, 0.99) == doctest::Approx(-26.0299).epsilon(1e-5));
  double prev = 1.0;
  for (int d = 0; d < 2000; ++d) {
    const double v = optimal_value(d, 0.99);
    CHECK(v < prev);
    CHECK(v <= 0.0);
    CHECK(v > -100.0);
    prev = v;
  }
  CHECK(steps_for_distance(0.0, 0.75) == 0);
  CHECK(steps_for_distance(0.75, 0.75) == 1);
  CHECK(steps_for_distance(0.76, 0.75) == 2);
}

TEST_CASE("corridor midpoint sits at the centre") {
  const MazeSpec m = box(12, 1.5);
  const Midpoint mid = bruteforce_midpoint(m, Point(0.125, 0.75), Point(11.875, 0.75), 4.0);
  for (const Point& p : mid.points) CHECK(std::abs(p.x() - 6.0) <= 0.25 + 1e-12);
  CHECK(std::abs(mid.representative.x() - 6.0) <= 0.25 + 1e-12);
}

TEST_CASE("s equal to g yields its own cell at cost 0") {
  const MazeSpec u = ris::env::make_maze(MazeKind::U);
  const Point s(1.3, 7.7);
  const Midpoint mid = bruteforce_midpoint(u, s, s, 4.0);
  const Grid grid(u, 4.0);
  CHECK(mid.cost == 0.0);
  CHECK(std::find(mid.cells.begin(), mid.cells.end(), grid.cell_of(s)) != mid.cells.end());
}

TEST_CASE("U-maze opposite-arm midpoints lie at the bend and beat every other cell") {
  const MazeSpec u = ris::env::make_maze(MazeKind::U);
  const Point s(1.5, 1.5), g(6.0, 1.5);
  const Midpoint mid = bruteforce_midpoint(u, s, g, 4.0);
  REQUIRE_FALSE(mid.cells.empty());
  const Grid grid(u, 4.0);
  const DistanceField ds = build_distance_field(grid, grid.cell_of(s));
  const DistanceField dg = build_distance_field(grid, grid.cell_of(g));
  for (int c : grid.free_cells()) CHECK(mid.cost <= std::max(ds.at(c), dg.at(c)) + 1e-12);
  bool balanced = false;
  for (int c : mid.cells) {
    CHECK(grid.center(c).y() > 12.0);
    balanced = balanced || std::abs(ds.at(c) - dg.at(c)) <= 1.0 / grid.resolution() + 1e-12;
  }
  CHECK(balanced);
}

TEST_CASE("some minimizer is balanced within one grid step on random pairs") {
  const MazeSpec s = ris::env::make_maze(MazeKind::S);
  const Grid grid(s, 4.0);
  for (const auto& [a, b] : sample_pairs(s, 15, 3)) {
    const DistanceField da = build_distance_field(grid, grid.cell_of(a));
    const DistanceField db = build_distance_field(grid, grid.cell_of(b));
    const Midpoint mid = midpoint_from_fields(grid, da, db);
    bool balanced = false;
    for (int c : mid.cells) balanced = balanced || std::abs(da.at(c) - db.at(c)) <= 1.0 / grid.resolution() + 1e-12;
    CHECK(balanced);
  }
}

TEST_CASE("distance table agrees with per-source fields") {
  const MazeSpec u = ris::env::make_maze(MazeKind::U);
  const DistanceTable table(u, 4.0);
  for (const auto& [a, b] : sample_pairs(u, 20, 5)) {
    const DistanceField fa = build_distance_field(u, a, 4.0);
    const Grid& grid = table.grid();
    CHECK(table.distance(a, b) == doctest::Approx(fa.at(grid.cell_of(b))).epsilon(1e-6));
    const Midpoint brute = bruteforce_midpoint(u, a, b, 4.0);
    const Midpoint fast = table.midpoint(a, b);
    CHECK(fast.cost == doctest::Approx(brute.cost).epsilon(1e-6));
    CHECK((fast.representative - brute.representative).norm() <= 0.5);
  }
}

TEST_CASE("subgoal error is zero for oracle predictions and nonnegative otherwise") {
  const MazeSpec u = ris::env::make_maze(MazeKind::U);
  const PairList pairs = sample_pairs(u, 30, 9);
  const SubgoalErrorProbe probe(u, pairs);
  std::size_t k = 0;
  const double exact = probe.error([&](const Point&, const Point&) { return probe.midpoints()[k++].representative; });
  CHECK(exact == 0.0);
  const double off = probe.error([](const Point& s, const Point&) { return s; });
  CHECK(off >= 0.0);
  CHECK(subgoal_error([](const Point& s, const Point&) { return s; }, pairs, u) == off);
}

TEST_CASE("uniform guessing matches an independent Monte-Carlo baseline") {
  const MazeSpec u = ris::env::make_maze(MazeKind::U);
  const SubgoalErrorProbe probe(u, sample_pairs(u, 100, 0));
  ris::Rng guess_rng(21);
  std::vector<double> runs;
  for (int r = 0; r < 30; ++r) {
    runs.push_back(probe.error([&](const Point&, const Point&) { return ris::env::sample_free_point(u, guess_rng); }));
  }
  double mean = 0.0;
  for (double v : runs) mean += v;
  mean /= runs.size();
  double var = 0.0;
  for (double v : runs) var += (v - mean) * (v - mean);
  const double se = std::sqrt(var / (runs.size() - 1) / runs.size());

  // Independent estimate: nearest-minimizer distance averaged over many draws.
  ris::Rng draw_rng(22);
  double total = 0.0;
  const int draws = 200;
  for (const Midpoint& m : probe.midpoints()) {
    for (int d = 0; d < draws; ++d) {
      const Point p = ris::env::sample_free_point(u, draw_rng);
      double nearest = kUnreachable;
      for (const Point& q : m.points) nearest = std::min(nearest, (q - p).norm());
      total += nearest;
    }
  }
  const double baseline = total / (draws * probe.midpoints().size());
  CHECK(std::abs(mean - baseline) < 3.0 * se + 0.05);
}
