#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "ris/checkpoint.hpp"
#include "ris/config.hpp"
#include "ris/errors.hpp"
#include "ris/metrics.hpp"
#include "ris/report.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string out;
  std::string err;
};

fs::path scratch() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / ("ris_cli_test_" + std::to_string(::getpid()));
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Result run(const std::string& args) {
  const char* bin = std::getenv("RIS_CLI");
  REQUIRE_MESSAGE(bin != nullptr, "RIS_CLI must point at the ris_cli binary");
  static int counter = 0;
  const fs::path out = scratch() / ("stdout_" + std::to_string(counter));
  const fs::path err = scratch() / ("stderr_" + std::to_string(counter++));
  const std::string cmd = std::string(bin) + " " + args + " >" + out.string() + " 2>" + err.string();
  const int status = std::system(cmd.c_str());
  Result r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

fs::path tiny_config() {
  const fs::path p = scratch() / "tiny.ini";
  std::ofstream(p) << "[maze]\nkind = u\n"
                      "[agent]\nhidden_sizes = 8, 8\nbatch_size = 8\n"
                      "[run]\ntotal_env_steps = 300\nwarmup_steps = 100\neval_every = 150\n"
                      "eval_episodes = 2\nsubgoal_pairs = 4\ncheckpoint_every = 150\n";
  return p;
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

std::string write_metrics(const std::string& name, const std::string& body) {
  const fs::path dir = scratch() / name;
  fs::create_directories(dir);
  const fs::path p = dir / "metrics.csv";
  std::ofstream(p, std::ios::binary) << body;
  return p.string();
}

}  // namespace

TEST_CASE("train is deterministic and writes every artifact") {
  const fs::path cfg = tiny_config();
  const fs::path a = scratch() / "a" / "nested", b = scratch() / "b";
  const Result ra = run("train --config " + cfg.string() + " --seed 7 --out " + a.string());
  REQUIRE_MESSAGE(ra.code == 0, ra.err);
  const Result rb = run("train --config " + cfg.string() + " --seed 7 --out " + b.string());
  REQUIRE(rb.code == 0);
  CHECK(fs::is_directory(a));  // missing output directory is created
  const std::string ma = slurp(a / "metrics.csv");
  CHECK(ma == slurp(b / "metrics.csv"));
  CHECK(slurp(a / "final.ris") == slurp(b / "final.ris"));
  CHECK(fs::exists(a / "config.ini"));
  CHECK(fs::exists(a / "checkpoints" / "step_150.ris"));
  CHECK_FALSE(fs::exists(a / "checkpoints" / "step_300.ris"));

  const auto rows = lines(ma);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0] == ris::metrics::kHeader);
  CHECK(rows[1].rfind("150,", 0) == 0);
  CHECK(rows[2].rfind("300,", 0) == 0);

  const Result other = run("train --config " + cfg.string() + " --seed 8 --out " + (scratch() / "c").string());
  REQUIRE(other.code == 0);
  CHECK(slurp(scratch() / "c" / "final.ris") != slurp(a / "final.ris"));
}

TEST_CASE("config snapshot reflects overrides and reproduces the run") {
  const fs::path cfg = tiny_config();
  const fs::path out = scratch() / "uniform";
  const Result r = run("train --config " + cfg.string() + " --prior-mode uniform --seed 3 --out " + out.string());
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const std::string snap = slurp(out / "config.ini");
  CHECK(snap.find("prior_mode = uniform") != std::string::npos);
  CHECK(snap.find("seed = 3") != std::string::npos);

  const fs::path again = scratch() / "uniform_again";
  const Result r2 = run("train --config " + (out / "config.ini").string() + " --out " + again.string());
  REQUIRE_MESSAGE(r2.code == 0, r2.err);
  CHECK(slurp(out / "metrics.csv") == slurp(again / "metrics.csv"));
  CHECK(slurp(out / "final.ris") == slurp(again / "final.ris"));
}

TEST_CASE("invalid configuration exits nonzero naming the field") {
  const fs::path bad = scratch() / "bad.ini";
  std::ofstream(bad) << "[agent]\ngamma = 1.5\n";
  const Result r = run("train --config " + bad.string() + " --out " + (scratch() / "never").string());
  CHECK(r.code == 2);
  CHECK(r.err.find("gamma") != std::string::npos);

  const fs::path unknown = scratch() / "unknown.ini";
  std::ofstream(unknown) << "[run]\n\nbogus = 1\n";
  const Result r2 = run("train --config " + unknown.string());
  CHECK(r2.code == 2);
  CHECK(r2.err.find(":3") != std::string::npos);
  CHECK(r2.err.find("bogus") != std::string::npos);

  const Result r3 = run("train --config " + tiny_config().string() + " --prior-mode sac");
  CHECK(r3.code == 2);
}

TEST_CASE("eval prints the success rate and a schema row") {
  const fs::path cfg = tiny_config();
  const fs::path out = scratch() / "for_eval";
  REQUIRE(run("train --config " + cfg.string() + " --out " + out.string()).code == 0);
  const fs::path csv = scratch() / "eval.csv";
  const std::string ck = (out / "checkpoints" / "step_150.ris").string();
  const Result r = run("eval --checkpoint " + ck + " --maze u --episodes 5 --hardest --csv " + csv.string());
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto out_lines = lines(r.out);
  REQUIRE(out_lines.size() == 3);
  CHECK(out_lines[0].rfind("success_rate ", 0) == 0);
  // An untrained policy cannot traverse the U-maze.
  CHECK(std::stod(out_lines[0].substr(13)) <= 0.2);
  CHECK(out_lines[1] == "checkpoint,maze,episodes,success_rate,mean_return");
  CHECK(std::count(out_lines[2].begin(), out_lines[2].end(), ',') == 4);
  CHECK(out_lines[2].rfind(ck + ",u,5,", 0) == 0);

  REQUIRE(run("eval --checkpoint " + ck + " --episodes 2 --csv " + csv.string()).code == 0);
  const auto csv_lines = lines(slurp(csv));
  REQUIRE(csv_lines.size() == 3);
  CHECK(csv_lines[0] == "checkpoint,maze,episodes,success_rate,mean_return");

  // Same checkpoint, same seed: same numbers.
  const Result again = run("eval --checkpoint " + ck + " --maze u --episodes 5 --hardest");
  CHECK(lines(again.out)[2] == out_lines[2]);

  const Result zero = run("eval --checkpoint " + ck + " --episodes 0");
  CHECK(zero.code == 2);
  CHECK(zero.err.find("episodes") != std::string::npos);
}

TEST_CASE("eval rejects checkpoints whose shapes do not fit the maze") {
  ris::autodiff::ParameterSet p;
  p.add("policy/layer0.weight", ris::autodiff::Tensor({6, 8}));
  p.add("policy/layer0.bias", ris::autodiff::Tensor({8}));
  p.add("policy/layer1.weight", ris::autodiff::Tensor({8, 4}));
  p.add("policy/layer1.bias", ris::autodiff::Tensor({4}));
  const fs::path ck = scratch() / "wide.ris";
  ris::autodiff::save_checkpoint(ck, p);
  const Result r = run("eval --checkpoint " + ck.string() + " --episodes 1");
  CHECK(r.code == 2);
  CHECK(r.err.find("policy/layer0.weight") != std::string::npos);
  const Result missing = run("eval --checkpoint " + (scratch() / "nope.ris").string() + " --episodes 1");
  CHECK(missing.code != 0);
}

TEST_CASE("report summarizes runs and skips unreadable files") {
  const std::string header = std::string(ris::metrics::kHeader) + "\n";
  const std::string one = write_metrics("run_one", header + "100,0.1,0,-100,nan,nan,nan,4\n200,0.5,0.5,-60,0.1,2,1,3\n");
  const std::string two = write_metrics("run_two", header + "150,0.2,0.25,-80,0.2,2,1,3.5\n");
  const std::string empty = write_metrics("run_empty", "");
  const std::string broken = write_metrics("run_broken", header + "100,abc\n");

  const fs::path single = scratch() / "report_single";
  const Result r1 = run("report " + one + " --out " + single.string());
  REQUIRE_MESSAGE(r1.code == 0, r1.err);
  CHECK(fs::exists(single / "eval_success.svg"));
  CHECK(fs::exists(single / "subgoal_error.svg"));
  CHECK(std::count(r1.out.begin(), r1.out.end(), '\n') == 2);  // header + one row
  CHECK(r1.out.find("run_one") != std::string::npos);

  const fs::path multi = scratch() / "report_multi";
  const Result r2 = run("report " + one + " " + empty + " " + two + " " + broken + " --out " + multi.string());
  CHECK(r2.code == 0);
  CHECK(r2.err.find("run_empty") != std::string::npos);
  CHECK(r2.err.find("run_broken") != std::string::npos);
  const std::string svg = slurp(multi / "eval_success.svg");
  std::size_t polylines = 0;
  for (std::size_t pos = svg.find("<polyline"); pos != std::string::npos; pos = svg.find("<polyline", pos + 1)) {
    ++polylines;
  }
  CHECK(polylines == 2);
  CHECK(svg.find("run_two") != std::string::npos);

  const Result r3 = run("report " + empty + " " + broken + " --out " + (scratch() / "report_none").string());
  CHECK(r3.code == 1);
}

TEST_CASE("metrics rows round-trip exactly, including NaN") {
  ris::core::MetricsRow row{2500, 1.0 / 3.0, 0.25, -42.125, std::nan(""), 0.1, 2.0 / 7.0, 4.72};
  const ris::core::MetricsRow back = ris::metrics::parse_row(ris::metrics::format_row(row));
  CHECK(back.env_steps == 2500);
  CHECK(back.train_success == row.train_success);
  CHECK(std::isnan(back.critic_loss));
  CHECK(back.policy_kl == row.policy_kl);
  CHECK_THROWS_AS(ris::metrics::parse_row("1,2,3"), ris::ConfigError);

  const std::string path = (scratch() / "w.csv").string();
  {
    ris::metrics::MetricsWriter w(path);
    w.write(row);
    row.env_steps = 2500;
    CHECK_THROWS_AS(w.write(row), ris::UsageError);
  }
  const auto lines_out = lines(slurp(path));
  CHECK(lines_out.size() == 2);
  const std::string dec = write_metrics("decreasing", std::string(ris::metrics::kHeader) +
                                                          "\n200,0,0,0,0,0,0,0\n100,0,0,0,0,0,0,0\n");
  CHECK_THROWS_AS(ris::metrics::read_metrics(dec), ris::ConfigError);
}

TEST_CASE("config parsing: presets, custom walls, errors and snapshots") {
  std::istringstream in(
      "# comment\n[maze]\nkind = custom\nname = box\nwidth = 6\nheight = 4\nwall = 2 0 1 3 ; trailing\n"
      "eval_start = 1 1\neval_goal = 5 1\n[agent]\nhidden_sizes = 32,16\nprior_mode = noreg\n"
      "[run]\nseed = 11\nout = somewhere\n");
  const ris::config::RunConfig rc = ris::config::parse_config(in, "t.ini");
  CHECK(rc.train.maze.width == 6.0);
  REQUIRE(rc.train.maze.walls.size() == 1);
  CHECK(rc.train.maze.walls[0].h == 3.0);
  CHECK(rc.train.hp.hidden_sizes == std::vector<std::size_t>{32, 16});
  CHECK_FALSE(rc.train.hp.implicit_regularization);
  CHECK(rc.train.seed == 11);
  CHECK(rc.out_dir == "somewhere");

  std::ostringstream snap;
  ris::config::write_config(snap, rc);
  std::istringstream back(snap.str());
  const ris::config::RunConfig rc2 = ris::config::parse_config(back, "snap");
  std::ostringstream snap2;
  ris::config::write_config(snap2, rc2);
  CHECK(snap.str() == snap2.str());

  std::istringstream bad("[agent]\nbatch_size = -3\n");
  CHECK_THROWS_WITH_AS(ris::config::parse_config(bad, "b.ini"), doctest::Contains("b.ini:2"), ris::ConfigError);
  std::istringstream section("[nope]\n");
  CHECK_THROWS_AS(ris::config::parse_config(section), ris::ConfigError);
  std::istringstream orphan("seed = 3\n");
  CHECK_THROWS_AS(ris::config::parse_config(orphan), ris::ConfigError);
}
