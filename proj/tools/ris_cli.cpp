#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ris/allocator.hpp"
#include "ris/checkpoint.hpp"
#include "ris/config.hpp"
#include "ris/errors.hpp"
#include "ris/metrics.hpp"
#include "ris/report.hpp"
#include "ris/trainer.hpp"

namespace fs = std::filesystem;

namespace {

struct TrainArgs {
  std::string config;
  std::vector<std::string> sets;
  std::string seed;
  std::string prior_mode;
  std::string maze;
  std::string out;
};

struct EvalArgs {
  std::string checkpoint;
  std::string config;
  std::string maze = "u";
  int episodes = 50;
  bool hardest = false;
  std::uint64_t seed = 0;
  std::string csv;
};

struct ReportArgs {
  std::vector<std::string> inputs;
  std::string out = ".";
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ris::ConfigError("cannot read config '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Overrides become trailing config lines, so they go through the same
// validation as the file itself.
std::string override_line(const std::string& assignment) {
  const auto eq = assignment.find('=');
  const auto dot = assignment.find('.');
  if (eq == std::string::npos || dot == std::string::npos || dot > eq) {
    throw ris::UsageError("--set expects section.key=value, got '" + assignment + "'");
  }
  return "[" + assignment.substr(0, dot) + "]\n" + assignment.substr(dot + 1, eq - dot - 1) + " = " +
         assignment.substr(eq + 1) + "\n";
}

int cmd_train(const TrainArgs& args) {
  std::string text = args.config.empty() ? std::string() : read_file(args.config);
  text += "\n";
  if (!args.maze.empty()) text += "[maze]\nkind = " + args.maze + "\n";
  for (const auto& s : args.sets) text += override_line(s);
  if (!args.prior_mode.empty()) text += "[agent]\nprior_mode = " + args.prior_mode + "\n";
  if (!args.seed.empty()) text += "[run]\nseed = " + args.seed + "\n";
  if (!args.out.empty()) text += "[run]\nout = " + args.out + "\n";
  std::istringstream in(text);
  ris::config::RunConfig rc = ris::config::parse_config(in, args.config.empty() ? "<flags>" : args.config);
  rc.train.validate();

  const fs::path out(rc.out_dir);
  fs::create_directories(out / "checkpoints");
  {
    std::ofstream snap(out / "config.ini", std::ios::binary);
    ris::config::write_config(snap, rc);
  }
  ris::metrics::MetricsWriter writer((out / "metrics.csv").string());
  ris::core::Trainer trainer(rc.train);
  trainer.run(
      [&](const ris::core::MetricsRow& row) {
        writer.write(row);
        std::cout << "step " << row.env_steps << "  eval_success " << row.eval_success << "  subgoal_error "
                  << row.subgoal_error << std::endl;
      },
      [&](long steps, const ris::autodiff::ParameterSet& params) {
        ris::autodiff::save_checkpoint((out / "checkpoints" / ("step_" + std::to_string(steps) + ".ris")).string(),
                                       params);
      });
  ris::autodiff::save_checkpoint((out / "final.ris").string(), trainer.agent().checkpoint());
  return 0;
}

int cmd_eval(const EvalArgs& args) {
  if (args.episodes < 1) throw ris::UsageError("--episodes must be positive");
  ris::env::MazeSpec maze;
  if (!args.config.empty()) {
    maze = ris::config::load_config(args.config).train.maze;
  } else {
    maze = ris::env::make_maze(ris::env::parse_maze_kind(args.maze));
  }
  const ris::autodiff::ParameterSet params = ris::autodiff::load_checkpoint(args.checkpoint);
  const ris::core::RisAgent agent =
      ris::core::RisAgent::from_checkpoint(params, maze, ris::core::RisHyperparams{}, args.seed);
  const ris::core::EvalResult r =
      ris::core::evaluate(agent, maze, args.episodes, args.hardest, ris::core::eval_seed(args.seed));

  char row[1024];
  std::snprintf(row, sizeof row, "%s,%s,%d,%.17g,%.17g", args.checkpoint.c_str(), maze.name.c_str(), r.episodes,
                r.success_rate, r.mean_return);
  std::cout << "success_rate " << r.success_rate << "\n";
  std::cout << "checkpoint,maze,episodes,success_rate,mean_return\n" << row << "\n";
  if (!args.csv.empty()) {
    const bool fresh = !fs::exists(args.csv) || fs::file_size(args.csv) == 0;
    std::ofstream csv(args.csv, std::ios::binary | std::ios::app);
    if (!csv) throw ris::ConfigError("cannot write '" + args.csv + "'");
    if (fresh) csv << "checkpoint,maze,episodes,success_rate,mean_return\n";
    csv << row << "\n";
  }
  return 0;
}

int cmd_report(const ReportArgs& args) {
  std::vector<ris::metrics::MetricsRun> runs;
  for (const auto& path : args.inputs) {
    try {
      runs.push_back(ris::metrics::read_metrics(path));
    } catch (const std::exception& e) {
      std::cerr << "warning: skipping " << path << ": " << e.what() << "\n";
    }
  }
  if (runs.empty()) {
    std::cerr << "error: no readable metrics files\n";
    return 1;
  }
  const fs::path out(args.out);
  fs::create_directories(out);
  const auto summary = ris::report::summarize(runs);
  ris::report::write_summary(std::cout, summary);
  {
    std::ofstream f(out / "summary.txt", std::ios::binary);
    ris::report::write_summary(f, summary);
  }
  std::ofstream(out / "eval_success.svg", std::ios::binary) << ris::report::line_chart_svg(
      runs, [](const ris::core::MetricsRow& r) { return r.eval_success; }, "Evaluation success", "eval_success");
  std::ofstream(out / "subgoal_error.svg", std::ios::binary) << ris::report::line_chart_svg(
      runs, [](const ris::core::MetricsRow& r) { return r.subgoal_error; }, "Subgoal error", "subgoal_error");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  ris::tune_allocator();
  CLI::App app{"Goal-conditioned navigation with imagined subgoals"};
  app.require_subcommand(1);

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Train an agent");
  train_cmd->add_option("--config", train.config, "Config file")->check(CLI::ExistingFile);
  train_cmd->add_option("--seed", train.seed, "Run seed");
  train_cmd->add_option("--prior-mode", train.prior_mode, "ris|uniform|ema|oracle|noreg");
  train_cmd->add_option("--maze", train.maze, "u|s (replaces the configured maze)");
  train_cmd->add_option("--out", train.out, "Output directory");
  train_cmd->add_option("--set", train.sets, "Override, e.g. run.total_env_steps=5000");

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint");
  eval_cmd->add_option("--checkpoint", eval.checkpoint, "Checkpoint file")->required();
  eval_cmd->add_option("--config", eval.config, "Take the maze from this config");
  eval_cmd->add_option("--maze", eval.maze, "u|s");
  eval_cmd->add_option("--episodes", eval.episodes, "Episodes");
  eval_cmd->add_flag("--hardest", eval.hardest, "Pinned start/goal configuration");
  eval_cmd->add_option("--seed", eval.seed, "Evaluation seed");
  eval_cmd->add_option("--csv", eval.csv, "Append the result row to this CSV");

  ReportArgs report;
  auto* report_cmd = app.add_subcommand("report", "Summarize metrics files");
  report_cmd->add_option("metrics", report.inputs, "metrics.csv files")->required();
  report_cmd->add_option("--out", report.out, "Output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train_cmd) return cmd_train(train);
    if (*eval_cmd) return cmd_eval(eval);
    return cmd_report(report);
  } catch (const ris::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const ris::UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
