#include "ris/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

#include "ris/errors.hpp"

namespace ris::config {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class Parser {
 public:
  Parser(std::string source, int line, std::string section, std::string key, std::string value)
      : where_(source + ":" + std::to_string(line) + ": " + section + "." + key), value_(std::move(value)) {}

  [[noreturn]] void fail(const std::string& msg) const { throw ConfigError(where_ + ": " + msg); }

  double number() const {
    double v = 0.0;
    const char* end = value_.data() + value_.size();
    auto [ptr, ec] = std::from_chars(value_.data(), end, v);
    if (ec != std::errc() || ptr != end) fail("expected a number, got '" + value_ + "'");
    return v;
  }

  long integer() const {
    // Accept 2e5-style literals as long as they are whole.
    const double v = number();
    if (v != static_cast<double>(static_cast<long>(v))) fail("expected an integer, got '" + value_ + "'");
    return static_cast<long>(v);
  }

  std::size_t positive_size() const {
    const long v = integer();
    if (v <= 0) fail("must be positive, got '" + value_ + "'");
    return static_cast<std::size_t>(v);
  }

  std::uint64_t unsigned_integer() const {
    std::uint64_t v = 0;
    const char* end = value_.data() + value_.size();
    auto [ptr, ec] = std::from_chars(value_.data(), end, v);
    if (ec != std::errc() || ptr != end) fail("expected a non-negative integer, got '" + value_ + "'");
    return v;
  }

  bool boolean() const {
    if (value_ == "true" || value_ == "1") return true;
    if (value_ == "false" || value_ == "0") return false;
    fail("expected true or false, got '" + value_ + "'");
  }

  std::vector<double> numbers(std::size_t count) const {
    std::istringstream ss(value_);
    std::vector<double> out;
    std::string tok;
    while (ss >> tok) {
      Parser p(*this);
      p.value_ = tok;
      out.push_back(p.number());
    }
    if (out.size() != count) fail("expected " + std::to_string(count) + " numbers, got '" + value_ + "'");
    return out;
  }

  std::vector<std::size_t> sizes() const {
    std::vector<std::size_t> out;
    std::stringstream ss(value_);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      Parser p(*this);
      p.value_ = trim(tok);
      const long v = p.integer();
      if (v <= 0) fail("layer sizes must be positive");
      out.push_back(static_cast<std::size_t>(v));
    }
    if (out.empty()) fail("expected a comma-separated list of layer sizes");
    return out;
  }

  const std::string& text() const { return value_; }

 private:
  std::string where_;
  std::string value_;
};

void apply_maze(env::MazeSpec& m, const std::string& key, const Parser& p) {
  if (key == "kind") {
    if (p.text() == "custom") {
      m = env::MazeSpec{};
    } else {
      try {
        m = env::make_maze(env::parse_maze_kind(p.text()));
      } catch (const std::exception& e) {
        p.fail(e.what());
      }
    }
  } else if (key == "name") {
    m.name = p.text();
  } else if (key == "width") {
    m.width = p.number();
  } else if (key == "height") {
    m.height = p.number();
  } else if (key == "wall") {
    const auto v = p.numbers(4);
    m.walls.push_back(env::Rect{v[0], v[1], v[2], v[3]});
  } else if (key == "clear_walls") {
    if (p.boolean()) m.walls.clear();
  } else if (key == "success_radius") {
    m.success_radius = p.number();
  } else if (key == "max_step") {
    m.max_step = p.number();
  } else if (key == "episode_limit") {
    m.episode_limit = static_cast<int>(p.integer());
  } else if (key == "eval_start") {
    const auto v = p.numbers(2);
    m.eval_start = env::Point(v[0], v[1]);
  } else if (key == "eval_goal") {
    const auto v = p.numbers(2);
    m.eval_goal = env::Point(v[0], v[1]);
  } else {
    p.fail("unknown key");
  }
}

void apply_agent(core::RisHyperparams& hp, const std::string& key, const Parser& p) {
  if (key == "hidden_sizes") {
    hp.hidden_sizes = p.sizes();
  } else if (key == "batch_size") {
    hp.batch_size = p.positive_size();
  } else if (key == "gamma") {
    hp.gamma = p.number();
  } else if (key == "tau") {
    hp.tau = p.number();
  } else if (key == "alpha") {
    hp.alpha = p.number();
  } else if (key == "lambda") {
    hp.lambda = p.number();
  } else if (key == "prior_epsilon") {
    hp.prior_epsilon = p.number();
  } else if (key == "lr_critic") {
    hp.lr_critic = p.number();
  } else if (key == "lr_policy") {
    hp.lr_policy = p.number();
  } else if (key == "lr_highlevel") {
    hp.lr_highlevel = p.number();
  } else if (key == "prior_samples") {
    hp.prior_samples = static_cast<int>(p.integer());
  } else if (key == "kl_samples") {
    hp.kl_samples = static_cast<int>(p.integer());
  } else if (key == "baseline_samples") {
    hp.baseline_samples = static_cast<int>(p.integer());
  } else if (key == "value_clip_min") {
    hp.value_clip.low = p.number();
  } else if (key == "value_clip_max") {
    hp.value_clip.high = p.number();
  } else if (key == "oracle_scale") {
    hp.oracle_scale = p.number();
  } else if (key == "prior_mode") {
    try {
      core::parse_prior_mode(p.text(), hp.prior_mode, hp.implicit_regularization);
    } catch (const std::exception& e) {
      p.fail(e.what());
    }
  } else {
    p.fail("unknown key");
  }
}

void apply_run(RunConfig& rc, const std::string& key, const Parser& p) {
  core::TrainConfig& t = rc.train;
  if (key == "seed") {
    t.seed = p.unsigned_integer();
  } else if (key == "total_env_steps") {
    t.total_env_steps = p.integer();
  } else if (key == "warmup_steps") {
    t.warmup_steps = p.integer();
  } else if (key == "eval_every") {
    t.eval_every = p.integer();
  } else if (key == "eval_episodes") {
    t.eval_episodes = static_cast<int>(p.integer());
  } else if (key == "eval_hardest") {
    t.eval_hardest = p.boolean();
  } else if (key == "replay_capacity") {
    t.replay_capacity = p.positive_size();
  } else if (key == "subgoal_pairs") {
    t.subgoal_pairs = static_cast<int>(p.integer());
  } else if (key == "probe_seed") {
    t.probe_seed = p.unsigned_integer();
  } else if (key == "checkpoint_every") {
    t.checkpoint_every = p.integer();
  } else if (key == "out") {
    rc.out_dir = p.text();
  } else {
    p.fail("unknown key");
  }
}

}  // namespace

RunConfig parse_config(std::istream& in, const std::string& source) {
  RunConfig rc;
  std::string section;
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto comment = raw.find_first_of("#;");
    const std::string text = trim(comment == std::string::npos ? raw : raw.substr(0, comment));
    if (text.empty()) continue;
    if (text.front() == '[') {
      if (text.back() != ']') throw ConfigError(source + ":" + std::to_string(line) + ": malformed section header");
      section = trim(text.substr(1, text.size() - 2));
      if (section != "maze" && section != "agent" && section != "run") {
        throw ConfigError(source + ":" + std::to_string(line) + ": unknown section [" + section + "]");
      }
      continue;
    }
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw ConfigError(source + ":" + std::to_string(line) + ": expected key = value");
    if (section.empty()) throw ConfigError(source + ":" + std::to_string(line) + ": key outside a section");
    const std::string key = trim(text.substr(0, eq));
    const Parser p(source, line, section, key, trim(text.substr(eq + 1)));
    if (section == "maze") {
      apply_maze(rc.train.maze, key, p);
    } else if (section == "agent") {
      apply_agent(rc.train.hp, key, p);
    } else {
      apply_run(rc, key, p);
    }
  }
  return rc;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config '" + path + "'");
  return parse_config(in, path);
}

void write_config(std::ostream& out, const RunConfig& rc) {
  const env::MazeSpec& m = rc.train.maze;
  const core::RisHyperparams& hp = rc.train.hp;
  const core::TrainConfig& t = rc.train;
  out << "[maze]\n";
  out << "kind = custom\n";
  out << "name = " << m.name << "\n";
  out << "width = " << fmt(m.width) << "\n";
  out << "height = " << fmt(m.height) << "\n";
  for (const env::Rect& w : m.walls) {
    out << "wall = " << fmt(w.x) << " " << fmt(w.y) << " " << fmt(w.w) << " " << fmt(w.h) << "\n";
  }
  out << "success_radius = " << fmt(m.success_radius) << "\n";
  out << "max_step = " << fmt(m.max_step) << "\n";
  out << "episode_limit = " << m.episode_limit << "\n";
  if (m.eval_start) out << "eval_start = " << fmt(m.eval_start->x()) << " " << fmt(m.eval_start->y()) << "\n";
  if (m.eval_goal) out << "eval_goal = " << fmt(m.eval_goal->x()) << " " << fmt(m.eval_goal->y()) << "\n";

  out << "\n[agent]\n";
  out << "hidden_sizes = ";
  for (std::size_t i = 0; i < hp.hidden_sizes.size(); ++i) out << (i ? ", " : "") << hp.hidden_sizes[i];
  out << "\n";
  out << "batch_size = " << hp.batch_size << "\n";
  out << "gamma = " << fmt(hp.gamma) << "\n";
  out << "tau = " << fmt(hp.tau) << "\n";
  out << "alpha = " << fmt(hp.alpha) << "\n";
  out << "lambda = " << fmt(hp.lambda) << "\n";
  out << "prior_epsilon = " << fmt(hp.prior_epsilon) << "\n";
  out << "lr_critic = " << fmt(hp.lr_critic) << "\n";
  out << "lr_policy = " << fmt(hp.lr_policy) << "\n";
  out << "lr_highlevel = " << fmt(hp.lr_highlevel) << "\n";
  out << "prior_samples = " << hp.prior_samples << "\n";
  out << "kl_samples = " << hp.kl_samples << "\n";
  out << "baseline_samples = " << hp.baseline_samples << "\n";
  out << "value_clip_min = " << fmt(hp.value_clip.low) << "\n";
  out << "value_clip_max = " << fmt(hp.value_clip.high) << "\n";
  out << "oracle_scale = " << fmt(hp.oracle_scale) << "\n";
  out << "prior_mode = " << core::prior_mode_name(hp.prior_mode, hp.implicit_regularization) << "\n";

  out << "\n[run]\n";
  out << "seed = " << t.seed << "\n";
  out << "total_env_steps = " << t.total_env_steps << "\n";
  out << "warmup_steps = " << t.warmup_steps << "\n";
  out << "eval_every = " << t.eval_every << "\n";
  out << "eval_episodes = " << t.eval_episodes << "\n";
  out << "eval_hardest = " << (t.eval_hardest ? "true" : "false") << "\n";
  out << "replay_capacity = " << t.replay_capacity << "\n";
  out << "subgoal_pairs = " << t.subgoal_pairs << "\n";
  out << "probe_seed = " << t.probe_seed << "\n";
  out << "checkpoint_every = " << t.checkpoint_every << "\n";
  out << "out = " << rc.out_dir << "\n";
}

}  // namespace ris::config
