#include "ris/metrics.hpp"

#include <cstdio>
#include <sstream>

#include "ris/errors.hpp"

namespace ris::metrics {

namespace {

double field(const std::string& text, const std::string& line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("non-numeric field '" + text + "' in row '" + line + "'");
  }
}

}  // namespace

std::string format_row(const core::MetricsRow& r) {
  char buf[512];
  std::snprintf(buf, sizeof buf, "%ld,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g", r.env_steps, r.train_success,
                r.eval_success, r.mean_return, r.critic_loss, r.highlevel_loss, r.policy_kl, r.subgoal_error);
  return buf;
}

core::MetricsRow parse_row(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string f;
  while (std::getline(ss, f, ',')) fields.push_back(f);
  if (fields.size() != 8) throw ConfigError("expected 8 fields in row '" + line + "'");
  core::MetricsRow r;
  const double steps = field(fields[0], line);
  r.env_steps = static_cast<long>(steps);
  if (static_cast<double>(r.env_steps) != steps) throw ConfigError("env_steps is not an integer in '" + line + "'");
  r.train_success = field(fields[1], line);
  r.eval_success = field(fields[2], line);
  r.mean_return = field(fields[3], line);
  r.critic_loss = field(fields[4], line);
  r.highlevel_loss = field(fields[5], line);
  r.policy_kl = field(fields[6], line);
  r.subgoal_error = field(fields[7], line);
  return r;
}

MetricsWriter::MetricsWriter(const std::string& path) : out_(path, std::ios::binary | std::ios::trunc) {
  if (!out_) throw ConfigError("cannot write metrics file '" + path + "'");
  out_ << kHeader << '\n';
  out_.flush();
}

void MetricsWriter::write(const core::MetricsRow& row) {
  if (row.env_steps <= last_steps_) throw UsageError("metrics rows must have increasing env_steps");
  last_steps_ = row.env_steps;
  out_ << format_row(row) << '\n';
  out_.flush();
}

MetricsRun read_metrics(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read '" + path + "'");
  MetricsRun run;
  run.path = path;
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("'" + path + "' is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kHeader) throw ConfigError("'" + path + "' has an unexpected header");
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    core::MetricsRow row = parse_row(line);
    if (!run.rows.empty() && row.env_steps <= run.rows.back().env_steps) {
      throw ConfigError("'" + path + "': env_steps not strictly increasing");
    }
    run.rows.push_back(row);
  }
  if (run.rows.empty()) throw ConfigError("'" + path + "' has no rows");
  return run;
}

}  // namespace ris::metrics
