#ifndef RIS_METRICS_HPP_
#define RIS_METRICS_HPP_

#include <fstream>
#include <string>
#include <vector>

#include "ris/trainer.hpp"

namespace ris::metrics {

inline constexpr const char* kHeader =
    "env_steps,train_success,eval_success,mean_return,critic_loss,highlevel_loss,policy_kl,subgoal_error";

std::string format_row(const core::MetricsRow& row);
// Throws ConfigError on a wrong field count or a non-numeric field.
core::MetricsRow parse_row(const std::string& line);

// Appends rows to metrics.csv, writing the header first.
class MetricsWriter {
 public:
  explicit MetricsWriter(const std::string& path);
  void write(const core::MetricsRow& row);

 private:
  std::ofstream out_;
  long last_steps_ = -1;
};

struct MetricsRun {
  std::string path;
  std::vector<core::MetricsRow> rows;
};

// Throws ConfigError on a missing header, malformed rows, an empty file or
// non-increasing env_steps.
MetricsRun read_metrics(const std::string& path);

}  // namespace ris::metrics

#endif  // RIS_METRICS_HPP_
