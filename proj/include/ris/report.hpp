#ifndef RIS_REPORT_HPP_
#define RIS_REPORT_HPP_

#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "ris/metrics.hpp"

namespace ris::report {

struct SummaryRow {
  std::string run;
  long final_env_steps = 0;
  double final_eval_success = 0.0;
  double best_eval_success = 0.0;
  double final_subgoal_error = 0.0;
};

// Run label: the metrics file's parent directory, or the file name.
std::string run_label(const std::string& path);

std::vector<SummaryRow> summarize(const std::vector<metrics::MetricsRun>& runs);
void write_summary(std::ostream& out, const std::vector<SummaryRow>& rows);

using Series = std::function<double(const core::MetricsRow&)>;

// Line chart of `series` against env_steps, one polyline per run, each on
// its own step grid. Non-finite points are skipped.
std::string line_chart_svg(const std::vector<metrics::MetricsRun>& runs, const Series& series,
                           const std::string& title, const std::string& y_label);

}  // namespace ris::report

#endif  // RIS_REPORT_HPP_
