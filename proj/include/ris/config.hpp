#ifndef RIS_CONFIG_HPP_
#define RIS_CONFIG_HPP_

#include <iosfwd>
#include <string>

#include "ris/trainer.hpp"

namespace ris::config {

// Plain-text run configuration:
//
//   [maze]
//   kind = u            # u | s | custom; loads the preset, later keys override
//   wall = 3 0 1.5 15   # x y w h, repeatable
//   [agent]
//   hidden_sizes = 256, 256
//   prior_mode = ris
//   [run]
//   seed = 7
//   out = runs/u
//
// '#' and ';' start comments. Unknown sections or keys are ConfigErrors
// carrying the line number.
struct RunConfig {
  core::TrainConfig train;
  std::string out_dir = "run";
};

RunConfig parse_config(std::istream& in, const std::string& source = "<config>");
RunConfig load_config(const std::string& path);

// Writes every field, so parsing the snapshot reproduces the run.
void write_config(std::ostream& out, const RunConfig& config);

}  // namespace ris::config

#endif  // RIS_CONFIG_HPP_
