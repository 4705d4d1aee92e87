#ifndef RIS_CHECKPOINT_HPP_
#define RIS_CHECKPOINT_HPP_

#include <cstdint>
#include <filesystem>
#include <iosfwd>

#include "ris/tensor.hpp"

namespace ris::autodiff {

// Binary layout, all integers little-endian:
//   "RIS1" | version u32 | repeated { name_len u32 | name bytes | rank u32 |
//   dims u32 x rank | payload f64 x prod(dims) } until end of file.
inline constexpr std::uint32_t kCheckpointVersion = 1;

void write_checkpoint(std::ostream& out, const ParameterSet& params);
ParameterSet read_checkpoint(std::istream& in);

void save_checkpoint(const std::filesystem::path& path, const ParameterSet& params);
ParameterSet load_checkpoint(const std::filesystem::path& path);

}  // namespace ris::autodiff

#endif  // RIS_CHECKPOINT_HPP_
