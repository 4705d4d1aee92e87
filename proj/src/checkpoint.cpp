#include "ris/checkpoint.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "ris/errors.hpp"

namespace ris::autodiff {

namespace {

constexpr std::array<char, 4> kMagic = {'R', 'I', 'S', '1'};

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <typename T>
void put_le(std::ostream& out, T value) {
  std::array<unsigned char, sizeof(T)> bytes{};
  std::memcpy(bytes.data(), &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  out.write(reinterpret_cast<const char*>(bytes.data()), sizeof(T));
}

template <typename T>
bool get_le(std::istream& in, T& value) {
  std::array<unsigned char, sizeof(T)> bytes{};
  if (!in.read(reinterpret_cast<char*>(bytes.data()), sizeof(T))) return false;
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  std::memcpy(&value, bytes.data(), sizeof(T));
  return true;
}

[[noreturn]] void truncated(const std::string& what) {
  throw ConfigError("checkpoint: truncated while reading " + what);
}

}  // namespace

void write_checkpoint(std::ostream& out, const ParameterSet& params) {
  out.write(kMagic.data(), kMagic.size());
  put_le<std::uint32_t>(out, kCheckpointVersion);
  for (const auto& e : params) {
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(e.name.size()));
    out.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
    const auto& shape = e.param.value.shape();
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(shape.size()));
    for (std::size_t d : shape) put_le<std::uint32_t>(out, static_cast<std::uint32_t>(d));
    for (double x : e.param.value.data()) put_le<double>(out, x);
  }
  if (!out) throw ConfigError("checkpoint: write failed");
}

ParameterSet read_checkpoint(std::istream& in) {
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
    throw ConfigError("checkpoint: bad magic bytes (expected \"RIS1\")");
  }
  std::uint32_t version = 0;
  if (!get_le(in, version)) truncated("version");
  if (version != kCheckpointVersion) {
    throw ConfigError("checkpoint: unsupported format version " + std::to_string(version));
  }
  ParameterSet params;
  while (true) {
    std::uint32_t name_len = 0;
    if (!get_le(in, name_len)) {
      if (in.eof() && in.gcount() == 0) break;
      truncated("name length");
    }
    std::string name(name_len, '\0');
    if (!in.read(name.data(), name_len)) truncated("tensor name");
    std::uint32_t rank = 0;
    if (!get_le(in, rank)) truncated("rank of '" + name + "'");
    std::vector<std::size_t> shape(rank);
    for (auto& d : shape) {
      std::uint32_t dim = 0;
      if (!get_le(in, dim)) truncated("dims of '" + name + "'");
      d = dim;
    }
    Tensor t(shape);
    for (double& x : t.data()) {
      if (!get_le(in, x)) truncated("payload of '" + name + "'");
    }
    params.add(std::move(name), std::move(t));
  }
  return params;
}

void save_checkpoint(const std::filesystem::path& path, const ParameterSet& params) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("checkpoint: cannot open '" + path.string() + "' for writing");
  write_checkpoint(out, params);
}

ParameterSet load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("checkpoint: cannot open '" + path.string() + "'");
  return read_checkpoint(in);
}

}  // namespace ris::autodiff
