#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "shiftcd/common.hpp"

namespace shiftcd {

// Named-array container: a JSON manifest of array names/shapes plus a raw
// little-endian float32 payload. One format for backbone weights, translator
// checkpoints and the persisted classifier.
struct NamedArrays {
  struct Arr {
    std::vector<std::int64_t> shape;
    std::vector<float> data;
  };

  std::string kind;
  std::string config_digest;
  std::uint64_t seed = 0;
  std::map<std::string, std::string> meta;
  std::map<std::string, Arr> arrays;

  const Arr& get(const std::string& name) const {
    auto it = arrays.find(name);
    if (it == arrays.end())
      throw FormatError("container missing array '" + name + "'");
    return it->second;
  }
};

void save_container(const NamedArrays& c, const std::string& path);
NamedArrays load_container(const std::string& path);
std::uint64_t file_checksum(const std::string& path);

}  // namespace shiftcd
