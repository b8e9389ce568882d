#include "shiftcd/container.hpp"

#include <json.hpp>

#include <cstring>
#include <filesystem>
#include <fstream>

namespace shiftcd {

namespace {
constexpr char kMagic[8] = {'S', 'C', 'D', 'T', 'E', 'N', 'S', '1'};
}

void save_container(const NamedArrays& c, const std::string& path) {
  nlohmann::json manifest;
  manifest["kind"] = c.kind;
  manifest["config_digest"] = c.config_digest;
  manifest["seed"] = c.seed;
  manifest["meta"] = c.meta;

  std::uint64_t offset = 0;
  nlohmann::json arrays = nlohmann::json::array();
  for (const auto& [name, arr] : c.arrays) {
    std::int64_t n = 1;
    for (auto d : arr.shape) n *= d;
    if (n != static_cast<std::int64_t>(arr.data.size()))
      throw FormatError("array '" + name + "' shape/size mismatch");
    arrays.push_back({{"name", name},
                      {"dtype", "f32"},
                      {"shape", arr.shape},
                      {"offset", offset},
                      {"bytes", arr.data.size() * 4}});
    offset += arr.data.size() * 4;
  }
  manifest["arrays"] = arrays;
  std::string m = manifest.dump();

  // Write-temp-then-rename so a crash never leaves a torn checkpoint.
  std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open " + tmp);
    f.write(kMagic, 8);
    std::uint32_t len = static_cast<std::uint32_t>(m.size());
    f.write(reinterpret_cast<const char*>(&len), 4);
    f.write(m.data(), static_cast<std::streamsize>(m.size()));
    for (const auto& [name, arr] : c.arrays)
      f.write(reinterpret_cast<const char*>(arr.data.data()),
              static_cast<std::streamsize>(arr.data.size() * 4));
    if (!f) throw IoError("write failed: " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

NamedArrays load_container(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path);
  char magic[8];
  f.read(magic, 8);
  if (!f || std::memcmp(magic, kMagic, 8) != 0)
    throw FormatError("not a shiftcd container: " + path);
  std::uint32_t len = 0;
  f.read(reinterpret_cast<char*>(&len), 4);
  std::string m(len, '\0');
  f.read(m.data(), len);
  if (!f) throw FormatError("truncated container manifest: " + path);

  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(m);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("bad container manifest: " + std::string(e.what()));
  }

  NamedArrays c;
  c.kind = manifest.value("kind", "");
  c.config_digest = manifest.value("config_digest", "");
  c.seed = manifest.value("seed", std::uint64_t{0});
  if (manifest.contains("meta"))
    c.meta = manifest["meta"].get<std::map<std::string, std::string>>();

  std::uint64_t payload_start = 12 + len;
  for (const auto& a : manifest["arrays"]) {
    NamedArrays::Arr arr;
    arr.shape = a["shape"].get<std::vector<std::int64_t>>();
    if (a["dtype"] != "f32") throw FormatError("unsupported dtype in container");
    std::uint64_t bytes = a["bytes"].get<std::uint64_t>();
    std::uint64_t offset = a["offset"].get<std::uint64_t>();
    arr.data.resize(bytes / 4);
    f.seekg(static_cast<std::streamoff>(payload_start + offset));
    f.read(reinterpret_cast<char*>(arr.data.data()), static_cast<std::streamsize>(bytes));
    if (!f) throw FormatError("truncated container payload: " + path);
    c.arrays.emplace(a["name"].get<std::string>(), std::move(arr));
  }
  return c;
}

std::uint64_t file_checksum(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path);
  std::uint64_t h = 0xcbf29ce484222325ull;
  char buf[65536];
  while (f) {
    f.read(buf, sizeof(buf));
    h = fnv1a64(buf, static_cast<std::size_t>(f.gcount()), h);
  }
  return h;
}

}  // namespace shiftcd
