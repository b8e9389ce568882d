#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "shiftcd/image.hpp"

namespace shiftcd {

// Raw TIFF tags (pixel scale, tie points, geo keys, ...) carried through
// load/save untouched so georeferencing survives a round trip.
struct GeoSidecar {
  struct Tag {
    std::uint16_t id = 0;
    std::uint16_t type = 0;
    std::uint32_t count = 0;
    std::vector<std::uint8_t> payload;
  };
  std::vector<Tag> tags;
  bool empty() const { return tags.empty(); }
};

struct LoadedRaster {
  Raster image;
  std::optional<GeoSidecar> geo;
};

// Key/value strings embedded in written files (PNG tEXt chunks, TIFF
// ImageDescription). Used to stamp artifacts with config digest and seed.
using TextMeta = std::map<std::string, std::string>;

// PNG or TIFF by magic bytes; integer samples normalized by bit depth.
LoadedRaster load_raster(const std::string& path);

// 8-bit PNG, values clamped to [0,1] and quantized by round(v * 255).
void save_png8(const Raster& im, const std::string& path, const TextMeta& meta = {});

// Uncompressed TIFF. float32 samples written as-is; geo tags re-emitted.
void save_tiff_f32(const Raster& im, const std::string& path,
                   const std::optional<GeoSidecar>& geo = std::nullopt,
                   const TextMeta& meta = {});

// Binary change map as single-channel 8-bit PNG with {0, 255}.
void save_change_map(const MapU8& m, const std::string& path, const TextMeta& meta = {});
MapU8 load_change_map(const std::string& path);

// Trinary pseudo-change map as {0 = unchanged, 128 = undecided, 255 = changed}.
void save_trinary_map(const MapU8& m, const std::string& path, const TextMeta& meta = {});

TextMeta read_png_text(const std::string& path);

}  // namespace shiftcd
