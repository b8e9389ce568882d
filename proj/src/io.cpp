#include "shiftcd/io.hpp"

#include <png.h>

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>

namespace shiftcd {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::string& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw IoError("cannot open " + path);
  return f;
}

// ---------------------------------------------------------------- PNG ----

struct PngReader {
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~PngReader() {
    if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
  }
};

struct PngWriter {
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~PngWriter() {
    if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
  }
};

Raster load_png(const std::string& path, TextMeta* text_out) {
  FilePtr f = open_file(path, "rb");
  PngReader r;
  r.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  r.info = png_create_info_struct(r.png);
  if (!r.png || !r.info) throw IoError("libpng init failed");
  if (setjmp(png_jmpbuf(r.png))) throw FormatError("corrupt PNG: " + path);
  png_init_io(r.png, f.get());
  png_read_info(r.png, r.info);

  png_uint_32 w = 0, h = 0;
  int bit_depth = 0, color = 0;
  png_get_IHDR(r.png, r.info, &w, &h, &bit_depth, &color, nullptr, nullptr, nullptr);

  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(r.png);
  if (color == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(r.png);
  if (png_get_valid(r.png, r.info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(r.png);
  png_set_strip_alpha(r.png);
  if (bit_depth == 16) png_set_swap(r.png);  // host is little-endian
  png_read_update_info(r.png, r.info);

  int channels = png_get_channels(r.png, r.info);
  bit_depth = png_get_bit_depth(r.png, r.info);
  if (channels != 1 && channels != 3)
    throw FormatError("unsupported PNG channel layout (" + std::to_string(channels) +
                      " channels): " + path);

  Raster im(static_cast<int>(h), static_cast<int>(w), channels);
  const float scale = bit_depth == 16 ? 1.0f / 65535.0f : 1.0f / 255.0f;
  const std::size_t row_bytes = static_cast<std::size_t>(w) * channels * (bit_depth == 16 ? 2 : 1);
  std::vector<std::uint8_t> buf(row_bytes * h);
  std::vector<png_bytep> rows(h);
  for (png_uint_32 y = 0; y < h; ++y) rows[y] = buf.data() + row_bytes * y;
  png_read_image(r.png, rows.data());
  for (png_uint_32 y = 0; y < h; ++y) {
    Eigen::Index base = static_cast<Eigen::Index>(y) * w;
    if (bit_depth == 16) {
      const auto* p16 = reinterpret_cast<const std::uint16_t*>(rows[y]);
      for (png_uint_32 x = 0; x < w; ++x)
        for (int c = 0; c < channels; ++c)
          im.data(base + x, c) = static_cast<float>(p16[x * channels + c]) * scale;
    } else {
      for (png_uint_32 x = 0; x < w; ++x)
        for (int c = 0; c < channels; ++c)
          im.data(base + x, c) = static_cast<float>(rows[y][x * channels + c]) * scale;
    }
  }
  png_read_end(r.png, r.info);

  if (text_out) {
    png_textp txt = nullptr;
    int n = png_get_text(r.png, r.info, &txt, nullptr);
    for (int i = 0; i < n; ++i)
      if (txt[i].key && txt[i].text) (*text_out)[txt[i].key] = txt[i].text;
  }
  return im;
}

void write_png8(const std::vector<std::uint8_t>& pixels, int h, int w, int channels,
                const std::string& path, const TextMeta& meta) {
  FilePtr f = open_file(path, "wb");
  PngWriter wr;
  wr.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  wr.info = png_create_info_struct(wr.png);
  if (!wr.png || !wr.info) throw IoError("libpng init failed");
  if (setjmp(png_jmpbuf(wr.png))) throw IoError("PNG write failed: " + path);
  png_init_io(wr.png, f.get());
  int color = channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB;
  png_set_IHDR(wr.png, wr.info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h),
               8, color, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);

  std::vector<png_text> txt;
  std::vector<std::string> keys, vals;  // keep storage alive
  keys.reserve(meta.size());
  vals.reserve(meta.size());
  for (const auto& [k, v] : meta) {
    keys.push_back(k);
    vals.push_back(v);
    png_text t{};
    t.compression = PNG_TEXT_COMPRESSION_NONE;
    t.key = keys.back().data();
    t.text = vals.back().data();
    t.text_length = vals.back().size();
    txt.push_back(t);
  }
  if (!txt.empty()) png_set_text(wr.png, wr.info, txt.data(), static_cast<int>(txt.size()));

  png_write_info(wr.png, wr.info);
  for (int y = 0; y < h; ++y)
    png_write_row(wr.png, const_cast<png_bytep>(
                              pixels.data() + static_cast<std::size_t>(y) * w * channels));
  png_write_end(wr.png, wr.info);
}

// --------------------------------------------------------------- TIFF ----
// Minimal baseline TIFF: uncompressed, chunky planar layout, 8/16-bit
// unsigned or 32-bit float samples. Enough for float map artifacts and for
// GeoTIFF pairs produced by common tooling without compression.

constexpr std::uint16_t kTagImageWidth = 256;
constexpr std::uint16_t kTagImageLength = 257;
constexpr std::uint16_t kTagBitsPerSample = 258;
constexpr std::uint16_t kTagCompression = 259;
constexpr std::uint16_t kTagPhotometric = 262;
constexpr std::uint16_t kTagImageDescription = 270;
constexpr std::uint16_t kTagStripOffsets = 273;
constexpr std::uint16_t kTagSamplesPerPixel = 277;
constexpr std::uint16_t kTagRowsPerStrip = 278;
constexpr std::uint16_t kTagStripByteCounts = 279;
constexpr std::uint16_t kTagPlanarConfig = 284;
constexpr std::uint16_t kTagSampleFormat = 339;

constexpr std::uint16_t kGeoTags[] = {33550, 33922, 34264, 34735, 34736, 34737,
                                      42112, 42113};

std::size_t tiff_type_size(std::uint16_t t) {
  switch (t) {
    case 1: case 2: case 6: case 7: return 1;   // BYTE, ASCII, SBYTE, UNDEF
    case 3: case 8: return 2;                   // SHORT, SSHORT
    case 4: case 9: case 11: return 4;          // LONG, SLONG, FLOAT
    case 5: case 10: case 12: return 8;         // RATIONAL, SRATIONAL, DOUBLE
    default: return 0;
  }
}

struct TiffEntry {
  std::uint16_t id = 0, type = 0;
  std::uint32_t count = 0;
  std::vector<std::uint8_t> payload;

  std::uint32_t as_u32(std::size_t i = 0) const {
    if (type == 3) {
      std::uint16_t v;
      std::memcpy(&v, payload.data() + i * 2, 2);
      return v;
    }
    std::uint32_t v;
    std::memcpy(&v, payload.data() + i * 4, 4);
    return v;
  }
};

Raster load_tiff(const std::string& path, std::optional<GeoSidecar>* geo_out) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                  std::istreambuf_iterator<char>());
  if (bytes.size() < 8) throw FormatError("truncated TIFF: " + path);
  bool le = bytes[0] == 'I';
  if ((!le && bytes[0] != 'M') || bytes[0] != bytes[1])
    throw FormatError("bad TIFF byte order mark: " + path);

  auto rd16 = [&](std::size_t off) -> std::uint16_t {
    if (off + 2 > bytes.size()) throw FormatError("truncated TIFF: " + path);
    std::uint16_t v = static_cast<std::uint16_t>(bytes[off] | (bytes[off + 1] << 8));
    if (!le) v = static_cast<std::uint16_t>((v >> 8) | (v << 8));
    return v;
  };
  auto rd32 = [&](std::size_t off) -> std::uint32_t {
    if (off + 4 > bytes.size()) throw FormatError("truncated TIFF: " + path);
    std::uint32_t v;
    std::memcpy(&v, bytes.data() + off, 4);
    if (!le) v = __builtin_bswap32(v);
    return v;
  };

  if (rd16(2) != 42) throw FormatError("not a TIFF: " + path);
  std::size_t ifd = rd32(4);
  std::uint16_t n_entries = rd16(ifd);

  std::vector<TiffEntry> entries;
  for (std::uint16_t i = 0; i < n_entries; ++i) {
    std::size_t e = ifd + 2 + static_cast<std::size_t>(i) * 12;
    TiffEntry ent;
    ent.id = rd16(e);
    ent.type = rd16(e + 2);
    ent.count = rd32(e + 4);
    std::size_t sz = tiff_type_size(ent.type) * ent.count;
    std::size_t src = sz <= 4 ? e + 8 : rd32(e + 8);
    if (src + sz > bytes.size()) throw FormatError("TIFF entry out of range: " + path);
    ent.payload.assign(bytes.begin() + static_cast<long>(src),
                       bytes.begin() + static_cast<long>(src + sz));
    if (!le && tiff_type_size(ent.type) > 1) {
      std::size_t esz = tiff_type_size(ent.type);
      for (std::size_t o = 0; o + esz <= ent.payload.size(); o += esz)
        std::reverse(ent.payload.begin() + static_cast<long>(o),
                     ent.payload.begin() + static_cast<long>(o + esz));
    }
    entries.push_back(std::move(ent));
  }

  auto find = [&](std::uint16_t id) -> const TiffEntry* {
    for (const auto& ent : entries)
      if (ent.id == id) return &ent;
    return nullptr;
  };
  auto require = [&](std::uint16_t id) -> const TiffEntry& {
    const TiffEntry* ent = find(id);
    if (!ent) throw FormatError("TIFF missing tag " + std::to_string(id) + ": " + path);
    return *ent;
  };

  int w = static_cast<int>(require(kTagImageWidth).as_u32());
  int h = static_cast<int>(require(kTagImageLength).as_u32());
  int spp = find(kTagSamplesPerPixel) ? static_cast<int>(find(kTagSamplesPerPixel)->as_u32()) : 1;
  int bps = find(kTagBitsPerSample) ? static_cast<int>(find(kTagBitsPerSample)->as_u32()) : 1;
  int compression = find(kTagCompression) ? static_cast<int>(find(kTagCompression)->as_u32()) : 1;
  int planar = find(kTagPlanarConfig) ? static_cast<int>(find(kTagPlanarConfig)->as_u32()) : 1;
  int sfmt = find(kTagSampleFormat) ? static_cast<int>(find(kTagSampleFormat)->as_u32()) : 1;

  if (compression != 1)
    throw FormatError("only uncompressed TIFF is supported: " + path);
  if (planar != 1) throw FormatError("planar TIFF layout unsupported: " + path);
  if (spp != 1 && spp != 3)
    throw FormatError("unsupported TIFF channel layout (" + std::to_string(spp) +
                      " samples/pixel): " + path);
  bool is_float = sfmt == 3;
  if (!(bps == 8 || bps == 16 || (bps == 32 && is_float)))
    throw FormatError("unsupported TIFF sample type: " + path);

  const TiffEntry& offs = require(kTagStripOffsets);
  const TiffEntry& counts = require(kTagStripByteCounts);
  std::uint32_t rows_per_strip =
      find(kTagRowsPerStrip) ? find(kTagRowsPerStrip)->as_u32() : static_cast<std::uint32_t>(h);

  std::vector<std::uint8_t> raw;
  raw.reserve(static_cast<std::size_t>(h) * w * spp * (bps / 8));
  for (std::uint32_t s = 0; s < offs.count; ++s) {
    std::uint32_t off = offs.as_u32(s);
    std::uint32_t cnt = counts.as_u32(s);
    if (off + cnt > bytes.size()) throw FormatError("TIFF strip out of range: " + path);
    raw.insert(raw.end(), bytes.begin() + off, bytes.begin() + off + cnt);
  }
  (void)rows_per_strip;
  std::size_t need = static_cast<std::size_t>(h) * w * spp * (bps / 8);
  if (raw.size() < need) throw FormatError("TIFF pixel data truncated: " + path);
  if (!le && bps > 8) {
    std::size_t esz = bps / 8u;
    for (std::size_t o = 0; o + esz <= need; o += esz)
      std::reverse(raw.begin() + static_cast<long>(o), raw.begin() + static_cast<long>(o + esz));
  }

  Raster im(h, w, spp);
  for (Eigen::Index p = 0; p < im.pixels(); ++p)
    for (int c = 0; c < spp; ++c) {
      std::size_t i = static_cast<std::size_t>(p) * spp + c;
      if (is_float) {
        float v;
        std::memcpy(&v, raw.data() + i * 4, 4);
        im.data(p, c) = v;
      } else if (bps == 16) {
        std::uint16_t v;
        std::memcpy(&v, raw.data() + i * 2, 2);
        im.data(p, c) = static_cast<float>(v) / 65535.0f;
      } else {
        im.data(p, c) = static_cast<float>(raw[i]) / 255.0f;
      }
    }

  if (geo_out) {
    GeoSidecar side;
    for (std::uint16_t id : kGeoTags)
      if (const TiffEntry* ent = find(id))
        side.tags.push_back({ent->id, ent->type, ent->count, ent->payload});
    if (!side.tags.empty()) *geo_out = std::move(side);
  }
  return im;
}

void write_tiff(const std::vector<std::uint8_t>& samples, int h, int w, int spp,
                int bps, bool is_float, const std::string& path,
                const std::optional<GeoSidecar>& geo, const TextMeta& meta) {
  std::string desc;
  for (const auto& [k, v] : meta) desc += k + "=" + v + "\n";

  struct Entry {
    std::uint16_t id, type;
    std::uint32_t count;
    std::vector<std::uint8_t> payload;
  };
  std::vector<Entry> entries;
  auto add_short = [&](std::uint16_t id, std::uint16_t v) {
    Entry e{id, 3, 1, std::vector<std::uint8_t>(2)};
    std::memcpy(e.payload.data(), &v, 2);
    entries.push_back(std::move(e));
  };
  auto add_long = [&](std::uint16_t id, std::uint32_t v) {
    Entry e{id, 4, 1, std::vector<std::uint8_t>(4)};
    std::memcpy(e.payload.data(), &v, 4);
    entries.push_back(std::move(e));
  };

  add_long(kTagImageWidth, static_cast<std::uint32_t>(w));
  add_long(kTagImageLength, static_cast<std::uint32_t>(h));
  add_short(kTagBitsPerSample, static_cast<std::uint16_t>(bps));
  add_short(kTagCompression, 1);
  add_short(kTagPhotometric, spp == 3 ? 2 : 1);
  if (!desc.empty()) {
    Entry e{kTagImageDescription, 2, static_cast<std::uint32_t>(desc.size() + 1), {}};
    e.payload.assign(desc.begin(), desc.end());
    e.payload.push_back(0);
    entries.push_back(std::move(e));
  }
  add_long(kTagStripOffsets, 0);  // patched below
  add_short(kTagSamplesPerPixel, static_cast<std::uint16_t>(spp));
  add_long(kTagRowsPerStrip, static_cast<std::uint32_t>(h));
  add_long(kTagStripByteCounts, static_cast<std::uint32_t>(samples.size()));
  add_short(kTagPlanarConfig, 1);
  add_short(kTagSampleFormat, is_float ? 3 : 1);
  if (geo)
    for (const auto& t : geo->tags) entries.push_back({t.id, t.type, t.count, t.payload});

  std::sort(entries.begin(), entries.end(),
            [](const Entry& a, const Entry& b) { return a.id < b.id; });

  // Layout: header(8) + entry count(2) + entries(12 each) + next(4), then
  // overflow payloads, then pixel data.
  std::size_t ifd_off = 8;
  std::size_t dir_size = 2 + entries.size() * 12 + 4;
  std::size_t overflow_off = ifd_off + dir_size;
  std::size_t cursor = overflow_off;
  for (const auto& e : entries)
    if (e.payload.size() > 4) cursor += (e.payload.size() + 1) & ~std::size_t{1};
  std::size_t data_off = cursor;

  const std::uint32_t data_off32 = static_cast<std::uint32_t>(data_off);
  for (auto& e : entries)
    if (e.id == kTagStripOffsets)
      std::memcpy(e.payload.data(), &data_off32, 4);

  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path);
  auto put16 = [&](std::uint16_t v) { f.write(reinterpret_cast<char*>(&v), 2); };
  auto put32 = [&](std::uint32_t v) { f.write(reinterpret_cast<char*>(&v), 4); };

  f.write("II", 2);
  put16(42);
  put32(static_cast<std::uint32_t>(ifd_off));
  put16(static_cast<std::uint16_t>(entries.size()));
  std::size_t payload_cursor = overflow_off;
  for (const auto& e : entries) {
    put16(e.id);
    put16(e.type);
    put32(e.count);
    if (e.payload.size() <= 4) {
      std::uint8_t inl[4] = {0, 0, 0, 0};
      std::memcpy(inl, e.payload.data(), e.payload.size());
      f.write(reinterpret_cast<char*>(inl), 4);
    } else {
      put32(static_cast<std::uint32_t>(payload_cursor));
      payload_cursor += (e.payload.size() + 1) & ~std::size_t{1};
    }
  }
  put32(0);  // no next IFD
  for (const auto& e : entries)
    if (e.payload.size() > 4) {
      f.write(reinterpret_cast<const char*>(e.payload.data()),
              static_cast<long>(e.payload.size()));
      if (e.payload.size() & 1) f.put(0);
    }
  f.write(reinterpret_cast<const char*>(samples.data()), static_cast<long>(samples.size()));
  if (!f) throw IoError("TIFF write failed: " + path);
}


}  // namespace

LoadedRaster load_raster(const std::string& path) {
  std::ifstream probe(path, std::ios::binary);
  if (!probe) throw IoError("cannot open " + path);
  unsigned char magic[4] = {0, 0, 0, 0};
  probe.read(reinterpret_cast<char*>(magic), 4);
  probe.close();

  LoadedRaster out;
  if (magic[0] == 0x89 && magic[1] == 'P') {
    out.image = load_png(path, nullptr);
  } else if ((magic[0] == 'I' && magic[1] == 'I') || (magic[0] == 'M' && magic[1] == 'M')) {
    std::optional<GeoSidecar> geo;
    out.image = load_tiff(path, &geo);
    out.geo = std::move(geo);
  } else {
    throw FormatError("unsupported raster format: " + path);
  }
  return out;
}

void save_png8(const Raster& im, const std::string& path, const TextMeta& meta) {
  std::vector<std::uint8_t> px(static_cast<std::size_t>(im.pixels()) * im.channels);
  for (Eigen::Index p = 0; p < im.pixels(); ++p)
    for (int c = 0; c < im.channels; ++c) {
      float v = std::min(1.0f, std::max(0.0f, im.data(p, c)));
      px[static_cast<std::size_t>(p) * im.channels + c] =
          static_cast<std::uint8_t>(std::lround(v * 255.0f));
    }
  if (im.channels != 1 && im.channels != 3)
    throw FormatError("PNG writer supports 1 or 3 channels");
  write_png8(px, im.height, im.width, im.channels, path, meta);
}

void save_tiff_f32(const Raster& im, const std::string& path,
                   const std::optional<GeoSidecar>& geo, const TextMeta& meta) {
  std::vector<std::uint8_t> raw(static_cast<std::size_t>(im.pixels()) * im.channels * 4);
  for (Eigen::Index p = 0; p < im.pixels(); ++p)
    for (int c = 0; c < im.channels; ++c) {
      float v = im.data(p, c);
      std::memcpy(raw.data() + (static_cast<std::size_t>(p) * im.channels + c) * 4, &v, 4);
    }
  write_tiff(raw, im.height, im.width, im.channels, 32, true, path, geo, meta);
}

void save_change_map(const MapU8& m, const std::string& path, const TextMeta& meta) {
  if (m.channels != 1) throw DimensionError("change map must be single-channel");
  std::vector<std::uint8_t> px(static_cast<std::size_t>(m.pixels()));
  for (Eigen::Index p = 0; p < m.pixels(); ++p) px[static_cast<std::size_t>(p)] = m.data(p, 0) ? 255 : 0;
  write_png8(px, m.height, m.width, 1, path, meta);
}

MapU8 load_change_map(const std::string& path) {
  Raster r = load_png(path, nullptr);
  if (r.channels != 1) throw FormatError("change map must be single-channel: " + path);
  MapU8 m(r.height, r.width, 1);
  for (Eigen::Index p = 0; p < r.pixels(); ++p) m.data(p, 0) = r.data(p, 0) >= 0.5f ? 1 : 0;
  return m;
}

void save_trinary_map(const MapU8& m, const std::string& path, const TextMeta& meta) {
  if (m.channels != 1) throw DimensionError("trinary map must be single-channel");
  std::vector<std::uint8_t> px(static_cast<std::size_t>(m.pixels()));
  for (Eigen::Index p = 0; p < m.pixels(); ++p) {
    std::uint8_t v = m.data(p, 0);
    px[static_cast<std::size_t>(p)] = v == kChanged ? 255 : (v == kUndecided ? 128 : 0);
  }
  write_png8(px, m.height, m.width, 1, path, meta);
}

TextMeta read_png_text(const std::string& path) {
  TextMeta meta;
  load_png(path, &meta);
  return meta;
}

}  // namespace shiftcd
