#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "shiftcd/common.hpp"

namespace shiftcd {

// Dense H x W x C raster / feature container. Storage is an Eigen matrix of
// (H*W) rows by C columns, spatial index row-major (p = y*W + x), so one
// column is a full channel plane and per-channel reductions are columnwise.
template <typename T>
struct Image {
  using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;

  int height = 0;
  int width = 0;
  int channels = 0;
  Mat data;

  Image() = default;
  Image(int h, int w, int c) : height(h), width(w), channels(c) {
    if (h < 1 || w < 1 || c < 1) throw DimensionError("image dims must be >= 1");
    data.setZero(static_cast<Eigen::Index>(h) * w, c);
  }

  static Image constant(int h, int w, int c, T v) {
    Image im(h, w, c);
    im.data.setConstant(v);
    return im;
  }

  Eigen::Index pixels() const { return static_cast<Eigen::Index>(height) * width; }
  bool same_shape(const Image& o) const {
    return height == o.height && width == o.width && channels == o.channels;
  }

  T& at(int y, int x, int c) { return data(static_cast<Eigen::Index>(y) * width + x, c); }
  T at(int y, int x, int c) const {
    return data(static_cast<Eigen::Index>(y) * width + x, c);
  }
};

using Raster = Image<float>;
using MapU8 = Image<std::uint8_t>;  // change / trinary label maps

// Trinary pseudo-change labels.
inline constexpr std::uint8_t kUnchanged = 0;
inline constexpr std::uint8_t kUndecided = 1;
inline constexpr std::uint8_t kChanged = 2;

template <typename T>
Image<T> crop(const Image<T>& im, int y0, int x0, int h, int w) {
  if (y0 < 0 || x0 < 0 || y0 + h > im.height || x0 + w > im.width)
    throw DimensionError("crop window outside image");
  Image<T> out(h, w, im.channels);
  for (int y = 0; y < h; ++y)
    out.data.middleRows(static_cast<Eigen::Index>(y) * w, w) =
        im.data.middleRows((static_cast<Eigen::Index>(y0) + y) * im.width + x0, w);
  return out;
}

// Mirror fold of index i into [0, n). Handles arbitrarily large overshoot.
inline int reflect_index(int i, int n) {
  if (n == 1) return 0;
  int period = 2 * n;
  int m = i % period;
  if (m < 0) m += period;
  return m < n ? m : period - 1 - m;
}

template <typename T>
Image<T> pad_reflect(const Image<T>& im, int top, int bottom, int left, int right) {
  Image<T> out(im.height + top + bottom, im.width + left + right, im.channels);
  for (int y = 0; y < out.height; ++y) {
    int sy = reflect_index(y - top, im.height);
    for (int x = 0; x < out.width; ++x) {
      int sx = reflect_index(x - left, im.width);
      out.data.row(static_cast<Eigen::Index>(y) * out.width + x) =
          im.data.row(static_cast<Eigen::Index>(sy) * im.width + sx);
    }
  }
  return out;
}

// Overlapping tile layout over a scene. The last tile per axis clamps to the
// image edge so every pixel is covered without padding.
struct TileGrid {
  int tile_size = 0;
  int stride = 0;
  int scene_h = 0;
  int scene_w = 0;
  std::vector<std::pair<int, int>> origins;  // (row, col), row-major sorted

  std::size_t count() const { return origins.size(); }
};

inline std::vector<int> axis_origins(int dim, int tile, int stride) {
  std::vector<int> v;
  for (int p = 0;; p += stride) {
    if (p + tile >= dim) {
      int last = dim - tile;
      if (v.empty() || v.back() != last) v.push_back(last);
      break;
    }
    v.push_back(p);
  }
  return v;
}

inline TileGrid make_tile_grid(int scene_h, int scene_w, int tile_size,
                               double overlap_rate) {
  if (overlap_rate < 0.0 || overlap_rate >= 1.0)
    throw ConfigError("overlap_rate must be in [0, 1)");
  if (tile_size < 1 || tile_size > scene_h || tile_size > scene_w)
    throw DimensionError("tile_size exceeds scene extent; pad or resize first");
  TileGrid g;
  g.tile_size = tile_size;
  g.stride = std::max(1, static_cast<int>(std::lround(tile_size * (1.0 - overlap_rate))));
  g.scene_h = scene_h;
  g.scene_w = scene_w;
  auto rows = axis_origins(scene_h, tile_size, g.stride);
  auto cols = axis_origins(scene_w, tile_size, g.stride);
  for (int r : rows)
    for (int c : cols) g.origins.emplace_back(r, c);
  return g;
}

template <typename T>
std::pair<std::vector<Image<T>>, TileGrid> tile(const Image<T>& im, int tile_size,
                                                double overlap_rate) {
  TileGrid g = make_tile_grid(im.height, im.width, tile_size, overlap_rate);
  std::vector<Image<T>> tiles;
  tiles.reserve(g.count());
  for (auto [r, c] : g.origins) tiles.push_back(crop(im, r, c, tile_size, tile_size));
  return {std::move(tiles), g};
}

enum class Reducer { kMean, kMajority };

// Recombines per-tile results into a full scene. Mean accumulates in double
// so that a tile/stitch round trip of identical values is bit-exact; majority
// breaks ties to the smaller label (unchanged).
template <typename T>
Image<T> stitch(const std::vector<Image<T>>& tiles, const TileGrid& g, Reducer red) {
  if (tiles.size() != g.count())
    throw DimensionError("tile count does not match grid");
  for (const auto& t : tiles)
    if (t.height != g.tile_size || t.width != g.tile_size ||
        t.channels != tiles.front().channels)
      throw DimensionError("tiles must share the grid tile shape");
  const int c = tiles.front().channels;
  Image<T> out(g.scene_h, g.scene_w, c);

  if (red == Reducer::kMean) {
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic> acc;
    acc.setZero(out.pixels(), c);
    Eigen::VectorXd cnt = Eigen::VectorXd::Zero(out.pixels());
    for (std::size_t i = 0; i < tiles.size(); ++i) {
      auto [r0, c0] = g.origins[i];
      for (int y = 0; y < g.tile_size; ++y) {
        Eigen::Index dst = (static_cast<Eigen::Index>(r0) + y) * g.scene_w + c0;
        acc.middleRows(dst, g.tile_size) +=
            tiles[i]
                .data.middleRows(static_cast<Eigen::Index>(y) * g.tile_size, g.tile_size)
                .template cast<double>();
        cnt.segment(dst, g.tile_size).array() += 1.0;
      }
    }
    out.data = (acc.array().colwise() / cnt.array()).template cast<T>();
  } else {
    // Majority vote over binary labels {0, 1}.
    Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic> ones, total;
    ones.setZero(out.pixels(), c);
    total.setZero(out.pixels(), c);
    for (std::size_t i = 0; i < tiles.size(); ++i) {
      auto [r0, c0] = g.origins[i];
      for (int y = 0; y < g.tile_size; ++y) {
        Eigen::Index dst = (static_cast<Eigen::Index>(r0) + y) * g.scene_w + c0;
        ones.middleRows(dst, g.tile_size) +=
            tiles[i]
                .data.middleRows(static_cast<Eigen::Index>(y) * g.tile_size, g.tile_size)
                .template cast<int>();
        total.middleRows(dst, g.tile_size).array() += 1;
      }
    }
    out.data = (2 * ones.array() > total.array())
                   .template cast<T>();  // tie -> 0
  }
  return out;
}

inline std::string to_text(const TileGrid& g) {
  std::string s = "tile=" + std::to_string(g.tile_size) +
                  " stride=" + std::to_string(g.stride) + " scene=" +
                  std::to_string(g.scene_h) + "x" + std::to_string(g.scene_w) +
                  " origins=";
  for (std::size_t i = 0; i < g.origins.size(); ++i) {
    if (i) s += ",";
    s += "(" + std::to_string(g.origins[i].first) + "," +
         std::to_string(g.origins[i].second) + ")";
  }
  return s;
}

}  // namespace shiftcd
