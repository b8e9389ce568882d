#include "shiftcd/nn.hpp"

namespace shiftcd::nn::detail {

Mat<float> wino_transform_weights(const Mat<float>& w9, int cin, int cout) {
  Mat<float> out(static_cast<Eigen::Index>(36) * cin, cout);
  float g[9], u[36];
  for (int co = 0; co < cout; ++co)
    for (int ci = 0; ci < cin; ++ci) {
      for (int k = 0; k < 9; ++k) g[k] = w9(static_cast<Eigen::Index>(k) * cin + ci, co);
      wino_filter_tile(g, u);
      for (int s = 0; s < 36; ++s) out(static_cast<Eigen::Index>(s) * cin + ci, co) = u[s];
    }
  return out;
}

void wino_conv3x3(const Mat<float>& x, int h, int w, const Mat<float>& wino_w,
                  Mat<float>& y) {
  const int cin = static_cast<int>(x.cols());
  const int cout = static_cast<int>(wino_w.cols());
  const int th = (h + 3) / 4, tw = (w + 3) / 4;
  const Eigen::Index tiles = static_cast<Eigen::Index>(th) * tw;

  auto& ws = wino_workspace();
  ws.U.resize(tiles, static_cast<Eigen::Index>(36) * cin);
  ws.M.resize(tiles, static_cast<Eigen::Index>(36) * cout);

  // Input transform. Interior tiles skip the bounds checks.
  float d[36], u[36];
  for (int c = 0; c < cin; ++c) {
    const float* src = x.col(c).data();
    for (int ty = 0; ty < th; ++ty) {
      const int iy0 = ty * 4 - 1;
      const bool y_edge = iy0 < 0 || iy0 + 6 > h;
      for (int tx = 0; tx < tw; ++tx) {
        const int ix0 = tx * 4 - 1;
        const Eigen::Index t = static_cast<Eigen::Index>(ty) * tw + tx;
        if (!y_edge && ix0 >= 0 && ix0 + 6 <= w) {
          const float* p = src + static_cast<Eigen::Index>(iy0) * w + ix0;
          for (int i = 0; i < 6; ++i)
            for (int j = 0; j < 6; ++j) d[6 * i + j] = p[static_cast<Eigen::Index>(i) * w + j];
        } else {
          for (int i = 0; i < 6; ++i) {
            const int iy = iy0 + i;
            for (int j = 0; j < 6; ++j) {
              const int ix = ix0 + j;
              d[6 * i + j] = (iy >= 0 && iy < h && ix >= 0 && ix < w)
                                 ? src[static_cast<Eigen::Index>(iy) * w + ix]
                                 : 0.0f;
            }
          }
        }
        wino_input_tile(d, u);
        for (int s = 0; s < 36; ++s) ws.U(t, static_cast<Eigen::Index>(s) * cin + c) = u[s];
      }
    }
  }

  for (int s = 0; s < 36; ++s)
    ws.M.middleCols(static_cast<Eigen::Index>(s) * cout, cout).noalias() =
        ws.U.middleCols(static_cast<Eigen::Index>(s) * cin, cin) *
        wino_w.middleRows(static_cast<Eigen::Index>(s) * cin, cin);

  float m[36], o[16];
  for (int co = 0; co < cout; ++co) {
    float* dst = y.col(co).data();
    for (int ty = 0; ty < th; ++ty)
      for (int tx = 0; tx < tw; ++tx) {
        const Eigen::Index t = static_cast<Eigen::Index>(ty) * tw + tx;
        for (int s = 0; s < 36; ++s) m[s] = ws.M(t, static_cast<Eigen::Index>(s) * cout + co);
        wino_output_tile(m, o);
        const int oy0 = ty * 4, ox0 = tx * 4;
        const int ny = std::min(4, h - oy0), nx = std::min(4, w - ox0);
        for (int i = 0; i < ny; ++i)
          for (int j = 0; j < nx; ++j)
            dst[static_cast<Eigen::Index>(oy0 + i) * w + ox0 + j] = o[4 * i + j];
      }
  }
}

}  // namespace shiftcd::nn::detail
