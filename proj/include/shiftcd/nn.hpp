#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "shiftcd/image.hpp"

namespace shiftcd::nn {

template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <typename T>
using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;

// ------------------------------------------------------------------------
// Winograd F(4x4, 3x3) fast path for dense stride-1 convolutions in float.
// The double instantiation always takes the direct im2col route, which the
// finite-difference checks exercise; equivalence of the two routes is
// covered by unit tests.
// ------------------------------------------------------------------------

namespace detail {

inline void wino_input_tile(const float* d, float u[36]) {
  // B^T d B for a 6x6 input tile d (row-major).
  float t[36];
  for (int c = 0; c < 6; ++c) {
    float d0 = d[c], d1 = d[6 + c], d2 = d[12 + c], d3 = d[18 + c], d4 = d[24 + c],
          d5 = d[30 + c];
    t[c] = 4.f * d0 - 5.f * d2 + d4;
    t[6 + c] = -4.f * d1 - 4.f * d2 + d3 + d4;
    t[12 + c] = 4.f * d1 - 4.f * d2 - d3 + d4;
    t[18 + c] = -2.f * d1 - d2 + 2.f * d3 + d4;
    t[24 + c] = 2.f * d1 - d2 - 2.f * d3 + d4;
    t[30 + c] = 4.f * d1 - 5.f * d3 + d5;
  }
  for (int r = 0; r < 6; ++r) {
    const float* x = t + 6 * r;
    u[6 * r] = 4.f * x[0] - 5.f * x[2] + x[4];
    u[6 * r + 1] = -4.f * x[1] - 4.f * x[2] + x[3] + x[4];
    u[6 * r + 2] = 4.f * x[1] - 4.f * x[2] - x[3] + x[4];
    u[6 * r + 3] = -2.f * x[1] - x[2] + 2.f * x[3] + x[4];
    u[6 * r + 4] = 2.f * x[1] - x[2] - 2.f * x[3] + x[4];
    u[6 * r + 5] = 4.f * x[1] - 5.f * x[3] + x[5];
  }
}

inline void wino_output_tile(const float m[36], float y[16]) {
  // A^T m A, 6x6 -> 4x4.
  float t[24];
  for (int c = 0; c < 6; ++c) {
    float m0 = m[c], m1 = m[6 + c], m2 = m[12 + c], m3 = m[18 + c], m4 = m[24 + c],
          m5 = m[30 + c];
    t[c] = m0 + m1 + m2 + m3 + m4;
    t[6 + c] = m1 - m2 + 2.f * m3 - 2.f * m4;
    t[12 + c] = m1 + m2 + 4.f * m3 + 4.f * m4;
    t[18 + c] = m1 - m2 + 8.f * m3 - 8.f * m4 + m5;
  }
  for (int r = 0; r < 4; ++r) {
    const float* x = t + 6 * r;
    y[4 * r] = x[0] + x[1] + x[2] + x[3] + x[4];
    y[4 * r + 1] = x[1] - x[2] + 2.f * x[3] - 2.f * x[4];
    y[4 * r + 2] = x[1] + x[2] + 4.f * x[3] + 4.f * x[4];
    y[4 * r + 3] = x[1] - x[2] + 8.f * x[3] - 8.f * x[4] + x[5];
  }
}

inline void wino_filter_tile(const float* g, float u[36]) {
  // G g G^T for a 3x3 filter g (row-major).
  static const float G[6][3] = {{0.25f, 0.f, 0.f},
                                {-1.f / 6.f, -1.f / 6.f, -1.f / 6.f},
                                {-1.f / 6.f, 1.f / 6.f, -1.f / 6.f},
                                {1.f / 24.f, 1.f / 12.f, 1.f / 6.f},
                                {1.f / 24.f, -1.f / 12.f, 1.f / 6.f},
                                {0.f, 0.f, 1.f}};
  float t[18];
  for (int r = 0; r < 6; ++r)
    for (int c = 0; c < 3; ++c)
      t[3 * r + c] = G[r][0] * g[c] + G[r][1] * g[3 + c] + G[r][2] * g[6 + c];
  for (int r = 0; r < 6; ++r)
    for (int c = 0; c < 6; ++c)
      u[6 * r + c] = t[3 * r] * G[c][0] + t[3 * r + 1] * G[c][1] + t[3 * r + 2] * G[c][2];
}

// Scratch shared by the Winograd pipeline; grown on demand, never shrunk.
struct WinoWorkspace {
  Mat<float> U, M;  // (tiles) x (36*cin), (tiles) x (36*cout)
};

inline WinoWorkspace& wino_workspace() {
  static thread_local WinoWorkspace ws;
  return ws;
}

// y(hw x cout) = conv3x3_s1(x(hw x cin), W(9cin x cout)) with zero pad 1.
// W row layout: (ky*3 + kx)*cin + ci, i.e. kernel-position major.
void wino_conv3x3(const Mat<float>& x, int h, int w, const Mat<float>& wino_w,
                  Mat<float>& y);

// Precomputes the 36 transformed filter matrices, stacked as a
// (36*cin) x cout matrix, rows grouped by Winograd slot.
Mat<float> wino_transform_weights(const Mat<float>& w9, int cin, int cout);

}  // namespace detail

// ------------------------------------------------------------------------
// Direct convolution (blocked im2col + GEMM). Works for any T, stride,
// group count. Weight layout: (k*k*cin_g) rows x cout cols, row index
// (ky*k + kx)*cin_g + ci, columns blocked by group.
// ------------------------------------------------------------------------

inline int conv_out_dim(int in, int k, int stride, int pad) {
  return (in + 2 * pad - k) / stride + 1;
}

template <typename T>
void im2col_block(const Mat<T>& x, int h, int w, int c0, int cg, int k,
                  int stride, int pad, int out_w, int row0, int rows, Mat<T>& p) {
  p.setZero(rows, static_cast<Eigen::Index>(k) * k * cg);
  for (int ky = 0; ky < k; ++ky)
    for (int kx = 0; kx < k; ++kx)
      for (int ci = 0; ci < cg; ++ci) {
        Eigen::Index col = (static_cast<Eigen::Index>(ky) * k + kx) * cg + ci;
        const T* src = x.col(c0 + ci).data();
        T* dst = p.col(col).data();
        for (int r = 0; r < rows; ++r) {
          int op = row0 + r;
          int oy = op / out_w, ox = op % out_w;
          int iy = oy * stride + ky - pad;
          int ix = ox * stride + kx - pad;
          dst[r] = (iy >= 0 && iy < h && ix >= 0 && ix < w)
                       ? src[static_cast<Eigen::Index>(iy) * w + ix]
                       : T(0);
        }
      }
}

struct ConvSpec {
  int in_ch = 0, out_ch = 0, ksize = 3, stride = 1, groups = 1;
  bool bias = true;
};

template <typename T>
struct Conv2d {
  ConvSpec spec;
  Mat<T> w;   // (k*k*cin_g) x cout
  Vec<T> b;   // cout (zero-sized when bias == false)
  Mat<T> gw;
  Vec<T> gb;
  Mat<float> wino_w;     // transformed filters, float fast path only
  bool wino_dirty = true;

  Conv2d() = default;
  explicit Conv2d(ConvSpec s) : spec(s) {
    if (s.in_ch % s.groups || s.out_ch % s.groups)
      throw ConfigError("conv channels not divisible by group count");
    const int cg = s.in_ch / s.groups;
    w.setZero(static_cast<Eigen::Index>(s.ksize) * s.ksize * cg, s.out_ch);
    b.setZero(s.bias ? s.out_ch : 0);
    zero_grad();
  }

  void zero_grad() {
    gw.setZero(w.rows(), w.cols());
    gb.setZero(b.size());
  }

  Eigen::Index param_count() const { return w.size() + b.size(); }

  bool use_wino(int h, int w_) const {
    if constexpr (std::is_same_v<T, float>) {
      return spec.ksize == 3 && spec.stride == 1 && spec.groups == 1 &&
             spec.in_ch >= 32 && spec.out_ch >= 32 && h >= 8 && w_ >= 8;
    }
    (void)h;
    (void)w_;
    return false;
  }

  Image<T> forward(const Image<T>& x) const {
    if (x.channels != spec.in_ch) throw DimensionError("conv input channel mismatch");
    const int pad = spec.ksize / 2;
    const int oh = conv_out_dim(x.height, spec.ksize, spec.stride, pad);
    const int ow = conv_out_dim(x.width, spec.ksize, spec.stride, pad);
    Image<T> y(oh, ow, spec.out_ch);

    if constexpr (std::is_same_v<T, float>) {
      if (use_wino(x.height, x.width)) {
        if (wino_dirty) {
          auto* self = const_cast<Conv2d*>(this);
          self->wino_w = detail::wino_transform_weights(w, spec.in_ch, spec.out_ch);
          self->wino_dirty = false;
        }
        detail::wino_conv3x3(x.data, x.height, x.width, wino_w, y.data);
        if (b.size()) y.data.rowwise() += b.transpose();
        return y;
      }
    }

    const int cg = spec.in_ch / spec.groups;
    const int og = spec.out_ch / spec.groups;
    const Eigen::Index n = y.pixels();
    const Eigen::Index block = std::min<Eigen::Index>(n, 8192);
    Mat<T> p;
    for (Eigen::Index r0 = 0; r0 < n; r0 += block) {
      const int rows = static_cast<int>(std::min(block, n - r0));
      for (int g = 0; g < spec.groups; ++g) {
        im2col_block(x.data, x.height, x.width, g * cg, cg, spec.ksize,
                     spec.stride, pad, ow, static_cast<int>(r0), rows, p);
        y.data.block(r0, g * og, rows, og).noalias() =
            p * w.middleCols(static_cast<Eigen::Index>(g) * og, og);
      }
    }
    if (b.size()) y.data.rowwise() += b.transpose();
    return y;
  }

  // Accumulates gw/gb and returns the input gradient (if wanted). x must be
  // the same tensor that produced gy through forward().
  Image<T> backward(const Image<T>& x, const Image<T>& gy, bool need_gx = true) {
    const int pad = spec.ksize / 2;
    const int cg = spec.in_ch / spec.groups;
    const int og = spec.out_ch / spec.groups;
    const Eigen::Index n = gy.pixels();

    if (b.size()) gb += gy.data.colwise().sum().transpose();

    // Weight gradient via blocked im2col of x.
    {
      const Eigen::Index block = std::min<Eigen::Index>(n, 8192);
      Mat<T> p;
      for (Eigen::Index r0 = 0; r0 < n; r0 += block) {
        const int rows = static_cast<int>(std::min(block, n - r0));
        for (int g = 0; g < spec.groups; ++g) {
          im2col_block(x.data, x.height, x.width, g * cg, cg, spec.ksize,
                       spec.stride, pad, gy.width, static_cast<int>(r0), rows, p);
          gw.middleCols(static_cast<Eigen::Index>(g) * og, og).noalias() +=
              p.transpose() * gy.data.block(r0, static_cast<Eigen::Index>(g) * og, rows, og);
        }
      }
    }

    Image<T> gx;
    if (!need_gx) return gx;
    gx = Image<T>(x.height, x.width, x.channels);

    if constexpr (std::is_same_v<T, float>) {
      if (use_wino(x.height, x.width)) {
        // Input gradient of a stride-1 3x3 conv is a 3x3 conv of gy with
        // the spatially flipped, in/out-transposed kernel.
        Mat<float> wt(static_cast<Eigen::Index>(9) * spec.out_ch, spec.in_ch);
        for (int ky = 0; ky < 3; ++ky)
          for (int kx = 0; kx < 3; ++kx)
            for (int co = 0; co < spec.out_ch; ++co)
              for (int ci = 0; ci < spec.in_ch; ++ci)
                wt((static_cast<Eigen::Index>(2 - ky) * 3 + (2 - kx)) * spec.out_ch + co,
                   ci) = w((static_cast<Eigen::Index>(ky) * 3 + kx) * spec.in_ch + ci, co);
        Mat<float> wino_wt = detail::wino_transform_weights(wt, spec.out_ch, spec.in_ch);
        detail::wino_conv3x3(gy.data, gy.height, gy.width, wino_wt, gx.data);
        return gx;
      }
    }

    // Generic route: gx = col2im(gy * W^T), per group.
    const Eigen::Index block = std::min<Eigen::Index>(n, 8192);
    Mat<T> pg;
    gx.data.setZero();
    for (Eigen::Index r0 = 0; r0 < n; r0 += block) {
      const int rows = static_cast<int>(std::min(block, n - r0));
      for (int g = 0; g < spec.groups; ++g) {
        pg.noalias() = gy.data.block(r0, static_cast<Eigen::Index>(g) * og, rows, og) *
                       w.middleCols(static_cast<Eigen::Index>(g) * og, og).transpose();
        for (int ky = 0; ky < spec.ksize; ++ky)
          for (int kx = 0; kx < spec.ksize; ++kx)
            for (int ci = 0; ci < cg; ++ci) {
              Eigen::Index col = (static_cast<Eigen::Index>(ky) * spec.ksize + kx) * cg + ci;
              T* dst = gx.data.col(g * cg + ci).data();
              const T* src = pg.col(col).data();
              for (int r = 0; r < rows; ++r) {
                int op = static_cast<int>(r0) + r;
                int oy = op / gy.width, ox = op % gy.width;
                int iy = oy * spec.stride + ky - pad;
                int ix = ox * spec.stride + kx - pad;
                if (iy >= 0 && iy < x.height && ix >= 0 && ix < x.width)
                  dst[static_cast<Eigen::Index>(iy) * x.width + ix] += src[r];
              }
            }
      }
    }
    return gx;
  }

  void mark_weights_changed() { wino_dirty = true; }
};

// ------------------------------------------------------------------- misc

template <typename T>
Image<T> relu(const Image<T>& x) {
  Image<T> y = x;
  y.data = y.data.cwiseMax(T(0));
  return y;
}

template <typename T>
Image<T> relu_backward(const Image<T>& y, const Image<T>& gy) {
  Image<T> gx = gy;
  gx.data = (y.data.array() > T(0)).select(gy.data, Mat<T>::Zero(gy.data.rows(), gy.data.cols()));
  return gx;
}

// 2x2 max pool, stride 2, floor semantics; argmax in {0,1,2,3} per output.
template <typename T>
Image<T> maxpool2(const Image<T>& x, Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>* argmax = nullptr) {
  const int oh = x.height / 2, ow = x.width / 2;
  Image<T> y(oh, ow, x.channels);
  if (argmax) argmax->setZero(y.pixels(), x.channels);
  for (int c = 0; c < x.channels; ++c) {
    const T* src = x.data.col(c).data();
    T* dst = y.data.col(c).data();
    for (int oy = 0; oy < oh; ++oy)
      for (int ox = 0; ox < ow; ++ox) {
        Eigen::Index i00 = (static_cast<Eigen::Index>(oy) * 2) * x.width + ox * 2;
        T v00 = src[i00], v01 = src[i00 + 1];
        T v10 = src[i00 + x.width], v11 = src[i00 + x.width + 1];
        int a = 0;
        T best = v00;
        if (v01 > best) { best = v01; a = 1; }
        if (v10 > best) { best = v10; a = 2; }
        if (v11 > best) { best = v11; a = 3; }
        dst[static_cast<Eigen::Index>(oy) * ow + ox] = best;
        if (argmax) (*argmax)(static_cast<Eigen::Index>(oy) * ow + ox, c) = static_cast<std::uint8_t>(a);
      }
  }
  return y;
}

template <typename T>
Image<T> maxpool2_backward(const Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>& argmax,
                           const Image<T>& gy, int in_h, int in_w) {
  Image<T> gx(in_h, in_w, gy.channels);
  for (int c = 0; c < gy.channels; ++c) {
    const T* g = gy.data.col(c).data();
    T* dst = gx.data.col(c).data();
    for (int oy = 0; oy < gy.height; ++oy)
      for (int ox = 0; ox < gy.width; ++ox) {
        Eigen::Index op = static_cast<Eigen::Index>(oy) * gy.width + ox;
        int a = argmax(op, c);
        Eigen::Index ip = (static_cast<Eigen::Index>(oy) * 2 + a / 2) * in_w + ox * 2 + a % 2;
        dst[ip] += g[op];
      }
  }
  return gx;
}

template <typename T>
Image<T> upsample_nearest2(const Image<T>& x) {
  Image<T> y(x.height * 2, x.width * 2, x.channels);
  for (int c = 0; c < x.channels; ++c) {
    const T* src = x.data.col(c).data();
    T* dst = y.data.col(c).data();
    for (int oy = 0; oy < y.height; ++oy) {
      const T* srow = src + static_cast<Eigen::Index>(oy / 2) * x.width;
      T* drow = dst + static_cast<Eigen::Index>(oy) * y.width;
      for (int ox = 0; ox < y.width; ++ox) drow[ox] = srow[ox / 2];
    }
  }
  return y;
}

template <typename T>
Image<T> upsample_nearest2_backward(const Image<T>& gy, int in_h, int in_w) {
  Image<T> gx(in_h, in_w, gy.channels);
  for (int c = 0; c < gy.channels; ++c) {
    const T* g = gy.data.col(c).data();
    T* dst = gx.data.col(c).data();
    for (int oy = 0; oy < gy.height; ++oy)
      for (int ox = 0; ox < gy.width; ++ox)
        dst[static_cast<Eigen::Index>(oy / 2) * in_w + ox / 2] +=
            g[static_cast<Eigen::Index>(oy) * gy.width + ox];
  }
  return gx;
}

// Bilinear resize with half-pixel centers; sample positions clamp to the
// source footprint so the map is a convex combination everywhere.
template <typename T>
struct BilinearPlan {
  struct Axis {
    int i0, i1;
    T w0, w1;
  };
  std::vector<Axis> ys, xs;
  int in_h, in_w, out_h, out_w;
};

template <typename T>
BilinearPlan<T> make_bilinear_plan(int in_h, int in_w, int out_h, int out_w) {
  BilinearPlan<T> plan;
  plan.in_h = in_h; plan.in_w = in_w; plan.out_h = out_h; plan.out_w = out_w;
  auto fill = [](std::vector<typename BilinearPlan<T>::Axis>& v, int in, int out) {
    v.resize(out);
    const double scale = static_cast<double>(in) / out;
    for (int o = 0; o < out; ++o) {
      double pos = (o + 0.5) * scale - 0.5;
      double f = std::floor(pos);
      int i0 = static_cast<int>(f);
      double t = pos - f;
      int i1 = i0 + 1;
      if (i0 < 0) { i0 = 0; i1 = 0; t = 0.0; }
      if (i1 >= in) { i1 = in - 1; if (i0 >= in) i0 = in - 1; }
      v[o] = {i0, i1, static_cast<T>(1.0 - t), static_cast<T>(t)};
    }
  };
  fill(plan.ys, in_h, out_h);
  fill(plan.xs, in_w, out_w);
  return plan;
}

template <typename T>
Image<T> upsample_bilinear(const Image<T>& x, int out_h, int out_w) {
  auto plan = make_bilinear_plan<T>(x.height, x.width, out_h, out_w);
  Image<T> y(out_h, out_w, x.channels);
  for (int c = 0; c < x.channels; ++c) {
    const T* src = x.data.col(c).data();
    T* dst = y.data.col(c).data();
    for (int oy = 0; oy < out_h; ++oy) {
      const auto& ay = plan.ys[oy];
      const T* r0 = src + static_cast<Eigen::Index>(ay.i0) * x.width;
      const T* r1 = src + static_cast<Eigen::Index>(ay.i1) * x.width;
      T* drow = dst + static_cast<Eigen::Index>(oy) * out_w;
      for (int ox = 0; ox < out_w; ++ox) {
        const auto& axp = plan.xs[ox];
        drow[ox] = ay.w0 * (axp.w0 * r0[axp.i0] + axp.w1 * r0[axp.i1]) +
                   ay.w1 * (axp.w0 * r1[axp.i0] + axp.w1 * r1[axp.i1]);
      }
    }
  }
  return y;
}

template <typename T>
Image<T> upsample_bilinear_backward(const Image<T>& gy, int in_h, int in_w) {
  auto plan = make_bilinear_plan<T>(in_h, in_w, gy.height, gy.width);
  Image<T> gx(in_h, in_w, gy.channels);
  for (int c = 0; c < gy.channels; ++c) {
    const T* g = gy.data.col(c).data();
    T* dst = gx.data.col(c).data();
    for (int oy = 0; oy < gy.height; ++oy) {
      const auto& ay = plan.ys[oy];
      for (int ox = 0; ox < gy.width; ++ox) {
        const auto& axp = plan.xs[ox];
        T v = g[static_cast<Eigen::Index>(oy) * gy.width + ox];
        dst[static_cast<Eigen::Index>(ay.i0) * in_w + axp.i0] += ay.w0 * axp.w0 * v;
        dst[static_cast<Eigen::Index>(ay.i0) * in_w + axp.i1] += ay.w0 * axp.w1 * v;
        dst[static_cast<Eigen::Index>(ay.i1) * in_w + axp.i0] += ay.w1 * axp.w0 * v;
        dst[static_cast<Eigen::Index>(ay.i1) * in_w + axp.i1] += ay.w1 * axp.w1 * v;
      }
    }
  }
  return gx;
}

// ------------------------------------------------------------ GroupNorm --

template <typename T>
struct GroupNorm {
  int channels = 0, groups = 1;
  T eps = static_cast<T>(1e-5);
  Vec<T> gamma, beta, ggamma, gbeta;

  struct Cache {
    Image<T> xhat;
    Vec<T> invstd;  // per group
  };

  GroupNorm() = default;
  GroupNorm(int c, int g) : channels(c), groups(g) {
    if (c % g) throw ConfigError("GroupNorm channels not divisible by groups");
    gamma.setOnes(c);
    beta.setZero(c);
    zero_grad();
  }

  void zero_grad() {
    ggamma.setZero(channels);
    gbeta.setZero(channels);
  }

  Eigen::Index param_count() const { return gamma.size() + beta.size(); }

  Image<T> forward(const Image<T>& x, Cache* cache = nullptr) const {
    const int cg = channels / groups;
    Image<T> y(x.height, x.width, x.channels);
    Image<T> xhat(x.height, x.width, x.channels);
    Vec<T> invstd(groups);
    const Eigen::Index n = x.pixels();
    for (int g = 0; g < groups; ++g) {
      auto blk = x.data.middleCols(static_cast<Eigen::Index>(g) * cg, cg);
      T mean = blk.sum() / static_cast<T>(n * cg);
      T var = (blk.array() - mean).square().sum() / static_cast<T>(n * cg);
      T is = T(1) / std::sqrt(var + eps);
      invstd(g) = is;
      xhat.data.middleCols(static_cast<Eigen::Index>(g) * cg, cg) =
          (blk.array() - mean) * is;
    }
    for (int c = 0; c < channels; ++c)
      y.data.col(c) = xhat.data.col(c) * gamma(c) + Vec<T>::Constant(n, beta(c));
    if (cache) {
      cache->xhat = std::move(xhat);
      cache->invstd = invstd;
    }
    return y;
  }

  Image<T> backward(const Cache& cache, const Image<T>& gy) {
    const int cg = channels / groups;
    const Eigen::Index n = gy.pixels();
    Image<T> gx(gy.height, gy.width, gy.channels);
    for (int c = 0; c < channels; ++c) {
      ggamma(c) += (gy.data.col(c).array() * cache.xhat.data.col(c).array()).sum();
      gbeta(c) += gy.data.col(c).sum();
    }
    const T m = static_cast<T>(n * cg);
    for (int g = 0; g < groups; ++g) {
      auto xh = cache.xhat.data.middleCols(static_cast<Eigen::Index>(g) * cg, cg);
      Mat<T> gxh(n, cg);
      for (int j = 0; j < cg; ++j) gxh.col(j) = gy.data.col(g * cg + j) * gamma(g * cg + j);
      T sum_g = gxh.sum();
      T sum_gx = (gxh.array() * xh.array()).sum();
      gx.data.middleCols(static_cast<Eigen::Index>(g) * cg, cg) =
          ((gxh.array() - sum_g / m) - xh.array() * (sum_gx / m)) * cache.invstd(g);
    }
    return gx;
  }
};

// Row-wise softmax with max subtraction.
template <typename T>
Mat<T> softmax_rows(const Mat<T>& s) {
  Mat<T> a(s.rows(), s.cols());
  for (Eigen::Index i = 0; i < s.rows(); ++i) {
    T mx = s.row(i).maxCoeff();
    a.row(i) = (s.row(i).array() - mx).exp();
    a.row(i) /= a.row(i).sum();
  }
  return a;
}

// dS given A = softmax(S) and dA.
template <typename T>
Mat<T> softmax_rows_backward(const Mat<T>& a, const Mat<T>& ga) {
  Mat<T> gs(a.rows(), a.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    T dot = a.row(i).dot(ga.row(i));
    gs.row(i) = a.row(i).array() * (ga.row(i).array() - dot);
  }
  return gs;
}

}  // namespace shiftcd::nn
