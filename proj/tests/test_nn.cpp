#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "shiftcd/nn.hpp"

using namespace shiftcd;
using namespace shiftcd::nn;

namespace {

template <typename T>
Image<T> random_image(int h, int w, int c, std::uint64_t seed) {
  Rng rng(seed);
  Image<T> im(h, w, c);
  for (Eigen::Index p = 0; p < im.pixels(); ++p)
    for (int ch = 0; ch < c; ++ch) im.data(p, ch) = static_cast<T>(rng.normal());
  return im;
}

template <typename T>
void randomize(Conv2d<T>& conv, std::uint64_t seed) {
  Rng rng(seed);
  for (Eigen::Index i = 0; i < conv.w.size(); ++i)
    conv.w.data()[i] = static_cast<T>(rng.normal() * 0.2);
  for (Eigen::Index i = 0; i < conv.b.size(); ++i)
    conv.b.data()[i] = static_cast<T>(rng.normal() * 0.1);
  conv.mark_weights_changed();
}

// Reference conv, plain loops.
template <typename T>
Image<T> conv_reference(const Conv2d<T>& conv, const Image<T>& x) {
  const auto& s = conv.spec;
  const int pad = s.ksize / 2;
  const int oh = conv_out_dim(x.height, s.ksize, s.stride, pad);
  const int ow = conv_out_dim(x.width, s.ksize, s.stride, pad);
  const int cg = s.in_ch / s.groups, og = s.out_ch / s.groups;
  Image<T> y(oh, ow, s.out_ch);
  for (int co = 0; co < s.out_ch; ++co) {
    const int g = co / og;
    for (int oy = 0; oy < oh; ++oy)
      for (int ox = 0; ox < ow; ++ox) {
        double acc = conv.b.size() ? static_cast<double>(conv.b(co)) : 0.0;
        for (int ky = 0; ky < s.ksize; ++ky)
          for (int kx = 0; kx < s.ksize; ++kx)
            for (int ci = 0; ci < cg; ++ci) {
              int iy = oy * s.stride + ky - pad, ix = ox * s.stride + kx - pad;
              if (iy < 0 || iy >= x.height || ix < 0 || ix >= x.width) continue;
              acc += static_cast<double>(
                         x.at(iy, ix, g * cg + ci)) *
                     static_cast<double>(conv.w(
                         (static_cast<Eigen::Index>(ky) * s.ksize + kx) * cg + ci, co));
            }
        y.at(oy, ox, co) = static_cast<T>(acc);
      }
  }
  return y;
}

// Central finite differences of scalar(theta) -> loss for one parameter slot.
template <typename F>
double central_diff(F&& eval, double* slot, double eps) {
  double orig = *slot;
  *slot = orig + eps;
  double up = eval();
  *slot = orig - eps;
  double dn = eval();
  *slot = orig;
  return (up - dn) / (2 * eps);
}

}  // namespace

TEST_CASE("direct conv matches reference across configs") {
  struct Cfg { int h, w, cin, cout, stride, groups; };
  for (auto [h, w, cin, cout, stride, groups] :
       {Cfg{9, 11, 3, 5, 1, 1}, Cfg{8, 8, 4, 6, 2, 2}, Cfg{12, 7, 8, 8, 1, 4},
        Cfg{16, 16, 6, 4, 2, 1}}) {
    Conv2d<double> conv(ConvSpec{cin, cout, 3, stride, groups, true});
    randomize(conv, 11);
    auto x = random_image<double>(h, w, cin, 21);
    auto y = conv.forward(x);
    auto ref = conv_reference(conv, x);
    REQUIRE(y.same_shape(ref));
    CHECK((y.data - ref.data).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("winograd float path matches direct path") {
  for (auto [h, w] : {std::pair{16, 16}, {17, 13}, {64, 64}, {30, 34}}) {
    Conv2d<float> conv(ConvSpec{32, 32, 3, 1, 1, true});
    randomize(conv, 31);
    auto x = random_image<float>(h, w, 32, 41);
    REQUIRE(conv.use_wino(h, w));
    auto fast = conv.forward(x);
    auto ref = conv_reference(conv, x);
    double denom = static_cast<double>(ref.data.cwiseAbs().maxCoeff());
    CHECK((fast.data - ref.data).template cast<double>().cwiseAbs().maxCoeff() / denom < 2e-5);
  }
}

TEST_CASE("winograd backward-data matches generic route") {
  Conv2d<float> fast(ConvSpec{32, 48, 3, 1, 1, true});
  randomize(fast, 7);
  Conv2d<double> slow(ConvSpec{32, 48, 3, 1, 1, true});
  slow.w = fast.w.cast<double>();
  slow.b = fast.b.cast<double>();
  auto xf = random_image<float>(20, 22, 32, 8);
  Image<double> xd(20, 22, 32);
  xd.data = xf.data.cast<double>();
  auto gyf = random_image<float>(20, 22, 48, 9);
  Image<double> gyd(20, 22, 48);
  gyd.data = gyf.data.cast<double>();
  auto gxf = fast.backward(xf, gyf);
  auto gxd = slow.backward(xd, gyd);
  double denom = gxd.data.cwiseAbs().maxCoeff();
  CHECK((gxf.data.cast<double>() - gxd.data).cwiseAbs().maxCoeff() / denom < 2e-4);
  CHECK((fast.gw.cast<double>() - slow.gw).cwiseAbs().maxCoeff() /
            slow.gw.cwiseAbs().maxCoeff() <
        2e-4);
}

TEST_CASE("conv gradients agree with finite differences") {
  for (auto [stride, groups] : {std::pair{1, 1}, {2, 1}, {1, 2}, {2, 2}}) {
    Conv2d<double> conv(ConvSpec{4, 6, 3, stride, groups, true});
    randomize(conv, 100 + static_cast<std::uint64_t>(stride * 10 + groups));
    auto x = random_image<double>(7, 9, 4, 55);
    auto seed = random_image<double>(conv.forward(x).height, conv.forward(x).width, 6, 66);

    auto loss = [&] { return (conv.forward(x).data.array() * seed.data.array()).sum(); };
    conv.zero_grad();
    auto gx = conv.backward(x, seed);

    Rng pick(5);
    for (int trial = 0; trial < 6; ++trial) {
      Eigen::Index wi = static_cast<Eigen::Index>(pick.below(static_cast<std::uint64_t>(conv.w.size())));
      double fd = central_diff(loss, conv.w.data() + wi, 1e-6);
      CHECK(conv.gw.data()[wi] == doctest::Approx(fd).epsilon(1e-5));
    }
    Eigen::Index bi = static_cast<Eigen::Index>(pick.below(static_cast<std::uint64_t>(conv.b.size())));
    double fdb = central_diff(loss, conv.b.data() + bi, 1e-6);
    CHECK(conv.gb.data()[bi] == doctest::Approx(fdb).epsilon(1e-5));
    for (int trial = 0; trial < 6; ++trial) {
      Eigen::Index xi = static_cast<Eigen::Index>(pick.below(static_cast<std::uint64_t>(x.data.size())));
      double fdx = central_diff(loss, x.data.data() + xi, 1e-6);
      CHECK(gx.data.data()[xi] == doctest::Approx(fdx).epsilon(1e-5));
    }
  }
}

TEST_CASE("maxpool forward/backward") {
  auto x = random_image<double>(6, 8, 3, 77);
  Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> arg;
  auto y = maxpool2(x, &arg);
  CHECK(y.height == 3);
  CHECK(y.width == 4);
  auto seed = random_image<double>(3, 4, 3, 78);
  auto gx = maxpool2_backward(arg, seed, 6, 8);
  auto loss = [&] { return (maxpool2(x).data.array() * seed.data.array()).sum(); };
  Rng pick(9);
  for (int trial = 0; trial < 8; ++trial) {
    Eigen::Index xi = static_cast<Eigen::Index>(pick.below(static_cast<std::uint64_t>(x.data.size())));
    double fd = central_diff(loss, x.data.data() + xi, 1e-6);
    CHECK(gx.data.data()[xi] == doctest::Approx(fd).epsilon(1e-6));
  }
}

TEST_CASE("group norm normalizes per group before affine") {
  GroupNorm<double> gn(8, 4);
  auto x = random_image<double>(10, 10, 8, 13);
  x.data.array() += 2.5;  // nonzero mean
  auto y = gn.forward(x);
  for (int g = 0; g < 4; ++g) {
    auto blk = y.data.middleCols(g * 2, 2);
    double mean = blk.mean();
    double var = (blk.array() - mean).square().mean();
    CHECK(std::abs(mean) < 1e-10);
    CHECK(var == doctest::Approx(1.0).epsilon(1e-3));  // eps shrinks it slightly
  }
}

TEST_CASE("group norm backward matches finite differences") {
  GroupNorm<double> gn(6, 3);
  Rng rng(3);
  for (int i = 0; i < 6; ++i) {
    gn.gamma(i) = 0.5 + rng.uniform();
    gn.beta(i) = rng.normal() * 0.3;
  }
  auto x = random_image<double>(5, 4, 6, 19);
  auto seed = random_image<double>(5, 4, 6, 20);
  auto loss = [&] { return (gn.forward(x).data.array() * seed.data.array()).sum(); };

  GroupNorm<double>::Cache cache;
  gn.forward(x, &cache);
  gn.zero_grad();
  auto gx = gn.backward(cache, seed);

  Rng pick(21);
  for (int trial = 0; trial < 8; ++trial) {
    Eigen::Index xi = static_cast<Eigen::Index>(pick.below(static_cast<std::uint64_t>(x.data.size())));
    double fd = central_diff(loss, x.data.data() + xi, 1e-6);
    CHECK(gx.data.data()[xi] == doctest::Approx(fd).epsilon(2e-4));
  }
  for (int i = 0; i < 6; ++i) {
    double fdg = central_diff(loss, gn.gamma.data() + i, 1e-6);
    double fdb = central_diff(loss, gn.beta.data() + i, 1e-6);
    CHECK(gn.ggamma(i) == doctest::Approx(fdg).epsilon(1e-5));
    CHECK(gn.gbeta(i) == doctest::Approx(fdb).epsilon(1e-5));
  }
}

TEST_CASE("bilinear resize is adjoint-consistent and convex") {
  auto x = random_image<double>(5, 6, 2, 30);
  auto y = upsample_bilinear(x, 13, 17);
  CHECK(y.data.maxCoeff() <= x.data.maxCoeff() + 1e-12);
  CHECK(y.data.minCoeff() >= x.data.minCoeff() - 1e-12);

  auto gy = random_image<double>(13, 17, 2, 31);
  auto gx = upsample_bilinear_backward(gy, 5, 6);
  double lhs = (y.data.array() * gy.data.array()).sum();
  double rhs = (x.data.array() * gx.data.array()).sum();
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));

  auto cst = Image<double>::constant(4, 4, 1, 3.25);
  auto up = upsample_bilinear(cst, 9, 11);
  CHECK((up.data.array() - 3.25).abs().maxCoeff() < 1e-12);
}

TEST_CASE("nearest upsample forward/backward") {
  auto x = random_image<double>(3, 4, 2, 40);
  auto y = upsample_nearest2(x);
  CHECK(y.height == 6);
  CHECK(y.at(5, 7, 1) == x.at(2, 3, 1));
  auto gy = random_image<double>(6, 8, 2, 41);
  auto gx = upsample_nearest2_backward(gy, 3, 4);
  double lhs = (y.data.array() * gy.data.array()).sum();
  double rhs = (x.data.array() * gx.data.array()).sum();
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}

TEST_CASE("softmax rows normalize and differentiate") {
  Mat<double> s(3, 4);
  Rng rng(50);
  for (int i = 0; i < 12; ++i) s.data()[i] = rng.normal() * 3;
  auto a = softmax_rows(s);
  for (int i = 0; i < 3; ++i) CHECK(a.row(i).sum() == doctest::Approx(1.0).epsilon(1e-12));

  Mat<double> ga(3, 4);
  for (int i = 0; i < 12; ++i) ga.data()[i] = rng.normal();
  auto gs = softmax_rows_backward(a, ga);
  for (int trial = 0; trial < 6; ++trial) {
    Eigen::Index i = static_cast<Eigen::Index>(rng.below(12));
    auto loss = [&] { return (softmax_rows(s).array() * ga.array()).sum(); };
    double fd = central_diff(loss, s.data() + i, 1e-6);
    CHECK(gs.data()[i] == doctest::Approx(fd).epsilon(1e-5));
  }
}
