#pragma once

#include <array>
#include <string>

#include "shiftcd/container.hpp"
#include "shiftcd/nn.hpp"

namespace shiftcd {

// Frozen multi-scale feature extractor: the VGG-16 layer stack up to the
// third block's first activation, tapped at the first activation of each
// block. Shapes for an H x W input: H x W x c1, H/2 x W/2 x c2, H/4 x W/4 x c3.
struct BackboneSpec {
  int c1 = 64;
  int c2 = 128;
  int c3 = 256;

  int fused_channels() const { return c1 + c2 + c3; }
  bool operator==(const BackboneSpec&) const = default;
};

inline constexpr std::array<const char*, 3> kTapNames = {"ReLU1_1", "ReLU2_1",
                                                         "ReLU3_1"};

// Channel statistics the published backbone was trained with; inputs are
// standardized by these before the first convolution.
inline constexpr std::array<float, 3> kInputMean = {0.485f, 0.456f, 0.406f};
inline constexpr std::array<float, 3> kInputStd = {0.229f, 0.224f, 0.225f};

template <typename T>
struct FeaturePyramid {
  std::array<Image<T>, 3> levels;
};

template <typename T>
struct EncodeCache {
  int in_h = 0, in_w = 0;
  Image<T> x_std;
  Image<T> a1, a2, p1, a3, a4, p2, a5;
  Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> arg1, arg2;
};

template <typename T>
class Backbone {
 public:
  Backbone() = default;

  explicit Backbone(BackboneSpec spec) : spec_(spec) {
    using nn::ConvSpec;
    conv1_1_ = nn::Conv2d<T>(ConvSpec{3, spec.c1, 3, 1, 1, true});
    conv1_2_ = nn::Conv2d<T>(ConvSpec{spec.c1, spec.c1, 3, 1, 1, true});
    conv2_1_ = nn::Conv2d<T>(ConvSpec{spec.c1, spec.c2, 3, 1, 1, true});
    conv2_2_ = nn::Conv2d<T>(ConvSpec{spec.c2, spec.c2, 3, 1, 1, true});
    conv3_1_ = nn::Conv2d<T>(ConvSpec{spec.c2, spec.c3, 3, 1, 1, true});
  }

  const BackboneSpec& spec() const { return spec_; }
  std::uint64_t checksum() const { return checksum_; }

  FeaturePyramid<T> encode(const Image<T>& image) const {
    EncodeCache<T> scratch;
    return encode_impl(image, scratch, false);
  }

  FeaturePyramid<T> encode_cached(const Image<T>& image, EncodeCache<T>& cache) const {
    return encode_impl(image, cache, true);
  }

  // Gradient of a scalar loss w.r.t. the encoder INPUT given gradients at
  // the three taps. Weights are frozen, so no weight gradients exist here.
  Image<T> backward_to_input(const EncodeCache<T>& cache, const Image<T>& g1,
                             const Image<T>& g2, const Image<T>& g3) const {
    auto& c11 = const_cast<nn::Conv2d<T>&>(conv1_1_);
    auto& c12 = const_cast<nn::Conv2d<T>&>(conv1_2_);
    auto& c21 = const_cast<nn::Conv2d<T>&>(conv2_1_);
    auto& c22 = const_cast<nn::Conv2d<T>&>(conv2_2_);
    auto& c31 = const_cast<nn::Conv2d<T>&>(conv3_1_);

    Image<T> gz5 = nn::relu_backward(cache.a5, g3);
    Image<T> gp2 = c31.backward(cache.p2, gz5, true, false);
    Image<T> ga4 = nn::maxpool2_backward(cache.arg2, gp2, cache.a4.height, cache.a4.width);
    Image<T> gz4 = nn::relu_backward(cache.a4, ga4);
    Image<T> ga3 = c22.backward(cache.a3, gz4, true, false);
    ga3.data += g2.data;
    Image<T> gz3 = nn::relu_backward(cache.a3, ga3);
    Image<T> gp1 = c21.backward(cache.p1, gz3, true, false);
    Image<T> ga2 = nn::maxpool2_backward(cache.arg1, gp1, cache.a2.height, cache.a2.width);
    Image<T> gz2 = nn::relu_backward(cache.a2, ga2);
    Image<T> ga1 = c12.backward(cache.a1, gz2, true, false);
    ga1.data += g1.data;
    Image<T> gz1 = nn::relu_backward(cache.a1, ga1);
    Image<T> gx = c11.backward(cache.x_std, gz1, true, false);
    for (int ch = 0; ch < 3; ++ch) gx.data.col(ch) /= static_cast<T>(kInputStd[ch]);
    return gx;
  }

  std::vector<const nn::Conv2d<T>*> convs() const {
    return {&conv1_1_, &conv1_2_, &conv2_1_, &conv2_2_, &conv3_1_};
  }
  std::vector<nn::Conv2d<T>*> convs_mut() {
    return {&conv1_1_, &conv1_2_, &conv2_1_, &conv2_2_, &conv3_1_};
  }
  void set_checksum(std::uint64_t v) { checksum_ = v; }

 private:
  FeaturePyramid<T> encode_impl(const Image<T>& image, EncodeCache<T>& c,
                                bool keep) const {
    if (image.channels != 3) throw DimensionError("encoder expects 3-channel input");
    Image<T> x = image;
    for (int ch = 0; ch < 3; ++ch)
      x.data.col(ch) = (x.data.col(ch).array() - static_cast<T>(kInputMean[ch])) /
                       static_cast<T>(kInputStd[ch]);

    Image<T> a1 = nn::relu(conv1_1_.forward(x));
    Image<T> a2 = nn::relu(conv1_2_.forward(a1));
    Image<T> p1 = nn::maxpool2(a2, keep ? &c.arg1 : nullptr);
    Image<T> a3 = nn::relu(conv2_1_.forward(p1));
    Image<T> a4 = nn::relu(conv2_2_.forward(a3));
    Image<T> p2 = nn::maxpool2(a4, keep ? &c.arg2 : nullptr);
    Image<T> a5 = nn::relu(conv3_1_.forward(p2));

    FeaturePyramid<T> pyr{{a1, a3, a5}};
    if (keep) {
      c.in_h = image.height;
      c.in_w = image.width;
      c.x_std = std::move(x);
      c.a1 = std::move(a1);
      c.a2 = std::move(a2);
      c.p1 = std::move(p1);
      c.a3 = std::move(a3);
      c.a4 = std::move(a4);
      c.p2 = std::move(p2);
      c.a5 = std::move(a5);
    }
    return pyr;
  }

  BackboneSpec spec_;
  nn::Conv2d<T> conv1_1_, conv1_2_, conv2_1_, conv2_2_, conv3_1_;
  std::uint64_t checksum_ = 0;
};

// Coarser levels bilinearly upsampled to the finest resolution and
// concatenated along channels in level order.
template <typename T>
Image<T> fuse_pyramid(const FeaturePyramid<T>& pyr, int target_h, int target_w) {
  const auto& l0 = pyr.levels[0];
  if (l0.height == 0) throw DimensionError("empty pyramid");
  if (l0.height != target_h || l0.width != target_w)
    throw DimensionError("fuse target must equal finest pyramid resolution");
  int total = 0;
  for (const auto& l : pyr.levels) total += l.channels;
  Image<T> out(target_h, target_w, total);
  int col = 0;
  for (const auto& l : pyr.levels) {
    Image<T> up = (l.height == target_h && l.width == target_w)
                      ? l
                      : nn::upsample_bilinear(l, target_h, target_w);
    out.data.middleCols(col, l.channels) = up.data;
    col += l.channels;
  }
  return out;
}

// Per-pixel channel-averaged squared Euclidean distance.
template <typename T>
Image<T> difference_map(const Image<T>& f1, const Image<T>& f2) {
  if (!f1.same_shape(f2)) throw DimensionError("difference_map shape mismatch");
  Image<T> d(f1.height, f1.width, 1);
  d.data.col(0) = (f1.data - f2.data).array().square().rowwise().mean();
  return d;
}

// ------------------------------------------------------------ weight IO --

// He-initialized deterministic weight set with the standard topology. Used
// when no published checkpoint is available; the gain keeps tap activations
// in the range where the translation losses operate well together.
NamedArrays make_surrogate_backbone_arrays(const BackboneSpec& spec, std::uint64_t seed,
                                           double gain);
void write_surrogate_backbone(const std::string& path, const BackboneSpec& spec,
                              std::uint64_t seed, double gain);

template <typename T>
Backbone<T> backbone_from_arrays(const NamedArrays& c, std::uint64_t checksum) {
  BackboneSpec spec;
  spec.c1 = std::stoi(c.meta.at("c1"));
  spec.c2 = std::stoi(c.meta.at("c2"));
  spec.c3 = std::stoi(c.meta.at("c3"));
  Backbone<T> bb(spec);
  const char* names[5] = {"conv1_1", "conv1_2", "conv2_1", "conv2_2", "conv3_1"};
  auto convs = bb.convs_mut();
  for (int i = 0; i < 5; ++i) {
    const auto& wa = c.get(std::string(names[i]) + ".weight");
    const auto& ba = c.get(std::string(names[i]) + ".bias");
    auto& conv = *convs[i];
    if (wa.shape.size() != 2 || wa.shape[0] != conv.w.rows() || wa.shape[1] != conv.w.cols())
      throw FormatError("backbone weight shape mismatch for " + std::string(names[i]));
    for (Eigen::Index r = 0; r < conv.w.rows(); ++r)
      for (Eigen::Index col = 0; col < conv.w.cols(); ++col)
        conv.w(r, col) = static_cast<T>(wa.data[static_cast<std::size_t>(r * conv.w.cols() + col)]);
    for (Eigen::Index j = 0; j < conv.b.size(); ++j)
      conv.b(j) = static_cast<T>(ba.data[static_cast<std::size_t>(j)]);
    conv.mark_weights_changed();
  }
  bb.set_checksum(checksum);
  return bb;
}

template <typename T>
Backbone<T> load_backbone(const std::string& path) {
  NamedArrays c = load_container(path);
  if (c.kind != "backbone")
    throw ConfigError("not a backbone weight file: " + path);
  return backbone_from_arrays<T>(c, file_checksum(path));
}

}  // namespace shiftcd
