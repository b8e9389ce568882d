#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>

#include "shiftcd/io.hpp"

using namespace shiftcd;

namespace {

std::string tmp_path(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "shiftcd_io_test";
  std::filesystem::create_directories(dir);
  return (dir / name).string();
}

}  // namespace

TEST_CASE("png round trip, 8-bit normalization") {
  Raster im(5, 7, 3);
  for (Eigen::Index p = 0; p < im.pixels(); ++p)
    for (int c = 0; c < 3; ++c) im.data(p, c) = static_cast<float>((p * 3 + c) % 256) / 255.0f;
  im.data(0, 0) = 1.0f;  // max pixel 255
  auto path = tmp_path("rt.png");
  save_png8(im, path);
  Raster back = load_raster(path).image;
  REQUIRE(back.same_shape(im));
  CHECK(back.data.maxCoeff() == doctest::Approx(1.0));
  CHECK((back.data - im.data).cwiseAbs().maxCoeff() < 0.5f / 255.0f + 1e-6f);
}

TEST_CASE("all-zero image stays all-zero") {
  Raster im(4, 4, 1);
  auto path = tmp_path("zero.png");
  save_png8(im, path);
  Raster back = load_raster(path).image;
  CHECK(back.data.maxCoeff() == 0.0f);
  CHECK(back.data.minCoeff() == 0.0f);
}

TEST_CASE("16-bit tiff normalizes by bit depth") {
  // Hand-build a 1x1 16-bit gray TIFF with value 32768.
  auto path = tmp_path("u16.tif");
  {
    std::vector<std::uint8_t> samples = {0x00, 0x80};  // 32768 LE
    // Reuse the writer through a float detour is not possible; craft minimal file.
    std::FILE* f = std::fopen(path.c_str(), "wb");
    REQUIRE(f);
    auto w16 = [&](std::uint16_t v) { std::fwrite(&v, 2, 1, f); };
    auto w32 = [&](std::uint32_t v) { std::fwrite(&v, 4, 1, f); };
    std::fwrite("II", 2, 1, f);
    w16(42);
    w32(8);
    w16(8);  // entries
    auto entry = [&](std::uint16_t id, std::uint16_t type, std::uint32_t count, std::uint32_t val) {
      w16(id); w16(type); w32(count); w32(val);
    };
    entry(256, 4, 1, 1);           // width
    entry(257, 4, 1, 1);           // height
    entry(258, 3, 1, 16);          // bits
    entry(259, 3, 1, 1);           // uncompressed
    entry(262, 3, 1, 1);           // gray
    entry(273, 4, 1, 110);         // strip offset
    entry(277, 3, 1, 1);           // samples/pixel
    entry(279, 4, 1, 2);           // strip bytes
    w32(0);                        // next IFD
    std::fseek(f, 110, SEEK_SET);
    std::fwrite(samples.data(), 1, 2, f);
    std::fclose(f);
  }
  Raster im = load_raster(path).image;
  REQUIRE(im.pixels() == 1);
  CHECK(im.data(0, 0) == doctest::Approx(32768.0 / 65535.0).epsilon(1e-6));
}

TEST_CASE("float tiff round trip with geo sidecar") {
  Raster im(3, 4, 1);
  for (Eigen::Index p = 0; p < im.pixels(); ++p) im.data(p, 0) = 0.125f * static_cast<float>(p);
  GeoSidecar geo;
  std::vector<std::uint8_t> scale(3 * 8, 0);
  scale[0] = 0x3f;
  geo.tags.push_back({33550, 12, 3, scale});  // ModelPixelScale, 3 doubles
  auto path = tmp_path("f32.tif");
  save_tiff_f32(im, path, geo, {{"shiftcd:digest", "deadbeef"}});
  LoadedRaster back = load_raster(path);
  REQUIRE(back.image.same_shape(im));
  CHECK((back.image.data - im.data).cwiseAbs().maxCoeff() == 0.0f);
  REQUIRE(back.geo.has_value());
  REQUIRE(back.geo->tags.size() == 1);
  CHECK(back.geo->tags[0].id == 33550);
  CHECK(back.geo->tags[0].payload == scale);
}

TEST_CASE("change map encodes {0,255} and reloads to {0,1}") {
  MapU8 m(2, 2, 1);
  m.at(0, 0, 0) = 1;
  m.at(1, 1, 0) = 1;
  auto path = tmp_path("cm.png");
  save_change_map(m, path, {{"shiftcd:seed", "42"}});
  MapU8 back = load_change_map(path);
  CHECK((back.data.array() == m.data.array()).all());
  Raster raw = load_raster(path).image;
  CHECK(raw.data.maxCoeff() == doctest::Approx(1.0));  // 255 / 255
  auto meta = read_png_text(path);
  CHECK(meta.at("shiftcd:seed") == "42");
}

TEST_CASE("trinary map uses {0,128,255}") {
  MapU8 m(1, 3, 1);
  m.at(0, 0, 0) = kUnchanged;
  m.at(0, 1, 0) = kUndecided;
  m.at(0, 2, 0) = kChanged;
  auto path = tmp_path("tri.png");
  save_trinary_map(m, path);
  Raster raw = load_raster(path).image;
  CHECK(raw.data(0, 0) == doctest::Approx(0.0));
  CHECK(raw.data(1, 0) == doctest::Approx(128.0 / 255.0));
  CHECK(raw.data(2, 0) == doctest::Approx(1.0));
}

TEST_CASE("missing file raises io error") {
  CHECK_THROWS_AS(load_raster(tmp_path("missing_file.png")), IoError);
}

TEST_CASE("garbage magic raises format error") {
  auto path = tmp_path("garbage.bin");
  std::FILE* f = std::fopen(path.c_str(), "wb");
  std::fwrite("nonsense", 1, 8, f);
  std::fclose(f);
  CHECK_THROWS_AS(load_raster(path), FormatError);
}
