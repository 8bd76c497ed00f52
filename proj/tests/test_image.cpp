#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <jpeglib.h>

#include "vimix/image.hpp"
#include "vimix/rng.hpp"
#include "vimix/synth.hpp"

using namespace vimix;
namespace fs = std::filesystem;

namespace {

void write_test_jpeg(const fs::path& path, const std::uint8_t* gray, int w, int h) {
  jpeg_compress_struct cinfo;
  jpeg_error_mgr jerr;
  cinfo.err = jpeg_std_error(&jerr);
  jpeg_create_compress(&cinfo);
  std::FILE* f = std::fopen(path.string().c_str(), "wb");
  REQUIRE(f != nullptr);
  jpeg_stdio_dest(&cinfo, f);
  cinfo.image_width = static_cast<JDIMENSION>(w);
  cinfo.image_height = static_cast<JDIMENSION>(h);
  cinfo.input_components = 1;
  cinfo.in_color_space = JCS_GRAYSCALE;
  jpeg_set_defaults(&cinfo);
  jpeg_set_quality(&cinfo, 95, TRUE);
  jpeg_start_compress(&cinfo, TRUE);
  while (cinfo.next_scanline < cinfo.image_height) {
    JSAMPROW row = const_cast<JSAMPROW>(gray + cinfo.next_scanline * w);
    jpeg_write_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_compress(&cinfo);
  jpeg_destroy_compress(&cinfo);
  std::fclose(f);
}

fs::path temp_dir() {
  const fs::path dir = fs::temp_directory_path() / "vimix_test_image";
  fs::create_directories(dir);
  return dir;
}

ImageTensor random_tensor(std::uint64_t seed, int c, int h, int w) {
  CounterRng rng(seed);
  std::vector<PlaneU8> planes(c, PlaneU8(h, w));
  for (auto& p : planes)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) p(y, x) = static_cast<std::uint8_t>(rng.next_below(256));
  return ImageTensor(std::move(planes));
}

}  // namespace

TEST_CASE("tensor invariants") {
  const ImageTensor t = ImageTensor::filled(3, 4, 5, 7);
  CHECK(t.channel_count() == 3);
  CHECK(t.height() == 4);
  CHECK(t.width() == 5);
  CHECK(t.sample_count() == 60);
  CHECK_THROWS(ImageTensor(std::vector<PlaneU8>{}));
  std::vector<PlaneU8> mismatched{PlaneU8(2, 2), PlaneU8(2, 3)};
  CHECK_THROWS(ImageTensor(std::move(mismatched)));
}

TEST_CASE("split_regions tiles exactly") {
  SUBCASE("224x224 ws=8") {
    const auto regions = split_regions(224, 224, 8);
    CHECK(regions.size() == 784);
    for (const Region& r : regions) {
      CHECK(r.w == 8);
      CHECK(r.h == 8);
    }
  }
  SUBCASE("10x10 ws=4 residuals keep true size") {
    const auto regions = split_regions(10, 10, 4);
    CHECK(regions.size() == 9);
    int n44 = 0, n42 = 0, n24 = 0, n22 = 0;
    for (const Region& r : regions) {
      if (r.w == 4 && r.h == 4) ++n44;
      if (r.w == 2 && r.h == 4) ++n42;
      if (r.w == 4 && r.h == 2) ++n24;
      if (r.w == 2 && r.h == 2) ++n22;
    }
    CHECK(n44 == 4);
    CHECK(n42 == 2);
    CHECK(n24 == 2);
    CHECK(n22 == 1);
  }
  SUBCASE("ws=1 gives unit regions") {
    CHECK(split_regions(13, 7, 1).size() == 13 * 7);
  }
  SUBCASE("coverage-count property") {
    CounterRng rng(100);
    for (int trial = 0; trial < 20; ++trial) {
      const int w = 1 + static_cast<int>(rng.next_below(60));
      const int h = 1 + static_cast<int>(rng.next_below(60));
      const int ws = 1 + static_cast<int>(rng.next_below(17));
      std::vector<int> cover(static_cast<std::size_t>(w) * h, 0);
      for (const Region& r : split_regions(w, h, ws))
        for (int y = r.y0; y < r.y0 + r.h; ++y)
          for (int x = r.x0; x < r.x0 + r.w; ++x) ++cover[static_cast<std::size_t>(y) * w + x];
      for (int c : cover) CHECK(c == 1);
    }
  }
}

TEST_CASE("region statistics") {
  ImageTensor t = ImageTensor::filled(1, 2, 2, 7);
  const Region r{0, 0, 2, 2};
  SUBCASE("constant region") {
    const RegionStats st = region_stats(t, r, 0);
    CHECK(st.mean == 7.0);
    CHECK(st.variance == 0.0);
  }
  SUBCASE("hand-computed values") {
    t.plane(0) << 0, 0, 1, 1;
    const RegionStats st = region_stats(t, r, 0);
    CHECK(st.mean == doctest::Approx(0.5));
    CHECK(st.variance == doctest::Approx(1.0 / 3.0));
  }
  SUBCASE("single pixel is an error") {
    CHECK_THROWS(region_stats(t, Region{0, 0, 1, 1}, 0));
  }
}

TEST_CASE("standardize") {
  ImageTensor t = ImageTensor::filled(1, 2, 2, 0);
  t.plane(0) << 0, 0, 1, 1;
  const Region r{0, 0, 2, 2};
  const PlaneD z = standardize(t, r, 0);
  const double expect = 0.5 / std::sqrt(1.0 / 3.0);  // 0.866025...
  CHECK(z(0, 0) == doctest::Approx(-expect).epsilon(1e-12));
  CHECK(z(1, 1) == doctest::Approx(expect).epsilon(1e-12));
  CHECK(z.sum() == doctest::Approx(0.0).epsilon(1e-12));
  const double var = z.array().square().sum() / 3.0;
  CHECK(var == doctest::Approx(1.0).epsilon(1e-12));

  CHECK_THROWS(standardize(ImageTensor::filled(1, 2, 2, 9), r, 0));

  SUBCASE("mean 0, variance 1 for random regions") {
    const ImageTensor img = random_tensor(17, 1, 16, 16);
    for (const Region& reg : split_regions(img, 4)) {
      const PlaneD s = standardize(img, reg, 0);
      CHECK(std::abs(s.mean()) < 1e-9);
      const double v = s.array().square().sum() / (reg.pixel_count() - 1);
      CHECK(v == doctest::Approx(1.0).epsilon(1e-9));
    }
  }
  SUBCASE("idempotent on already-standardized samples") {
    const ImageTensor img = random_tensor(18, 1, 8, 8);
    const Region whole{0, 0, 8, 8};
    const PlaneD once = standardize(img, whole, 0);
    const PlaneD twice = standardize(once, whole);
    CHECK((twice - once).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("png round-trip is the identity") {
  const fs::path dir = temp_dir();
  SUBCASE("rgb") {
    const ImageTensor t = random_tensor(3, 3, 21, 17);
    save_image(t, dir / "rt_rgb.png");
    CHECK(load_image(dir / "rt_rgb.png") == t);
  }
  SUBCASE("gray") {
    const ImageTensor t = random_tensor(4, 1, 9, 5);
    save_image(t, dir / "rt_gray.png");
    CHECK(load_image(dir / "rt_gray.png") == t);
  }
  SUBCASE("one pixel") {
    const ImageTensor t = ImageTensor::filled(1, 1, 1, 204);
    save_image(t, dir / "one.png");
    CHECK(load_image(dir / "one.png") == t);
  }
  SUBCASE("all black 2x2") {
    const ImageTensor t = ImageTensor::filled(3, 2, 2, 0);
    save_image(t, dir / "black.png");
    const ImageTensor back = load_image(dir / "black.png");
    CHECK(back == t);
    CHECK(back.sample_count() == 12);
  }
}

TEST_CASE("lossy output extension refused") {
  const ImageTensor t = ImageTensor::filled(1, 2, 2, 1);
  CHECK_THROWS(save_image(t, temp_dir() / "out.jpg"));
  CHECK_THROWS(save_image(t, temp_dir() / "out.bmp"));
}

TEST_CASE("decode errors") {
  const fs::path dir = temp_dir();
  SUBCASE("missing file") { CHECK_THROWS(load_image(dir / "missing.png")); }
  SUBCASE("truncated png") {
    const ImageTensor t = random_tensor(5, 3, 16, 16);
    save_image(t, dir / "whole.png");
    std::ifstream in(dir / "whole.png", std::ios::binary);
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)), {});
    std::ofstream out(dir / "trunc.png", std::ios::binary);
    out.write(bytes.data(), static_cast<long>(bytes.size() / 2));
    out.close();
    CHECK_THROWS(load_image(dir / "trunc.png"));
  }
  SUBCASE("unsupported extension") {
    std::ofstream(dir / "file.txt") << "not an image";
    CHECK_THROWS(load_image(dir / "file.txt"));
  }
}

TEST_CASE("bmp reader handles gray and rgb") {
  const fs::path dir = temp_dir();
  SUBCASE("24-bit rgb") {
    // 2x2 BMP, bottom-up, rows padded to 4 bytes (2*3=6 -> 8)
    const std::uint8_t px[2][2][3] = {{{10, 20, 30}, {40, 50, 60}},
                                      {{70, 80, 90}, {100, 110, 120}}};  // [y][x][rgb]
    std::vector<std::uint8_t> data(54 + 16, 0);
    data[0] = 'B'; data[1] = 'M';
    auto put32 = [&](int off, std::uint32_t v) {
      for (int i = 0; i < 4; ++i) data[off + i] = (v >> (8 * i)) & 0xff;
    };
    put32(2, static_cast<std::uint32_t>(data.size()));
    put32(10, 54);
    put32(14, 40);
    put32(18, 2);
    put32(22, 2);
    data[26] = 1;          // planes
    data[28] = 24;         // bpp
    put32(34, 16);         // image size
    for (int y = 0; y < 2; ++y)
      for (int x = 0; x < 2; ++x) {
        const int row = 1 - y;  // bottom-up
        const int off = 54 + row * 8 + x * 3;
        data[off + 0] = px[y][x][2];  // B
        data[off + 1] = px[y][x][1];  // G
        data[off + 2] = px[y][x][0];  // R
      }
    std::ofstream(dir / "t.bmp", std::ios::binary)
        .write(reinterpret_cast<const char*>(data.data()), static_cast<long>(data.size()));
    const ImageTensor t = load_image(dir / "t.bmp");
    CHECK(t.channel_count() == 3);
    for (int y = 0; y < 2; ++y)
      for (int x = 0; x < 2; ++x)
        for (int c = 0; c < 3; ++c) CHECK(t.plane(c)(y, x) == px[y][x][c]);
  }
}

TEST_CASE("jpeg decodes through the 8-bit path") {
  const fs::path dir = temp_dir();
  // encode a small gray jpeg with libjpeg, then load it back
  const int w = 16, h = 12;
  std::vector<std::uint8_t> pixels(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) pixels[static_cast<std::size_t>(y) * w + x] =
        static_cast<std::uint8_t>((x * 16 + y) % 256);
  write_test_jpeg(dir / "t.jpg", pixels.data(), w, h);
  const ImageTensor t = load_image(dir / "t.jpg");
  CHECK(t.channel_count() == 1);
  CHECK(t.width() == w);
  CHECK(t.height() == h);
  // lossy codec: values near, not equal
  double err = 0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      err += std::abs(static_cast<double>(t.plane(0)(y, x)) -
                      pixels[static_cast<std::size_t>(y) * w + x]);
  CHECK(err / (w * h) < 16.0);
}

TEST_CASE("bmp 8-bit grayscale palette") {
  const fs::path dir = temp_dir();
  const int w = 5, h = 3;
  const std::size_t stride = (w + 3) & ~3u;
  std::vector<std::uint8_t> data(14 + 40 + 1024 + stride * h, 0);
  data[0] = 'B'; data[1] = 'M';
  auto put32 = [&](int off, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) data[off + i] = (v >> (8 * i)) & 0xff;
  };
  put32(2, static_cast<std::uint32_t>(data.size()));
  put32(10, 14 + 40 + 1024);
  put32(14, 40);
  put32(18, w);
  put32(22, h);
  data[26] = 1;
  data[28] = 8;
  for (int i = 0; i < 256; ++i) {  // gray ramp palette, BGRA entries
    data[54 + 4 * i + 0] = static_cast<std::uint8_t>(i);
    data[54 + 4 * i + 1] = static_cast<std::uint8_t>(i);
    data[54 + 4 * i + 2] = static_cast<std::uint8_t>(i);
  }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      data[14 + 40 + 1024 + (h - 1 - y) * stride + x] =
          static_cast<std::uint8_t>(10 * y + x);
  std::ofstream(dir / "g.bmp", std::ios::binary)
      .write(reinterpret_cast<const char*>(data.data()), static_cast<long>(data.size()));
  const ImageTensor t = load_image(dir / "g.bmp");
  CHECK(t.channel_count() == 1);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) CHECK(t.plane(0)(y, x) == 10 * y + x);
}

TEST_CASE("synthetic fixtures are deterministic") {
  const ImageTensor a = synth_natural(11, 24, 24, 3);
  const ImageTensor b = synth_natural(11, 24, 24, 3);
  CHECK(a == b);
  const ImageTensor c = synth_natural(12, 24, 24, 3);
  CHECK(!(a == c));
}
