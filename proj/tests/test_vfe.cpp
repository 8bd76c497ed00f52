#include <doctest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "vimix/image.hpp"
#include "vimix/mixer.hpp"
#include "vimix/rng.hpp"
#include "vimix/stats.hpp"
#include "vimix/synth.hpp"
#include "vimix/vfe.hpp"

using namespace vimix;

namespace {

// iid standard-normal region as a double plane
PlaneD normal_plane(CounterRng& rng, int n) {
  PlaneD p(n, n);
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) p(y, x) = rng.next_normal();
  return p;
}

}  // namespace

TEST_CASE("region vfe basics") {
  SUBCASE("constant region is zero") {
    const ImageTensor t = ImageTensor::filled(1, 4, 4, 9);
    CHECK(region_vfe(t, {0, 0, 4, 4}, 0) == 0.0);
  }
  SUBCASE("vertical edge gives two unit horizontal terms") {
    ImageTensor t = ImageTensor::filled(1, 2, 2, 0);
    t.plane(0) << 0, 1, 0, 1;  // I(x=1, y) = 1
    CHECK(region_vfe(t, {0, 0, 2, 2}, 0) == 2.0);
  }
  SUBCASE("single pixel has no neighbor pairs") {
    const ImageTensor t = ImageTensor::filled(1, 3, 3, 5);
    CHECK(region_vfe(t, {1, 1, 1, 1}, 0) == 0.0);
  }
  SUBCASE("term count matches h(w-1) + w(h-1)") {
    // I(x,y) = x + y makes every gradient term exactly 1
    const int w = 7, h = 5;
    PlaneD p(h, w);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) p(y, x) = x + y;
    CHECK(region_vfe(p, {0, 0, w, h}) == doctest::Approx(h * (w - 1) + w * (h - 1)));
  }
}

TEST_CASE("image vfe normalization and linearity in F") {
  ImageTensor t = ImageTensor::filled(1, 2, 2, 0);
  t.plane(0) << 0, 1, 0, 1;
  CHECK(image_vfe(t, 0, 2, {1.0}) == doctest::Approx(0.5));
  CHECK(image_vfe(t, 0, 2, {2.0}) == doctest::Approx(1.0));
  SUBCASE("constant image is zero at any ws") {
    const ImageTensor c = ImageTensor::filled(1, 12, 12, 77);
    for (int ws : {1, 2, 3, 5, 12}) CHECK(image_vfe(c, 0, ws) == 0.0);
  }
}

TEST_CASE("multichannel vfe is the channel mean") {
  ImageTensor t = ImageTensor::filled(2, 2, 2, 0);
  t.plane(0) << 0, 1, 0, 1;  // vfe 2 -> image 0.5
  t.plane(1) << 0, 3, 0, 3;  // vfe 18 -> image 4.5
  CHECK(multichannel_vfe(t, 2) == doctest::Approx((0.5 + 4.5) / 2));
  SUBCASE("identical channels equal any single channel") {
    const ImageTensor s = synth_natural(3, 16, 16, 1);
    std::vector<PlaneU8> planes{s.plane(0), s.plane(0), s.plane(0)};
    const ImageTensor rgb{std::move(planes)};
    CHECK(multichannel_vfe(rgb, 4) == doctest::Approx(image_vfe(s, 0, 4)));
  }
  SUBCASE("single channel reduces to image_vfe") {
    const ImageTensor s = synth_natural(4, 16, 16, 1);
    CHECK(multichannel_vfe(s, 4) == doctest::Approx(image_vfe(s, 0, 4)));
  }
}

TEST_CASE("vfe invariances") {
  CounterRng rng(2024);
  PlaneD base(8, 8);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) base(y, x) = static_cast<double>(rng.next_below(100));
  const Region r{0, 0, 8, 8};
  const double v = region_vfe(base, r);
  SUBCASE("offset invariance") {
    const PlaneD shifted = base.array() + 37.0;
    CHECK(region_vfe(shifted, r) == doctest::Approx(v).epsilon(1e-12));
  }
  SUBCASE("quadratic scaling") {
    const PlaneD scaled = base.array() * 3.0;
    CHECK(region_vfe(scaled, r) == doctest::Approx(9.0 * v).epsilon(1e-12));
  }
}

TEST_CASE("normalized region statistic") {
  SUBCASE("direct arithmetic") {
    ImageTensor t = ImageTensor::filled(1, 2, 2, 0);
    t.plane(0) << 0, 1, 0, 1;  // vfe 2, variance 1/3
    CHECK(normalized_region_statistic(t, {0, 0, 2, 2}, 0) ==
          doctest::Approx(2.0 / (2.0 / 3.0)));  // = 3.0
  }
  SUBCASE("constant region is an error") {
    const ImageTensor t = ImageTensor::filled(1, 2, 2, 4);
    CHECK_THROWS(normalized_region_statistic(t, {0, 0, 2, 2}, 0));
  }
  SUBCASE("mean approximately equals the df") {
    CounterRng rng(99);
    const int trials = 10000;
    double s8 = 0.0, s2 = 0.0;
    for (int i = 0; i < trials; ++i) {
      const PlaneD r8 = normal_plane(rng, 8);
      s8 += normalized_region_statistic(r8, {0, 0, 8, 8});
      const PlaneD r2 = normal_plane(rng, 2);
      s2 += normalized_region_statistic(r2, {0, 0, 2, 2});
    }
    CHECK(s8 / trials == doctest::Approx(112.0).epsilon(0.02));
    CHECK(s2 / trials == doctest::Approx(4.0).epsilon(0.02));
  }
}

TEST_CASE("df bookkeeping: independent-gradient model is exactly chi-square") {
  // the statistic built from 2*WS*(WS-1) independent standardized differences
  CounterRng rng(7177);
  for (int ws : {2, 4, 8}) {
    const int df = 2 * ws * (ws - 1);
    std::vector<double> samples(3000);
    for (double& s : samples) {
      double acc = 0.0;
      for (int k = 0; k < df; ++k) {
        const double d = rng.next_normal() * std::sqrt(2.0);  // difference ~ N(0,2)
        acc += d * d;
      }
      s = acc / 2.0;
    }
    const auto ks = ks_test(samples, [df](double x) { return chi2_cdf(df, x); });
    CHECK(ks.p_value > 0.01);
  }
}

TEST_CASE("vfe report") {
  SUBCASE("constant image: all zeros") {
    const ImageTensor t = ImageTensor::filled(1, 8, 8, 3);
    const VfeReport rep = vfe_report(t, 4);
    CHECK(rep.median_region_vfe == 0.0);
    CHECK(rep.image_vfe == 0.0);
    for (const auto& row : rep.per_region) CHECK(row.vfe == 0.0);
  }
  SUBCASE("textured half sits above the median, flat half below") {
    CounterRng rng(55);
    ImageTensor t = ImageTensor::filled(1, 16, 16, 128);
    // left half flat, right half noisy
    for (int y = 0; y < 16; ++y)
      for (int x = 8; x < 16; ++x)
        t.plane(0)(y, x) = static_cast<std::uint8_t>(rng.next_below(256));
    const VfeReport rep = vfe_report(t, 4);
    const auto regions = split_regions(t, 4);
    for (std::size_t i = 0; i < regions.size(); ++i) {
      if (regions[i].x0 >= 8)
        CHECK(rep.region_channel_mean[i] > rep.median_region_vfe);
      else
        CHECK(rep.region_channel_mean[i] <= rep.median_region_vfe);
    }
  }
  SUBCASE("internal consistency: image_vfe from per_region rows") {
    const ImageTensor t = synth_natural(8, 20, 20, 3);
    const VfeReport rep = vfe_report(t, 8);
    double sum = 0.0;
    for (const auto& row : rep.per_region) sum += row.vfe;
    const double expect = sum / (20.0 * 20.0 * 3.0);
    CHECK(rep.multichannel_vfe == doctest::Approx(expect).epsilon(1e-9));
  }
  SUBCASE("line format") {
    const ImageTensor t = synth_natural(9, 8, 8, 1);
    std::ostringstream os;
    write_report(os, vfe_report(t, 8));
    int x0, y0, w, h, c;
    char comma;
    double v;
    std::istringstream is(os.str());
    is >> x0 >> comma >> y0 >> comma >> w >> comma >> h >> comma >> c >> comma >> v;
    CHECK(is.good());
    CHECK(w == 8);
  }
}

TEST_CASE("full in-window shuffling does not decrease mean vfe") {
  const int n_images = 200;
  double before = 0.0, after = 0.0;
  for (int i = 0; i < n_images; ++i) {
    const ImageTensor img = synth_natural(mix64(0xF1Dull, i), 32, 32, 3);
    ImageTensor shuffled = img;
    shuffle_window(shuffled, {0, 0, 32, 32}, 8, mix64(0xBEEFull, i));
    before += multichannel_vfe(img, 8);
    after += multichannel_vfe(shuffled, 8);
  }
  CHECK(after / n_images >= before / n_images);
}
