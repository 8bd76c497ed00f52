#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <vector>

namespace vimix {

// One image channel, height x width, row major so scanlines are contiguous.
template <typename Scalar>
using Plane = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using PlaneU8 = Plane<std::uint8_t>;
using PlaneD = Plane<double>;

// Axis-aligned rectangle; the unit of VFE measurement and shuffling.
struct Region {
  int x0 = 0;  // column offset
  int y0 = 0;  // row offset
  int w = 0;
  int h = 0;

  bool operator==(const Region&) const = default;
  long pixel_count() const { return static_cast<long>(w) * h; }
};

struct RegionStats {
  double mean = 0.0;
  double variance = 0.0;  // denominator w*h - 1
};

enum class AlphaPolicy { Drop, Reject };

// C planes of identical dimensions, samples in [0,255]. Immutable by
// convention after load; mixer operations work on copies.
class ImageTensor {
 public:
  ImageTensor() = default;
  explicit ImageTensor(std::vector<PlaneU8> planes);
  static ImageTensor filled(int channels, int height, int width, std::uint8_t value);

  int channel_count() const { return static_cast<int>(planes_.size()); }
  int height() const { return planes_.empty() ? 0 : static_cast<int>(planes_[0].rows()); }
  int width() const { return planes_.empty() ? 0 : static_cast<int>(planes_[0].cols()); }
  long sample_count() const { return static_cast<long>(channel_count()) * height() * width(); }

  const PlaneU8& plane(int c) const { return planes_.at(c); }
  PlaneU8& plane(int c) { return planes_.at(c); }

  bool same_shape(const ImageTensor& other) const {
    return channel_count() == other.channel_count() && height() == other.height() &&
           width() == other.width();
  }
  bool operator==(const ImageTensor& other) const;

  std::uint64_t content_digest() const;  // FNV-1a over dims and samples

 private:
  std::vector<PlaneU8> planes_;
};

// PNG, BMP or JPEG, 8-bit samples only. Grayscale -> C=1, RGB -> C=3.
ImageTensor load_image(const std::filesystem::path& path,
                       AlphaPolicy alpha = AlphaPolicy::Drop);

// Lossless write; refuses anything but a .png destination because shuffled
// output must survive a round-trip bit-exactly.
void save_image(const ImageTensor& t, const std::filesystem::path& path);

// Non-overlapping tiling. Interior regions are ws x ws; the right/bottom
// residuals keep their true smaller size. Row-major region order.
std::vector<Region> split_regions(int width, int height, int ws);
std::vector<Region> split_regions(const ImageTensor& t, int ws);

bool region_fits(const Region& r, int width, int height);

template <typename Derived>
RegionStats region_stats(const Eigen::MatrixBase<Derived>& ch, const Region& r) {
  if (r.w < 1 || r.h < 1 || r.x0 < 0 || r.y0 < 0 || r.x0 + r.w > ch.cols() ||
      r.y0 + r.h > ch.rows())
    throw std::invalid_argument("region_stats: region out of bounds");
  const long n = r.pixel_count();
  if (n < 2) throw std::invalid_argument("region_stats: variance undefined for a single pixel");
  const auto block = ch.block(r.y0, r.x0, r.h, r.w).template cast<double>();
  const double mu = block.sum() / static_cast<double>(n);
  const double ss = (block.array() - mu).square().sum();
  return {mu, ss / static_cast<double>(n - 1)};
}

RegionStats region_stats(const ImageTensor& t, const Region& r, int c);

// (I - mu) / sigma over the region; requires sigma^2 > 0.
template <typename Derived>
PlaneD standardize(const Eigen::MatrixBase<Derived>& ch, const Region& r) {
  const RegionStats st = region_stats(ch, r);
  if (st.variance <= 0.0)
    throw std::invalid_argument("standardize: constant region has zero variance");
  const double inv_sigma = 1.0 / std::sqrt(st.variance);
  return ((ch.block(r.y0, r.x0, r.h, r.w).template cast<double>().array() - st.mean) *
          inv_sigma)
      .matrix();
}

PlaneD standardize(const ImageTensor& t, const Region& r, int c);

}  // namespace vimix
