#pragma once

#include <iosfwd>
#include <vector>

#include "vimix/image.hpp"

namespace vimix {

struct VfeConfig {
  double scale_factor = 1.0;  // F
};

// Sum of squared forward differences inside the region. Gradients clamp at
// the region border (no wraparound, no cross-region pairs), giving exactly
// h*(w-1) horizontal and w*(h-1) vertical terms.
template <typename Derived>
double region_vfe(const Eigen::MatrixBase<Derived>& ch, const Region& r) {
  if (!region_fits(r, static_cast<int>(ch.cols()), static_cast<int>(ch.rows())))
    throw std::invalid_argument("region_vfe: region out of bounds");
  const auto block = ch.block(r.y0, r.x0, r.h, r.w).template cast<double>();
  double v = 0.0;
  if (r.w > 1)
    v += (block.rightCols(r.w - 1) - block.leftCols(r.w - 1)).array().square().sum();
  if (r.h > 1)
    v += (block.bottomRows(r.h - 1) - block.topRows(r.h - 1)).array().square().sum();
  return v;
}

double region_vfe(const ImageTensor& t, const Region& r, int c);

// per-region VFE averaged over channels (the Alg.-1 split criterion)
double region_vfe_channel_mean(const ImageTensor& t, const Region& r);

// F/(N1*N2) * sum of region VFEs over the ws-tiling of one channel
double image_vfe(const ImageTensor& t, int c, int ws, const VfeConfig& cfg = {});

// arithmetic mean of image_vfe across channels
double multichannel_vfe(const ImageTensor& t, int ws, const VfeConfig& cfg = {});

// VFE_R / (2 sigma^2); follows chi-square with 2*WS*(WS-1) df under the
// shuffled-region independence model.
double normalized_region_statistic(const ImageTensor& t, const Region& r, int c);

template <typename Derived>
double normalized_region_statistic(const Eigen::MatrixBase<Derived>& ch, const Region& r) {
  const RegionStats st = region_stats(ch, r);
  if (st.variance <= 0.0)
    throw std::invalid_argument("normalized_region_statistic: constant region");
  return region_vfe(ch, r) / (2.0 * st.variance);
}

struct VfeReport {
  struct Row {
    Region region;
    int channel;
    double vfe;
  };
  int ws = 0;
  std::vector<Row> per_region;               // one row per (region, channel)
  std::vector<double> region_channel_mean;   // per region, averaged over channels
  std::vector<double> per_channel_image_vfe;
  double image_vfe = 0.0;        // equals multichannel_vfe; single-channel: Eq-3 value
  double multichannel_vfe = 0.0;
  double median_region_vfe = 0.0;  // lower median of region_channel_mean
};

VfeReport vfe_report(const ImageTensor& t, int ws, const VfeConfig& cfg = {});

// line format: x0,y0,w,h,channel,vfe  followed by a summary record
void write_report(std::ostream& os, const VfeReport& rep);

// lower median (index (n-1)/2 of the sorted values)
double lower_median(std::vector<double> values);

}  // namespace vimix
