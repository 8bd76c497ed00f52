#include "vimix/vfe.hpp"

#include <algorithm>
#include <ostream>
#include <stdexcept>

namespace vimix {

double region_vfe(const ImageTensor& t, const Region& r, int c) {
  return region_vfe(t.plane(c), r);
}

double region_vfe_channel_mean(const ImageTensor& t, const Region& r) {
  double s = 0.0;
  for (int c = 0; c < t.channel_count(); ++c) s += region_vfe(t, r, c);
  return s / t.channel_count();
}

double image_vfe(const ImageTensor& t, int c, int ws, const VfeConfig& cfg) {
  if (cfg.scale_factor <= 0.0) throw std::invalid_argument("image_vfe: F must be positive");
  double sum = 0.0;
  for (const Region& r : split_regions(t, ws)) sum += region_vfe(t, r, c);
  return cfg.scale_factor * sum / (static_cast<double>(t.width()) * t.height());
}

double multichannel_vfe(const ImageTensor& t, int ws, const VfeConfig& cfg) {
  double s = 0.0;
  for (int c = 0; c < t.channel_count(); ++c) s += image_vfe(t, c, ws, cfg);
  return s / t.channel_count();
}

double normalized_region_statistic(const ImageTensor& t, const Region& r, int c) {
  return normalized_region_statistic(t.plane(c), r);
}

double lower_median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("lower_median: empty");
  const std::size_t k = (values.size() - 1) / 2;
  std::nth_element(values.begin(), values.begin() + k, values.end());
  return values[k];
}

VfeReport vfe_report(const ImageTensor& t, int ws, const VfeConfig& cfg) {
  VfeReport rep;
  rep.ws = ws;
  const std::vector<Region> regions = split_regions(t, ws);
  const int channels = t.channel_count();
  rep.per_region.reserve(regions.size() * channels);
  rep.region_channel_mean.reserve(regions.size());
  std::vector<double> channel_sum(channels, 0.0);
  for (const Region& r : regions) {
    double region_sum = 0.0;
    for (int c = 0; c < channels; ++c) {
      const double v = region_vfe(t, r, c);
      rep.per_region.push_back({r, c, v});
      channel_sum[c] += v;
      region_sum += v;
    }
    rep.region_channel_mean.push_back(region_sum / channels);
  }
  const double area = static_cast<double>(t.width()) * t.height();
  double mc = 0.0;
  for (int c = 0; c < channels; ++c) {
    rep.per_channel_image_vfe.push_back(cfg.scale_factor * channel_sum[c] / area);
    mc += rep.per_channel_image_vfe.back();
  }
  rep.multichannel_vfe = mc / channels;
  rep.image_vfe = rep.multichannel_vfe;
  rep.median_region_vfe = lower_median(rep.region_channel_mean);
  return rep;
}

void write_report(std::ostream& os, const VfeReport& rep) {
  for (const auto& row : rep.per_region)
    os << row.region.x0 << ',' << row.region.y0 << ',' << row.region.w << ','
       << row.region.h << ',' << row.channel << ',' << row.vfe << '\n';
  os << "summary ws=" << rep.ws << " regions=" << rep.region_channel_mean.size()
     << " image_vfe=" << rep.image_vfe << " multichannel_vfe=" << rep.multichannel_vfe
     << " median_region_vfe=" << rep.median_region_vfe << '\n';
}

}  // namespace vimix
