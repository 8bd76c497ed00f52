#include "vimix/synth.hpp"

#include <algorithm>
#include <cmath>

#include "vimix/rng.hpp"

namespace vimix {

namespace {

// bilinear value noise over a coarse random lattice
struct ValueNoise {
  int lattice_w, lattice_h, cell;
  std::vector<double> values;

  ValueNoise(CounterRng& rng, int width, int height, int cell_size) : cell(cell_size) {
    lattice_w = width / cell + 2;
    lattice_h = height / cell + 2;
    values.resize(static_cast<std::size_t>(lattice_w) * lattice_h);
    for (double& v : values) v = rng.next_unit() * 2.0 - 1.0;
  }

  double at(int x, int y) const {
    const double fx = static_cast<double>(x) / cell;
    const double fy = static_cast<double>(y) / cell;
    const int ix = static_cast<int>(fx), iy = static_cast<int>(fy);
    const double tx = fx - ix, ty = fy - iy;
    auto v = [&](int gx, int gy) {
      return values[static_cast<std::size_t>(gy) * lattice_w + gx];
    };
    const double a = v(ix, iy) * (1 - tx) + v(ix + 1, iy) * tx;
    const double b = v(ix, iy + 1) * (1 - tx) + v(ix + 1, iy + 1) * tx;
    return a * (1 - ty) + b * ty;
  }
};

}  // namespace

ImageTensor synth_natural(std::uint64_t seed, int width, int height, int channels) {
  CounterRng rng(mix64(seed, 0x5f1e1dULL));

  const double angle = rng.next_unit() * 2.0 * M_PI;
  const double ramp_amp = 40.0 + rng.next_unit() * 60.0;
  const double gx = std::cos(angle), gy = std::sin(angle);
  const double base = 60.0 + rng.next_unit() * 120.0;

  struct Blob {
    double cx, cy, rx, ry, amp;
  };
  std::vector<Blob> blobs;
  const int blob_count = 2 + static_cast<int>(rng.next_below(4));
  for (int b = 0; b < blob_count; ++b)
    blobs.push_back({rng.next_unit() * width, rng.next_unit() * height,
                     width * (0.08 + 0.25 * rng.next_unit()),
                     height * (0.08 + 0.25 * rng.next_unit()),
                     (rng.next_unit() - 0.4) * 140.0});

  ValueNoise coarse(rng, width, height, std::max(4, width / 6));
  ValueNoise fine(rng, width, height, std::max(2, width / 16));

  std::vector<double> chroma_shift(channels, 0.0);
  std::vector<double> chroma_gain(channels, 1.0);
  for (int c = 1; c < channels; ++c) {
    chroma_shift[c] = (rng.next_unit() - 0.5) * 40.0;
    chroma_gain[c] = 0.85 + rng.next_unit() * 0.3;
  }

  const double norm = std::sqrt(static_cast<double>(width) * width +
                                static_cast<double>(height) * height);
  std::vector<PlaneU8> planes(channels, PlaneU8(height, width));
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      double luma = base + ramp_amp * (gx * x + gy * y) / norm;
      for (const Blob& b : blobs) {
        const double dx = (x - b.cx) / b.rx, dy = (y - b.cy) / b.ry;
        luma += b.amp * std::exp(-(dx * dx + dy * dy));
      }
      luma += 28.0 * coarse.at(x, y) + 10.0 * fine.at(x, y);
      const double grain = (rng.next_unit() - 0.5) * 6.0;
      for (int c = 0; c < channels; ++c) {
        const double v = (luma + grain) * chroma_gain[c] + chroma_shift[c];
        planes[c](y, x) = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
      }
    }
  return ImageTensor(std::move(planes));
}

std::vector<ImageTensor> synth_corpus(std::uint64_t seed, int count, int width, int height,
                                      int channels) {
  std::vector<ImageTensor> corpus;
  corpus.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i)
    corpus.push_back(synth_natural(mix64(seed, static_cast<std::uint64_t>(i)), width,
                                   height, channels));
  return corpus;
}

}  // namespace vimix
