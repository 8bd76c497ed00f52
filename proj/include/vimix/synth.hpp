#pragma once

#include <cstdint>
#include <vector>

#include "vimix/image.hpp"

namespace vimix {

// Procedural natural-looking fixture: smooth ramp + soft blobs + low-frequency
// value noise + mild grain. Deterministic for a fixed seed.
ImageTensor synth_natural(std::uint64_t seed, int width, int height, int channels);

std::vector<ImageTensor> synth_corpus(std::uint64_t seed, int count, int width, int height,
                                      int channels);

}  // namespace vimix
