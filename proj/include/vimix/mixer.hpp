#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "vimix/calibration.hpp"
#include "vimix/image.hpp"

namespace vimix {

// Deterministic identity of one obfuscation: a 256-bit master seed plus a
// stable per-image id. Identical (master_seed, image_id, image) always yields
// an identical plan and output.
struct MixKey {
  std::array<std::uint64_t, 4> master_seed{};
  std::uint64_t image_id = 0;

  std::uint64_t stream_key() const;
  static std::uint64_t id_for_path(const std::string& relative_path);  // FNV-1a
  static MixKey parse(const std::string& seed_hex, const std::string& relative_path);
  std::string seed_hex() const;
};

struct PlanEntry {
  Region region;
  int ws_used = 0;
  std::uint64_t seed = 0;
};

struct ShufflePlan {
  int width = 0, height = 0, channels = 0;
  int ws_lower = 0, ws_upper = 0, initial_ws = 0;
  double vfe_median = 0.0;
  bool channel_rotation = false;  // experimental per-position channel permutation
  std::vector<PlanEntry> entries;

  std::uint64_t digest() const;
  double mean_ws_used() const;
};

// Alg.-1 window seeding: start from the image size, then repeatedly drop to
// 2^floor(log2(WS/2)) until the value is <= ws_u.
int initial_ws(int image_size, int ws_u);

ShufflePlan plan_image(const ImageTensor& t, const CalibrationResult& bounds,
                       const MixKey& key);

// In-window spatial permutation per channel. Tiles the region by ws; windows
// clipped at the region border keep their true size. Each (window, channel)
// stream is independent, so per-channel permutations decorrelate channels.
void shuffle_window(ImageTensor& t, const Region& r, int ws, std::uint64_t seed);
void unshuffle_window(ImageTensor& t, const Region& r, int ws, std::uint64_t seed);

// experimental alternative semantics: permute channel values at fixed positions
void shuffle_window_channel_rotation(ImageTensor& t, const Region& r, int ws,
                                     std::uint64_t seed);
void unshuffle_window_channel_rotation(ImageTensor& t, const Region& r, int ws,
                                       std::uint64_t seed);

std::pair<ImageTensor, ShufflePlan> obfuscate_image(const ImageTensor& t,
                                                    const CalibrationResult& bounds,
                                                    const MixKey& key,
                                                    bool channel_rotation = false);

// Exact inverse; a test oracle, the serving pipeline never inverts.
ImageTensor invert_image(const ImageTensor& shuffled, const ShufflePlan& plan);

void write_plan(std::ostream& os, const ShufflePlan& plan);
ShufflePlan read_plan(std::istream& is);

struct DatasetConfig {
  std::string master_seed_hex;  // 64 hex chars
  double target_vfe = 100.0;
  double q = 0.5;
  double d = 4.0;
  double alpha = 0.05;  // alpha <= alpha0^9 at d=4 -> ws_u = 9, feasible with ws_l = 8
  KernelModel kernel;
  long alpha0_samples = 1'000'000;
  std::uint64_t alpha0_seed = 0x5eed'0001;
  int threads = 1;
  bool channel_rotation = false;
  std::optional<std::filesystem::path> plans_dir;  // when set, write one plan per image
};

struct DatasetSummary {
  long processed = 0;
  long failed = 0;
  double mean_vfe_before = 0.0;
  double mean_vfe_after = 0.0;
  double mean_ws_used = 0.0;
};

// Obfuscates every supported image under in_dir into out_dir (always .png),
// mirroring the directory structure, and writes the key file. Per-file errors
// are logged and skipped; `failed` counts them.
DatasetSummary obfuscate_dataset(const std::filesystem::path& in_dir,
                                 const std::filesystem::path& out_dir,
                                 const std::filesystem::path& key_file,
                                 const DatasetConfig& cfg);

}  // namespace vimix
