#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "vimix/image.hpp"
#include "vimix/mixer.hpp"

namespace vimix {

// Log-space permutation-count accounting across plan entries. log2_sum is the
// published sum-of-factorials form; log2_product is the standard product
// count. Channel-adjusted variants treat per-channel permutations as
// independent (space raised to the C-th power).
struct SearchSpaceEstimate {
  double log2_sum = 0.0;
  double log2_product = 0.0;
  bool per_channel_multiplier = false;
  double log2_sum_channels = 0.0;
  double log2_product_channels = 0.0;
  bool sum_exceeds_128 = false;
  bool product_exceeds_128 = false;
};

SearchSpaceEstimate search_space(const ShufflePlan& plan);

struct AttackReport {
  int ws = 0;
  int channel = 0;
  long windows_attempted = 0;
  double exact_recovery_fraction = 0.0;  // valid only when ground truth given
  bool has_truth = false;
  double runtime_seconds = 0.0;

  std::string to_record() const;
};

// Keyless min-gradient-energy reassembly of one channel. For every ws x ws
// window (scan order, left/top neighbors already fixed), tries all spatial
// permutations and keeps the one minimizing in-window VFE plus boundary
// energy. ws > 3 refused: 16 cells would mean 2e13 candidates.
std::pair<ImageTensor, AttackReport> min_vfe_attack(const ImageTensor& shuffled, int ws,
                                                    int channel,
                                                    const ImageTensor* truth = nullptr);

struct SweepRow {
  int ws = 0;
  int images = 0;
  double mean_recovery = 0.0;
  double mean_baseline = 0.0;  // seeded random placement, same windows
};

// Shuffles each corpus image uniformly at ws (seeded), attacks it, and
// reports mean recovery vs the random-placement baseline.
std::vector<SweepRow> attack_sweep(const std::vector<ImageTensor>& corpus,
                                   const std::vector<int>& ws_list, std::uint64_t seed,
                                   int channel = 0);

std::vector<SweepRow> attack_sweep_dir(const std::filesystem::path& corpus_dir,
                                       const std::vector<int>& ws_list, std::uint64_t seed,
                                       int channel = 0);

std::string sweep_table(const std::vector<SweepRow>& rows);

}  // namespace vimix
