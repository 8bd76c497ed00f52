#pragma once

#include <array>
#include <cstdint>
#include <string>

namespace vimix {

// Convolution/pooling base case the window-size upper bound is derived from:
// 2x2 kernel, stride 1, 2x2 max-pooling with stride 2.
struct KernelModel {
  double mu_w = 0.0;
  double sigma_w = 1.0;
  int kernel_size = 2;
  int conv_stride = 1;
  int pool_size = 2;
  int pool_stride = 2;

  void validate() const;
};

// Occurrence counts of the 16 weight-subset expressions the pooled output can
// take over all 512 binary 3x3 inputs x 5 sign patterns of the sorted kernel.
struct InductionTable {
  // indexed by subset mask, bit k set <=> w_{k+1} participates
  std::array<long, 16> counts{};

  long total() const;
  long count_for(const std::string& label) const;  // e.g. "0", "w1", "w2+w3"
  static std::string label(int mask);
  // the publication row order: by subset size, then lexicographic
  static const std::array<int, 16>& row_order();
};

InductionTable enumerate_induction_table();

// Normal approximation of the distribution of the region-averaged normalized
// VFE statistic of a whole-window-shuffled image.
struct ShuffleDistributionModel {
  double mean;      // 2*WS*(WS-1)
  double variance;  // 4*WS^3*(WS-1)/(w*h)
};

ShuffleDistributionModel vfe_shuffle_distribution(int ws, int width, int height);

// Smallest WS >= 2 whose shuffled-VFE distribution exceeds target_vfe with
// probability >= q (mean - z_q * sd >= target). Throws if none <= 256 works.
int lower_bound_ws(double target_vfe, int width, int height, double q = 0.5);

// P(diff_max <= d) for one window, diff_max = sum |w_i| over a fresh kernel
// draw w_i ~ N(mu_w, sigma_w). Deterministic for fixed (seed, n, shards);
// shard count is part of the specification, not inferred from hardware.
double estimate_alpha0(double d, const KernelModel& km, long n, std::uint64_t seed,
                       int shards = 8);

// Experimental alternative reading: diff of two pooled-output expressions
// sampled from the induction-table frequencies. No acceptance weight.
double estimate_alpha0_table_sampled(double d, const KernelModel& km, long n,
                                     std::uint64_t seed, int shards = 8);

struct UpperBound {
  double m;
  int ws_u;  // ws0 + 2*floor(m)
};

// m = sqrt(log_alpha0(alpha)); requires 0 < alpha <= alpha0 < 1.
UpperBound upper_bound_ws(double alpha, double alpha0, int ws0 = 3);

struct CalibrationResult {
  int ws_lower = 0;
  int ws_upper = 0;
  double alpha0 = 0.0;
  double alpha = 0.0;
  double d = 0.0;
  double m = 0.0;
  double target_vfe = 0.0;
  double q = 0.5;
  bool feasible = false;  // ws_lower <= ws_upper

  std::string to_record() const;  // single-line text record
};

struct CalibrationInputs {
  double d = 4.0;
  double alpha = 0.05;
  double target_vfe = 100.0;
  double q = 0.5;
  KernelModel kernel;
  long samples = 1'000'000;
  std::uint64_t seed = 0x5eed'0001;
  int width = 224;
  int height = 224;
  bool table_sampled_alpha0 = false;
};

CalibrationResult calibrate(const CalibrationInputs& in);

}  // namespace vimix
