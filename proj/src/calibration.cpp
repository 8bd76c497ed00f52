#include "vimix/calibration.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <vector>

#include "vimix/rng.hpp"
#include "vimix/stats.hpp"

namespace vimix {

void KernelModel::validate() const {
  if (sigma_w <= 0.0) throw std::invalid_argument("KernelModel: sigma_w must be positive");
  if (kernel_size != 2 || conv_stride != 1 || pool_size != 2 || pool_stride != 2)
    throw std::invalid_argument("KernelModel: only the 2x2/stride-1/2x2-pool base case is modeled");
}

long InductionTable::total() const {
  long t = 0;
  for (long c : counts) t += c;
  return t;
}

std::string InductionTable::label(int mask) {
  if (mask == 0) return "0";
  std::string s;
  for (int k = 0; k < 4; ++k)
    if (mask >> k & 1) {
      if (!s.empty()) s += " + ";
      s += "w" + std::to_string(k + 1);
    }
  return s;
}

long InductionTable::count_for(const std::string& label_in) const {
  std::string key = label_in;
  key.erase(std::remove(key.begin(), key.end(), ' '), key.end());
  for (int m = 0; m < 16; ++m) {
    std::string l = label(m);
    l.erase(std::remove(l.begin(), l.end(), ' '), l.end());
    if (l == key) return counts[m];
  }
  throw std::invalid_argument("InductionTable: unknown row " + label_in);
}

const std::array<int, 16>& InductionTable::row_order() {
  static const std::array<int, 16> order = [] {
    std::array<int, 16> o{};
    for (int m = 0; m < 16; ++m) o[m] = m;
    auto indices = [](int m) {
      std::array<int, 4> ix{9, 9, 9, 9};
      int n = 0;
      for (int k = 0; k < 4; ++k)
        if (m >> k & 1) ix[n++] = k;
      return std::pair<int, std::array<int, 4>>{n, ix};
    };
    std::sort(o.begin(), o.end(), [&](int a, int b) { return indices(a) < indices(b); });
    return o;
  }();
  return order;
}

namespace {

// One reference kernel per monotone sign pattern of the sorted weights
// w1 >= w2 >= w3 >= w4. `value[p]` is the signed weight at kernel position p
// (TL, TR, BL, BR) and `rank[p]` its index in the sorted order. The values
// are integer representatives chosen so that every max-pool comparison in the
// enumeration below is strict; the resulting counts depend only on the
// realized ordering of subset sums, not on the exact magnitudes.
struct ReferenceKernel {
  int value[4];
  int rank[4];
};

constexpr ReferenceKernel kReferenceKernels[5] = {
    // ++++  [[w1,w3],[w4,w2]]
    {{8, 2, 1, 4}, {0, 2, 3, 1}},
    // +++-  [[w1,w3],[w4,w2]]
    {{4, 1, -7, 2}, {0, 2, 3, 1}},
    // ++--  [[w1,w2],[w4,w3]]
    {{2, 1, -8, -4}, {0, 1, 3, 2}},
    // +---  [[w1,w3],[w4,w2]]
    {{1, -4, -8, -2}, {0, 2, 3, 1}},
    // ----  [[w1,w2],[w4,w3]]
    {{-1, -2, -8, -4}, {0, 1, 3, 2}},
};

}  // namespace

InductionTable enumerate_induction_table() {
  InductionTable table{};
  // cell index of kernel position p for the window anchored at (wy, wx)
  auto cell_of = [](int wy, int wx, int p) {
    const int ky = p / 2, kx = p % 2;
    return (wy + ky) * 3 + (wx + kx);
  };
  for (const ReferenceKernel& kern : kReferenceKernels) {
    for (int bits = 0; bits < 512; ++bits) {
      int best_val = 0;
      int best_mask = -1;
      bool ambiguous = false;
      for (int wy = 0; wy < 2; ++wy)
        for (int wx = 0; wx < 2; ++wx) {
          int val = 0;
          int mask = 0;
          for (int p = 0; p < 4; ++p)
            if (bits >> cell_of(wy, wx, p) & 1) {
              val += kern.value[p];
              mask |= 1 << kern.rank[p];
            }
          if (best_mask < 0 || val > best_val) {
            best_val = val;
            best_mask = mask;
            ambiguous = false;
          } else if (val == best_val && mask != best_mask) {
            ambiguous = true;
          }
        }
      if (ambiguous)
        throw std::logic_error("enumerate_induction_table: reference kernel produced a tie");
      ++table.counts[best_mask];
    }
  }
  return table;
}

ShuffleDistributionModel vfe_shuffle_distribution(int ws, int width, int height) {
  if (ws < 2) throw std::invalid_argument("vfe_shuffle_distribution: ws must be >= 2");
  if (width < 1 || height < 1)
    throw std::invalid_argument("vfe_shuffle_distribution: empty image");
  const double w = width, h = height, s = ws;
  return {2.0 * s * (s - 1.0), 4.0 * s * s * s * (s - 1.0) / (w * h)};
}

int lower_bound_ws(double target_vfe, int width, int height, double q) {
  if (target_vfe <= 0.0) throw std::invalid_argument("lower_bound_ws: target must be positive");
  if (q <= 0.0 || q >= 1.0) throw std::invalid_argument("lower_bound_ws: q outside (0,1)");
  const double z = normal_quantile(q);
  for (int ws = 2; ws <= 256; ++ws) {
    const ShuffleDistributionModel m = vfe_shuffle_distribution(ws, width, height);
    if (m.mean - z * std::sqrt(m.variance) >= target_vfe) return ws;
  }
  throw std::runtime_error("lower_bound_ws: no window size <= 256 reaches the target VFE");
}

namespace {

template <typename PerDraw>
double sharded_fraction(long n, std::uint64_t seed, int shards, PerDraw per_draw) {
  if (n < 10'000) throw std::invalid_argument("sample count must be >= 1e4");
  if (shards < 1) throw std::invalid_argument("shard count must be >= 1");
  std::vector<long> hits(shards, 0);
  auto run_shard = [&](int s) {
    const long base = n / shards;
    const long count = base + (s == shards - 1 ? n % shards : 0);
    CounterRng rng(mix64(seed, static_cast<std::uint64_t>(s), 0xA1FA0ULL));
    long h = 0;
    for (long i = 0; i < count; ++i)
      if (per_draw(rng)) ++h;
    hits[s] = h;
  };
  std::vector<std::thread> pool;
  pool.reserve(shards);
  for (int s = 0; s < shards; ++s) pool.emplace_back(run_shard, s);
  for (auto& t : pool) t.join();
  long total = 0;
  for (long h : hits) total += h;
  return static_cast<double>(total) / static_cast<double>(n);
}

}  // namespace

double estimate_alpha0(double d, const KernelModel& km, long n, std::uint64_t seed,
                       int shards) {
  km.validate();
  if (d < 0.0) throw std::invalid_argument("estimate_alpha0: d must be nonnegative");
  return sharded_fraction(n, seed, shards, [&km, d](CounterRng& rng) {
    double diff = 0.0;
    for (int k = 0; k < 4; ++k)
      diff += std::abs(km.mu_w + km.sigma_w * rng.next_normal());
    return diff <= d;
  });
}

double estimate_alpha0_table_sampled(double d, const KernelModel& km, long n,
                                     std::uint64_t seed, int shards) {
  km.validate();
  if (d <= 0.0) throw std::invalid_argument("estimate_alpha0_table_sampled: d must be positive");
  const InductionTable table = enumerate_induction_table();
  std::array<long, 16> cumulative{};
  long running = 0;
  for (int m = 0; m < 16; ++m) {
    running += table.counts[m];
    cumulative[m] = running;
  }
  const long total = running;
  return sharded_fraction(n, seed, shards, [&, d](CounterRng& rng) {
    double w[4];
    for (double& x : w) x = km.mu_w + km.sigma_w * rng.next_normal();
    std::sort(w, w + 4, std::greater<>());
    auto sample_expr = [&]() {
      const long u = static_cast<long>(rng.next_below(static_cast<std::uint64_t>(total)));
      int m = 0;
      while (cumulative[m] <= u) ++m;
      double v = 0.0;
      for (int k = 0; k < 4; ++k)
        if (m >> k & 1) v += w[k];
      return v;
    };
    return std::abs(sample_expr() - sample_expr()) <= d;
  });
}

UpperBound upper_bound_ws(double alpha, double alpha0, int ws0) {
  if (alpha0 <= 0.0 || alpha0 >= 1.0)
    throw std::invalid_argument("upper_bound_ws: alpha0 must lie strictly inside (0,1)");
  if (alpha <= 0.0 || alpha > alpha0)
    throw std::invalid_argument("upper_bound_ws: need 0 < alpha <= alpha0 (infeasible confidence)");
  const double m = std::sqrt(std::log(alpha) / std::log(alpha0));
  // 1e-9 slack absorbs representation error of exact-power inputs
  const int ws_u = ws0 + 2 * static_cast<int>(std::floor(m + 1e-9));
  return {m, ws_u};
}

std::string CalibrationResult::to_record() const {
  std::ostringstream os;
  os.precision(12);
  os << "calibration ws_lower=" << ws_lower << " ws_upper=" << ws_upper
     << " alpha0=" << alpha0 << " alpha=" << alpha << " d=" << d << " m=" << m
     << " target_vfe=" << target_vfe << " q=" << q << " feasible=" << (feasible ? 1 : 0);
  return os.str();
}

CalibrationResult calibrate(const CalibrationInputs& in) {
  CalibrationResult out;
  out.d = in.d;
  out.alpha = in.alpha;
  out.target_vfe = in.target_vfe;
  out.q = in.q;
  out.alpha0 = in.table_sampled_alpha0
                   ? estimate_alpha0_table_sampled(in.d, in.kernel, in.samples, in.seed)
                   : estimate_alpha0(in.d, in.kernel, in.samples, in.seed);
  const UpperBound ub = upper_bound_ws(in.alpha, out.alpha0);
  out.m = ub.m;
  out.ws_upper = ub.ws_u;
  out.ws_lower = lower_bound_ws(in.target_vfe, in.width, in.height, in.q);
  out.feasible = out.ws_lower <= out.ws_upper;
  return out;
}

}  // namespace vimix
