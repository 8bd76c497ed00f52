#include "vimix/mixer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "vimix/rng.hpp"
#include "vimix/vfe.hpp"

namespace vimix {

namespace {

std::uint64_t fnv1a(std::uint64_t h, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) {
    h ^= (v >> (8 * i)) & 0xff;
    h *= 0x100000001b3ULL;
  }
  return h;
}

int floor_pow2(int v) {
  int p = 1;
  while (p * 2 <= v) p *= 2;
  return p;
}

std::uint64_t entry_seed(std::uint64_t image_key, const Region& r, int ws) {
  std::uint64_t s = mix64(image_key, (static_cast<std::uint64_t>(r.x0) << 32) |
                                         static_cast<std::uint32_t>(r.y0));
  return mix64(s, (static_cast<std::uint64_t>(r.w) << 40) |
                      (static_cast<std::uint64_t>(r.h) << 16) |
                      static_cast<std::uint64_t>(ws));
}

}  // namespace

std::uint64_t MixKey::stream_key() const {
  std::uint64_t k = 0x76696d69785f6b31ULL;
  for (std::uint64_t w : master_seed) k = mix64(k, w);
  return mix64(k, image_id);
}

std::uint64_t MixKey::id_for_path(const std::string& relative_path) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : relative_path) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

MixKey MixKey::parse(const std::string& seed_hex, const std::string& relative_path) {
  if (seed_hex.size() != 64)
    throw std::invalid_argument("master seed must be 64 hex characters (256 bits)");
  MixKey key;
  for (int w = 0; w < 4; ++w) {
    std::uint64_t v = 0;
    for (int i = 0; i < 16; ++i) {
      const char c = seed_hex[w * 16 + i];
      int digit;
      if (c >= '0' && c <= '9') digit = c - '0';
      else if (c >= 'a' && c <= 'f') digit = c - 'a' + 10;
      else if (c >= 'A' && c <= 'F') digit = c - 'A' + 10;
      else throw std::invalid_argument("master seed contains a non-hex character");
      v = (v << 4) | static_cast<std::uint64_t>(digit);
    }
    key.master_seed[w] = v;
  }
  key.image_id = id_for_path(relative_path);
  return key;
}

std::string MixKey::seed_hex() const {
  static const char* digits = "0123456789abcdef";
  std::string s;
  s.reserve(64);
  for (std::uint64_t w : master_seed)
    for (int i = 15; i >= 0; --i) s += digits[(w >> (4 * i)) & 0xf];
  return s;
}

std::uint64_t ShufflePlan::digest() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  h = fnv1a(h, static_cast<std::uint64_t>(width));
  h = fnv1a(h, static_cast<std::uint64_t>(height));
  h = fnv1a(h, static_cast<std::uint64_t>(channels));
  h = fnv1a(h, static_cast<std::uint64_t>(ws_lower));
  h = fnv1a(h, static_cast<std::uint64_t>(ws_upper));
  h = fnv1a(h, static_cast<std::uint64_t>(initial_ws));
  h = fnv1a(h, static_cast<std::uint64_t>(channel_rotation));
  for (const PlanEntry& e : entries) {
    h = fnv1a(h, (static_cast<std::uint64_t>(e.region.x0) << 32) |
                     static_cast<std::uint32_t>(e.region.y0));
    h = fnv1a(h, (static_cast<std::uint64_t>(e.region.w) << 32) |
                     static_cast<std::uint32_t>(e.region.h));
    h = fnv1a(h, static_cast<std::uint64_t>(e.ws_used));
    h = fnv1a(h, e.seed);
  }
  return h;
}

double ShufflePlan::mean_ws_used() const {
  if (entries.empty()) return 0.0;
  double s = 0.0;
  for (const PlanEntry& e : entries) s += e.ws_used;
  return s / static_cast<double>(entries.size());
}

int initial_ws(int image_size, int ws_u) {
  if (ws_u < 3) throw std::invalid_argument("initial_ws: ws_u must be >= 3");
  if (image_size < 1) throw std::invalid_argument("initial_ws: empty image");
  int ws = image_size;
  while (ws > ws_u) ws = floor_pow2(ws / 2);
  return ws;
}

ShufflePlan plan_image(const ImageTensor& t, const CalibrationResult& bounds,
                       const MixKey& key) {
  if (!bounds.feasible)
    throw std::invalid_argument("plan_image: infeasible bounds (ws_lower > ws_upper)");
  const int low = floor_pow2(bounds.ws_lower);
  const int init = initial_ws(std::max(t.width(), t.height()), bounds.ws_upper);
  if (low > init)
    throw std::invalid_argument("plan_image: ws_lower exceeds the initial window size");

  ShufflePlan plan;
  plan.width = t.width();
  plan.height = t.height();
  plan.channels = t.channel_count();
  plan.ws_lower = bounds.ws_lower;
  plan.ws_upper = bounds.ws_upper;
  plan.initial_ws = init;

  std::vector<Region> work = split_regions(t, init);
  {
    std::vector<double> vfes;
    vfes.reserve(work.size());
    for (const Region& r : work) vfes.push_back(region_vfe_channel_mean(t, r));
    plan.vfe_median = lower_median(std::move(vfes));
  }

  const std::uint64_t image_key = key.stream_key();
  CounterRng draw_rng(mix64(image_key, 0xD4A3ULL));
  const long iteration_budget = 16L * t.width() * t.height() + 1024;
  long iterations = 0;

  while (!work.empty()) {
    if (++iterations > iteration_budget)
      throw std::logic_error("plan_image: worklist failed to converge");
    const std::size_t idx =
        static_cast<std::size_t>(draw_rng.next_below(work.size()));
    const Region r = work[idx];
    work[idx] = work.back();
    work.pop_back();

    const int size = std::max(r.w, r.h);
    if (size <= low) {
      // shuffle at the low bound; windows clip to the region so border
      // residuals are permuted whole
      plan.entries.push_back({r, low, entry_seed(image_key, r, low)});
      continue;
    }
    const int half = (size + 1) / 2;
    if (region_vfe_channel_mean(t, r) <= plan.vfe_median) {
      const int ws = std::max(half, low);  // never shuffle below the lower bound
      plan.entries.push_back({r, ws, entry_seed(image_key, r, ws)});
    } else {
      for (const Region& sub : split_regions(r.w, r.h, half))
        work.push_back({r.x0 + sub.x0, r.y0 + sub.y0, sub.w, sub.h});
    }
  }
  return plan;
}

namespace {

// row-major cell coordinates of the clipped window
struct WindowIter {
  const Region& region;
  int ws;
  int windows_x, windows_y;

  WindowIter(const Region& r, int ws_in)
      : region(r),
        ws(ws_in),
        windows_x((r.w + ws_in - 1) / ws_in),
        windows_y((r.h + ws_in - 1) / ws_in) {}

  int count() const { return windows_x * windows_y; }

  Region window(int index) const {
    const int wy = index / windows_x, wx = index % windows_x;
    const int x0 = region.x0 + wx * ws;
    const int y0 = region.y0 + wy * ws;
    return {x0, y0, std::min(ws, region.x0 + region.w - x0),
            std::min(ws, region.y0 + region.h - y0)};
  }
};

}  // namespace

void shuffle_window(ImageTensor& t, const Region& r, int ws, std::uint64_t seed) {
  if (!region_fits(r, t.width(), t.height()))
    throw std::invalid_argument("shuffle_window: region out of bounds");
  if (ws < 1) throw std::invalid_argument("shuffle_window: ws must be >= 1");
  const WindowIter iter(r, ws);
  for (int w = 0; w < iter.count(); ++w) {
    const Region win = iter.window(w);
    const int n = win.w * win.h;
    if (n < 2) continue;
    for (int c = 0; c < t.channel_count(); ++c) {
      CounterRng rng(mix64(seed, static_cast<std::uint64_t>(w),
                           static_cast<std::uint64_t>(c)));
      const std::vector<std::uint32_t> perm =
          random_permutation(static_cast<std::size_t>(n), rng);
      PlaneU8& plane = t.plane(c);
      std::vector<std::uint8_t> src(static_cast<std::size_t>(n));
      for (int k = 0; k < n; ++k)
        src[static_cast<std::size_t>(k)] = plane(win.y0 + k / win.w, win.x0 + k % win.w);
      for (int k = 0; k < n; ++k)
        plane(win.y0 + k / win.w, win.x0 + k % win.w) =
            src[perm[static_cast<std::size_t>(k)]];
    }
  }
}

void unshuffle_window(ImageTensor& t, const Region& r, int ws, std::uint64_t seed) {
  if (!region_fits(r, t.width(), t.height()))
    throw std::invalid_argument("unshuffle_window: region out of bounds");
  if (ws < 1) throw std::invalid_argument("unshuffle_window: ws must be >= 1");
  const WindowIter iter(r, ws);
  for (int w = 0; w < iter.count(); ++w) {
    const Region win = iter.window(w);
    const int n = win.w * win.h;
    if (n < 2) continue;
    for (int c = 0; c < t.channel_count(); ++c) {
      CounterRng rng(mix64(seed, static_cast<std::uint64_t>(w),
                           static_cast<std::uint64_t>(c)));
      const std::vector<std::uint32_t> perm =
          random_permutation(static_cast<std::size_t>(n), rng);
      PlaneU8& plane = t.plane(c);
      std::vector<std::uint8_t> src(static_cast<std::size_t>(n));
      for (int k = 0; k < n; ++k)
        src[static_cast<std::size_t>(k)] = plane(win.y0 + k / win.w, win.x0 + k % win.w);
      for (int k = 0; k < n; ++k)
        plane(win.y0 + perm[static_cast<std::size_t>(k)] / win.w,
              win.x0 + perm[static_cast<std::size_t>(k)] % win.w) =
            src[static_cast<std::size_t>(k)];
    }
  }
}

void shuffle_window_channel_rotation(ImageTensor& t, const Region& r, int ws,
                                     std::uint64_t seed) {
  if (!region_fits(r, t.width(), t.height()))
    throw std::invalid_argument("shuffle_window_channel_rotation: region out of bounds");
  const int channels = t.channel_count();
  if (channels < 2) return;
  const WindowIter iter(r, ws);
  std::vector<std::uint8_t> vals(static_cast<std::size_t>(channels));
  for (int w = 0; w < iter.count(); ++w) {
    const Region win = iter.window(w);
    CounterRng rng(mix64(seed, static_cast<std::uint64_t>(w), 0xC07AULL));
    for (int k = 0; k < win.w * win.h; ++k) {
      const int y = win.y0 + k / win.w, x = win.x0 + k % win.w;
      const std::vector<std::uint32_t> perm =
          random_permutation(static_cast<std::size_t>(channels), rng);
      for (int c = 0; c < channels; ++c) vals[static_cast<std::size_t>(c)] = t.plane(c)(y, x);
      for (int c = 0; c < channels; ++c)
        t.plane(c)(y, x) = vals[perm[static_cast<std::size_t>(c)]];
    }
  }
}

void unshuffle_window_channel_rotation(ImageTensor& t, const Region& r, int ws,
                                       std::uint64_t seed) {
  if (!region_fits(r, t.width(), t.height()))
    throw std::invalid_argument("unshuffle_window_channel_rotation: region out of bounds");
  const int channels = t.channel_count();
  if (channels < 2) return;
  const WindowIter iter(r, ws);
  std::vector<std::uint8_t> vals(static_cast<std::size_t>(channels));
  for (int w = 0; w < iter.count(); ++w) {
    const Region win = iter.window(w);
    CounterRng rng(mix64(seed, static_cast<std::uint64_t>(w), 0xC07AULL));
    for (int k = 0; k < win.w * win.h; ++k) {
      const int y = win.y0 + k / win.w, x = win.x0 + k % win.w;
      const std::vector<std::uint32_t> perm =
          random_permutation(static_cast<std::size_t>(channels), rng);
      for (int c = 0; c < channels; ++c) vals[static_cast<std::size_t>(c)] = t.plane(c)(y, x);
      // forward wrote plane(c) = vals[perm[c]]; scatter back
      for (int c = 0; c < channels; ++c)
        t.plane(static_cast<int>(perm[static_cast<std::size_t>(c)]))(y, x) =
            vals[static_cast<std::size_t>(c)];
    }
  }
}

std::pair<ImageTensor, ShufflePlan> obfuscate_image(const ImageTensor& t,
                                                    const CalibrationResult& bounds,
                                                    const MixKey& key,
                                                    bool channel_rotation) {
  ShufflePlan plan = plan_image(t, bounds, key);
  plan.channel_rotation = channel_rotation;
  ImageTensor out = t;
  for (const PlanEntry& e : plan.entries) {
    shuffle_window(out, e.region, e.ws_used, e.seed);
    if (channel_rotation)
      shuffle_window_channel_rotation(out, e.region, e.ws_used, mix64(e.seed, 0xC07AULL));
  }
  return {std::move(out), std::move(plan)};
}

ImageTensor invert_image(const ImageTensor& shuffled, const ShufflePlan& plan) {
  if (shuffled.width() != plan.width || shuffled.height() != plan.height ||
      shuffled.channel_count() != plan.channels)
    throw std::invalid_argument("invert_image: plan does not match the image dimensions");
  ImageTensor out = shuffled;
  for (const PlanEntry& e : plan.entries) {
    if (plan.channel_rotation)
      unshuffle_window_channel_rotation(out, e.region, e.ws_used, mix64(e.seed, 0xC07AULL));
    unshuffle_window(out, e.region, e.ws_used, e.seed);
  }
  return out;
}

void write_plan(std::ostream& os, const ShufflePlan& plan) {
  os << "vimix-plan v1\n";
  os << plan.width << ' ' << plan.height << ' ' << plan.channels << '\n';
  os << plan.ws_lower << ' ' << plan.ws_upper << ' ' << plan.initial_ws << ' '
     << plan.vfe_median << ' ' << (plan.channel_rotation ? 1 : 0) << '\n';
  os << plan.entries.size() << '\n';
  for (const PlanEntry& e : plan.entries)
    os << e.region.x0 << ' ' << e.region.y0 << ' ' << e.region.w << ' ' << e.region.h
       << ' ' << e.ws_used << ' ' << e.seed << '\n';
}

ShufflePlan read_plan(std::istream& is) {
  std::string magic, version;
  is >> magic >> version;
  if (magic != "vimix-plan" || version != "v1")
    throw std::runtime_error("read_plan: not a vimix plan file");
  ShufflePlan plan;
  int rotation = 0;
  std::size_t n = 0;
  is >> plan.width >> plan.height >> plan.channels;
  is >> plan.ws_lower >> plan.ws_upper >> plan.initial_ws >> plan.vfe_median >> rotation;
  is >> n;
  plan.channel_rotation = rotation != 0;
  plan.entries.resize(n);
  for (PlanEntry& e : plan.entries)
    is >> e.region.x0 >> e.region.y0 >> e.region.w >> e.region.h >> e.ws_used >> e.seed;
  if (!is) throw std::runtime_error("read_plan: truncated plan file");
  return plan;
}

namespace {

bool supported_image(const std::filesystem::path& p) {
  std::string e = p.extension().string();
  std::transform(e.begin(), e.end(), e.begin(), [](unsigned char c) { return std::tolower(c); });
  return e == ".png" || e == ".bmp" || e == ".jpg" || e == ".jpeg";
}

std::uint64_t config_digest(const DatasetConfig& cfg) {
  std::ostringstream os;
  os << cfg.target_vfe << '|' << cfg.q << '|' << cfg.d << '|' << cfg.alpha << '|'
     << cfg.kernel.mu_w << '|' << cfg.kernel.sigma_w << '|' << cfg.alpha0_samples << '|'
     << cfg.alpha0_seed << '|' << cfg.channel_rotation;
  const std::string s = os.str();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

DatasetSummary obfuscate_dataset(const std::filesystem::path& in_dir,
                                 const std::filesystem::path& out_dir,
                                 const std::filesystem::path& key_file,
                                 const DatasetConfig& cfg) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(in_dir))
    throw std::runtime_error("obfuscate_dataset: not a directory: " + in_dir.string());
  fs::create_directories(out_dir);

  std::vector<fs::path> inputs;
  for (const auto& entry : fs::recursive_directory_iterator(in_dir))
    if (entry.is_regular_file() && supported_image(entry.path()))
      inputs.push_back(fs::relative(entry.path(), in_dir));
  std::sort(inputs.begin(), inputs.end());

  // alpha0 / WS_u are image-independent; WS_l depends on each image's size
  const double alpha0 = estimate_alpha0(cfg.d, cfg.kernel, cfg.alpha0_samples, cfg.alpha0_seed);
  const UpperBound ub = upper_bound_ws(cfg.alpha, alpha0);

  struct Record {
    bool ok = false;
    std::uint64_t image_id = 0;
    std::uint64_t plan_digest = 0;
    std::size_t regions = 0;
    int ws_lower = 0;
    double vfe_before = 0.0, vfe_after = 0.0, mean_ws = 0.0;
  };
  std::vector<Record> records(inputs.size());

  std::mutex log_mutex;
  auto process = [&](std::size_t i) {
    const fs::path rel = inputs[i];
    Record& rec = records[i];
    try {
      const ImageTensor img = load_image(in_dir / rel);
      CalibrationResult bounds;
      bounds.alpha0 = alpha0;
      bounds.alpha = cfg.alpha;
      bounds.d = cfg.d;
      bounds.m = ub.m;
      bounds.ws_upper = ub.ws_u;
      bounds.target_vfe = cfg.target_vfe;
      bounds.q = cfg.q;
      bounds.ws_lower = lower_bound_ws(cfg.target_vfe, img.width(), img.height(), cfg.q);
      bounds.feasible = bounds.ws_lower <= bounds.ws_upper;
      const MixKey key = MixKey::parse(cfg.master_seed_hex, rel.generic_string());
      auto [shuffled, plan] = obfuscate_image(img, bounds, key, cfg.channel_rotation);

      fs::path out_rel = rel;
      out_rel.replace_extension(".png");
      fs::create_directories((out_dir / out_rel).parent_path());
      save_image(shuffled, out_dir / out_rel);
      if (cfg.plans_dir) {
        fs::path plan_rel = rel;
        plan_rel.replace_extension(".plan");
        fs::create_directories((*cfg.plans_dir / plan_rel).parent_path());
        std::ofstream pf(*cfg.plans_dir / plan_rel);
        write_plan(pf, plan);
      }
      rec.image_id = key.image_id;
      rec.plan_digest = plan.digest();
      rec.regions = plan.entries.size();
      rec.ws_lower = bounds.ws_lower;
      rec.vfe_before = multichannel_vfe(img, bounds.ws_lower);
      rec.vfe_after = multichannel_vfe(shuffled, bounds.ws_lower);
      rec.mean_ws = plan.mean_ws_used();
      rec.ok = true;
    } catch (const std::exception& e) {
      std::lock_guard<std::mutex> lock(log_mutex);
      std::cerr << "error: " << rel.generic_string() << ": " << e.what() << "\n";
    }
  };

  const int threads = std::max(1, cfg.threads);
  if (threads == 1) {
    for (std::size_t i = 0; i < inputs.size(); ++i) process(i);
  } else {
    std::vector<std::thread> pool;
    std::size_t next = 0;
    std::mutex next_mutex;
    for (int t = 0; t < threads; ++t)
      pool.emplace_back([&] {
        for (;;) {
          std::size_t i;
          {
            std::lock_guard<std::mutex> lock(next_mutex);
            if (next >= inputs.size()) return;
            i = next++;
          }
          process(i);
        }
      });
    for (auto& th : pool) th.join();
  }

  DatasetSummary summary;
  std::ofstream kf(key_file);
  if (!kf) throw std::runtime_error("cannot write key file: " + key_file.string());
  kf << "vimix-key v1\n";
  kf << "master-seed " << cfg.master_seed_hex << "\n";
  kf << "ws-upper " << ub.ws_u << "\n";
  kf.precision(12);
  kf << "alpha0 " << alpha0 << "\n";
  kf << "config-digest " << std::hex << config_digest(cfg) << std::dec << "\n";
  long ok_count = 0;
  for (const Record& r : records)
    if (r.ok) ++ok_count;
  kf << "images " << ok_count << "\n";
  static const char* hexd = "0123456789abcdef";
  auto hex16 = [&](std::uint64_t v) {
    std::string s(16, '0');
    for (int i = 0; i < 16; ++i) s[15 - i] = hexd[(v >> (4 * i)) & 0xf];
    return s;
  };
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const Record& r = records[i];
    if (!r.ok) {
      ++summary.failed;
      continue;
    }
    kf << hex16(r.image_id) << '\t' << inputs[i].generic_string() << '\t'
       << hex16(r.plan_digest) << '\t' << r.regions << '\t' << r.ws_lower << "\n";
    ++summary.processed;
    summary.mean_vfe_before += r.vfe_before;
    summary.mean_vfe_after += r.vfe_after;
    summary.mean_ws_used += r.mean_ws;
  }
  if (summary.processed > 0) {
    summary.mean_vfe_before /= static_cast<double>(summary.processed);
    summary.mean_vfe_after /= static_cast<double>(summary.processed);
    summary.mean_ws_used /= static_cast<double>(summary.processed);
  }
  return summary;
}

}  // namespace vimix
